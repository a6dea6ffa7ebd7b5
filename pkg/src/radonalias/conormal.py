"""Fitting cross-sections of reconstructions against the three singular
profiles produced by undersampled edges.

Models (basis functions, before the coefficient):

* ``pv_recip``: ``pv 1/x``
* ``inv_sqrt_minus``: ``-x_-^{-1/2}``
* ``log_abs``: ``log|x|``

Each is regularized by convolution with a Gaussian of standard deviation
``w`` (the smoothed Heaviside ``(1 + erf(lam t))/2`` is the Heaviside
convolved with such a Gaussian, ``w = 1/(sqrt(2) lam)``), so the fitted
profiles stay finite on a grid. The fit also carries an affine background and
excludes a core of ``core`` cells around the singular point.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.special import dawsn

from .grids import Metrics, crosscut

KINDS = ("pv_recip", "inv_sqrt_minus", "log_abs")

_TABLE_MAX = 60.0
_TABLE_STEP = 0.002
_EULER = 0.5772156649015329


class FitError(ValueError):
    """Fit rejected (too few samples or residual too large)."""


def pv_reg(x, w):
    """``pv(1/x)`` convolved with a Gaussian of width w."""
    x = np.asarray(x, dtype=float)
    return (np.sqrt(2.0) / w) * dawsn(x / (np.sqrt(2.0) * w))


@lru_cache(maxsize=None)
def _tables():
    z = np.arange(0.0, _TABLE_MAX + _TABLE_STEP / 2, _TABLE_STEP)
    # log|.| * G_1 on z >= 0: value at 0 plus the running integral of pv * G_1
    pv = pv_reg(z, 1.0)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (pv[1:] + pv[:-1]) * _TABLE_STEP)])
    log_tab = -(_EULER + np.log(2.0)) / 2.0 + cum
    # x_-^{-1/2} * G_1 on [-max, max]: 2 int_0^inf G_1(z + u^2) du
    zz = np.arange(-_TABLE_MAX, _TABLE_MAX + _TABLE_STEP / 2, _TABLE_STEP)
    nodes, weights = np.polynomial.legendre.leggauss(200)
    ua = np.sqrt(np.maximum(0.0, -zz - 9.0))
    ub = np.sqrt(np.maximum(0.0, -zz + 9.0))
    u = 0.5 * (ub - ua)[:, None] * (nodes[None, :] + 1.0) + ua[:, None]
    g = np.exp(-0.5 * (zz[:, None] + u * u) ** 2) / np.sqrt(2.0 * np.pi)
    sq_tab = (ub - ua) * (g @ weights)
    return z, log_tab, zz, sq_tab


def log_reg(x, w):
    """``log|x|`` convolved with a Gaussian of width w."""
    z, tab, _, _ = _tables()
    a = np.abs(np.asarray(x, dtype=float)) / w
    far = a > _TABLE_MAX
    out = np.interp(np.minimum(a, _TABLE_MAX), z, tab)
    out = np.where(far, np.log(np.maximum(a, 1e-300)) - 0.5 / np.maximum(a, 1.0) ** 2, out)
    return np.log(w) + out


def inv_sqrt_minus_reg(x, w):
    """``x_-^{-1/2}`` convolved with a Gaussian of width w."""
    _, _, zz, tab = _tables()
    a = np.asarray(x, dtype=float) / w
    out = np.interp(np.clip(a, -_TABLE_MAX, _TABLE_MAX), zz, tab)
    neg = np.maximum(-a, 1.0)
    out = np.where(a < -_TABLE_MAX, neg ** -0.5 * (1.0 + 3.0 / (8.0 * neg * neg)), out)
    out = np.where(a > _TABLE_MAX, 0.0, out)
    return out / np.sqrt(w)


def model(kind, x, w):
    if kind == "pv_recip":
        return pv_reg(x, w)
    if kind == "inv_sqrt_minus":
        return -inv_sqrt_minus_reg(x, w)
    if kind == "log_abs":
        return log_reg(x, w)
    raise ValueError(f"unknown model {kind!r}; expected one of {KINDS}")


@dataclass
class SingularityModel:
    kind: str
    c: float
    p0: float
    window: float
    residual: float
    w: float
    samples: int

    def row(self):
        return f"{self.kind},{self.c:.6g},{self.p0:.6g},{self.residual:.4g},{self.window:.6g}"


def _solve(t, y, kind, p0, w):
    A = np.column_stack([model(kind, t - p0, w), np.ones_like(t), t - p0])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    spread = np.linalg.norm(y - y.mean())
    rel = float(np.linalg.norm(res) / spread) if spread > 0 else 0.0
    return coef, rel


def fit_singularity(coords, values, kind, p0_guess, window, core=None, w=None,
                    refine=2.0, reject=True, min_samples=20):
    """Least-squares fit of ``c * model(p - p0) + a + b p`` near ``p0_guess``.

    Parameters
    ----------
    coords, values : array_like
        Equispaced crosscut.
    window : float
        Half-width of the fit window (physical units) about ``p0_guess``.
    core : float, optional
        Excluded half-width about ``p0``; default two samples.
    w : float, optional
        Model regularization width; default one sample.
    refine : float
        ``p0`` is searched within ``+-refine`` samples of the guess.
    """
    t = np.asarray(coords, dtype=float)
    y = np.asarray(values, dtype=float)
    h = float(np.median(np.diff(t)))
    core = 2.0 * h if core is None else core
    w = h if w is None else w
    best = None
    for p0 in p0_guess + np.linspace(-refine * h, refine * h, int(8 * refine) + 1):
        sel = (np.abs(t - p0_guess) <= window) & (np.abs(t - p0) > core)
        if sel.sum() < min_samples:
            continue
        coef, rel = _solve(t[sel], y[sel], kind, p0, w)
        if best is None or rel < best[1]:
            best = (coef, rel, p0, int(sel.sum()))
    if best is None:
        raise FitError(f"fewer than {min_samples} samples in the fit window")
    coef, rel, p0, ns = best
    fit = SingularityModel(kind, float(coef[0]), float(p0), float(window), rel, float(w), ns)
    if reject and rel > 0.5:
        raise FitError(f"{kind} fit rejected: residual {rel:.3g} > 0.5 (c={coef[0]:.4g}, p0={p0:.4g})")
    return fit


def report(fits):
    return "kind,c,p0,residual,window\n" + "".join(f.row() + "\n" for f in fits)


# ---------------------------------------------------------------------------
# corner lines
# ---------------------------------------------------------------------------

def corner_crossings(corner, m, y_cut, xlim):
    """Where the lines through ``corner`` with normals at ``j pi/m`` cross ``y = y_cut``.

    Normals at 0 and pi/2 are skipped (the edge line itself and the line
    parallel to the cut). Returns (x positions, angles, expected sign) with
    sign +1 (peak up) for lines entering the sector x > cx, y > cy.
    """
    cx, cy = corner
    out = []
    for j in range(m):
        phi = j * np.pi / m
        if np.isclose(np.cos(phi), 0.0, atol=1e-12) or np.isclose(np.sin(phi), 0.0, atol=1e-12):
            continue
        x = cx - (y_cut - cy) * np.tan(phi)
        if xlim[0] <= x <= xlim[1]:
            out.append((x, phi, 1 if phi > np.pi / 2 else -1))
    return out


def corner_line_check(recon, corner, m, y_cut, tol_cells=2.0, rel_height=1e-3,
                      detrend_cells=8.0, margin_cells=10):
    """Match peaks along the row ``y = y_cut`` to the lines through the corner.

    The row is detrended by subtracting a Gaussian-smoothed copy; upward and
    downward extrema exceeding ``rel_height * max|recon|`` are candidates.
    ``extra`` holds the matched fraction, the fraction with the expected
    sign, and the per-line records.
    """
    if abs(y_cut - corner[1]) < recon.cell:
        raise ValueError("crosscut passes through the corner; every line meets it there")
    t, v = crosscut(recon, row=y_cut)
    hp = v - gaussian_filter1d(v, detrend_cells, mode="nearest")
    thr = rel_height * np.max(np.abs(recon.values))
    peaks = []
    for i in range(1, len(hp) - 1):
        if hp[i] > thr and hp[i] > hp[i - 1] and hp[i] >= hp[i + 1]:
            peaks.append((t[i], 1, hp[i]))
        elif hp[i] < -thr and hp[i] < hp[i - 1] and hp[i] <= hp[i + 1]:
            peaks.append((t[i], -1, hp[i]))
    xlim = (t[0] + margin_cells * recon.cell, t[-1] - margin_cells * recon.cell)
    lines = corner_crossings(corner, m, y_cut, xlim)
    tol = tol_cells * recon.cell
    records = []
    for x, phi, sign in lines:
        near = [p for p in peaks if abs(p[0] - x) <= tol]
        best = max(near, key=lambda p: abs(p[2])) if near else None
        records.append({"x": x, "phi": phi, "expected_sign": sign,
                        "found": best is not None,
                        "sign": None if best is None else best[1]})
    n = len(records)
    matched = sum(r["found"] for r in records)
    signed = sum(r["found"] and r["sign"] == r["expected_sign"] for r in records)
    frac = matched / n if n else 0.0
    sfrac = signed / n if n else 0.0
    return Metrics(0.0, 0.0, [((p[0], y_cut), float(abs(p[2]))) for p in peaks],
                   {"matched_fraction": frac, "sign_fraction": sfrac, "lines": records,
                    "matched": matched, "predicted": n})
