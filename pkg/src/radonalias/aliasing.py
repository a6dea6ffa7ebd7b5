"""Geometry of aliasing: canonical shifts, Nyquist predicates, displacement
intervals of the interpolation method, band-limit estimates, and
prediction/verification of artifact locations.

Units: ``s`` is the angular step in radians (``pi/m``) and frequencies are
classical (radians per unit length). For a semiclassical phantom with
parameter h, pass ``xi0/h``; the product ``s |xi|`` is the same in either
bookkeeping.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .grids import Metrics, compare, envelope, fft2, index_to_xy, find_peaks2d
from .phantoms import taper


@dataclass(frozen=True)
class PhaseSpacePoint:
    x: tuple
    xi: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        xi = tuple(float(v) for v in self.xi)
        if xi == (0.0, 0.0):
            raise ValueError("frequency must be nonzero")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def norm(self):
        return float(np.hypot(*self.xi))

    @property
    def perp_unit(self):
        """``xi^perp / |xi|`` with ``xi^perp = (-xi2, xi1)``."""
        return np.array([-self.xi[1], self.xi[0]]) / self.norm

    @property
    def tangent_coord(self):
        """``x . xi^perp / |xi|``: signed position of x along its tangent line."""
        return float(np.dot(self.x, self.perp_unit))


def canonical_shift(pt, k, s):
    """``C_k: (x, xi) -> (x + (2 pi k / (s |xi|)) xi^perp/|xi|, xi)``."""
    if s <= 0:
        raise ValueError("s must be positive")
    if k == 0:
        return pt
    d = 2.0 * np.pi * k / (s * pt.norm)
    return PhaseSpacePoint(tuple(np.asarray(pt.x) + d * pt.perp_unit), pt.xi)


def grid_shift(xi, k_vec, s_vec):
    """``S_k: xi -> xi + 2 pi k / s`` component-wise."""
    xi = np.asarray(xi, dtype=float)
    return xi + 2.0 * np.pi * np.asarray(k_vec, dtype=float) / np.asarray(s_vec, dtype=float)


def nyquist_ok(s, B, R):
    """Strict test ``s < pi/(R B)``; returns (flag, margin = pi/(R B) - s)."""
    thr = np.pi / (R * B)
    return bool(s < thr), float(thr - s)


def alias_order(pt, s):
    """The k with ``x . xi^perp + 2 k pi/s`` in ``[-pi/s, pi/s]`` (nearest integer rule)."""
    return int(np.round(-pt.tangent_coord * pt.norm * s / (2.0 * np.pi)))


@dataclass(frozen=True)
class DisplacementInterval:
    lo: float
    hi: float
    valid: bool
    reason: str = ""


def interp_displacement_interval(pt, k, s=None):
    """Signed displacements ``-(x . xi^perp/|xi|) [2k/(2k+1), 2k/(2k-1)]`` for k >= 1.

    Measured along ``xi^perp/|xi|`` from x. Depends on xi only through its
    direction; ``s`` is accepted for symmetry with ``canonical_shift``.
    """
    if k < 1:
        raise ValueError("k must be >= 1 (use the antipodal covector for k < 0)")
    u = pt.tangent_coord
    if u == 0.0:
        return DisplacementInterval(0.0, 0.0, False, "tangent line passes through the origin")
    a = -u * 2.0 * k / (2.0 * k + 1.0)
    b = -u * 2.0 * k / (2.0 * k - 1.0)
    return DisplacementInterval(min(a, b), max(a, b), True)


def interp_position_range(u):
    """Range of the artifact's tangent coordinate for a point at tangent coordinate u.

    The union over k >= 1 of ``u - u [2k/(2k+1), 2k/(2k-1)]`` is ``u [-1, 1/3]``.
    """
    return (min(-u, u / 3.0), max(-u, u / 3.0))


# ---------------------------------------------------------------------------
# band limits
# ---------------------------------------------------------------------------

@dataclass
class BandLimitEstimate:
    B: float
    decay_profile: np.ndarray = None
    circle_coeff_profile: np.ndarray = None
    eps: float = 1e-3


def estimate_band_limit(img, h=1.0, eps=1e-3):
    """Smallest radius holding ``1 - eps`` of the spectral energy, times h.

    ``decay_profile`` has columns (shell radius, energy in shell) on shells of
    width ``pi/L``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    spec = fft2(img)
    kx, ky = spec.mesh()
    r = np.hypot(kx, ky).ravel()
    e = (np.abs(spec.values) ** 2).ravel()
    tot = e.sum()
    step = np.pi / img.half_extent
    if tot == 0:
        return BandLimitEstimate(0.0, np.zeros((0, 2)), eps=eps)
    order = np.argsort(r, kind="stable")
    cum = np.cumsum(e[order])
    idx = int(np.searchsorted(cum, (1.0 - eps) * tot))
    B = float(r[order][min(idx, len(r) - 1)])
    nb = int(np.ceil(r.max() / step)) + 1
    shells = np.bincount(np.round(r / step).astype(int), weights=e, minlength=nb)
    profile = np.column_stack([np.arange(nb) * step, shells])
    return BandLimitEstimate(h * B, profile, eps=eps)


def circle_band_limit(values, h=1.0, eps=1e-3):
    """Smallest ``B = h n*`` with ``sum_{|n| > n*} |f_n|^2 <= eps sum |f_n|^2``.

    ``values`` are equispaced samples on the circle.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    v = np.asarray(values)
    N = len(v)
    c = np.fft.fft(v) / N
    n = np.abs(np.fft.fftfreq(N, d=1.0 / N)).astype(int)
    e = np.abs(c) ** 2
    tot = e.sum()
    prof = np.column_stack([np.fft.fftfreq(N, d=1.0 / N), np.abs(c)])
    if tot == 0:
        return BandLimitEstimate(0.0, circle_coeff_profile=prof, eps=eps)
    by_n = np.bincount(n, weights=e)
    tail = tot - np.cumsum(by_n)
    nstar = int(np.argmax(tail <= eps * tot))
    return BandLimitEstimate(h * nstar, circle_coeff_profile=prof, eps=eps)


def energy_radius(img, eps=1e-4, center=(0.0, 0.0)):
    """Smallest radius about ``center`` holding ``1 - eps`` of the image energy."""
    x, y = img.mesh()
    r = np.hypot(x - center[0], y - center[1]).ravel()
    e = (img.values ** 2).ravel()
    tot = e.sum()
    if tot == 0:
        return 0.0
    order = np.argsort(r, kind="stable")
    cum = np.cumsum(e[order])
    return float(r[order][min(int(np.searchsorted(cum, (1 - eps) * tot)), len(r) - 1)])


# ---------------------------------------------------------------------------
# singular sets and predictions
# ---------------------------------------------------------------------------

def singular_set(spec, count=100):
    """Points and unit normals sampling the phantom's singular set.

    Coherent states give their center with the unit frequency direction.
    Edges are sampled inside the taper plateau (radius ``0.8 r_loc``).
    """
    c = np.asarray(spec.center)
    if spec.kind == "coherent":
        xi = np.asarray(spec.xi0) / np.hypot(*spec.xi0)
        return c[None, :], xi[None, :]
    if spec.kind == "disk":
        th = np.linspace(0, 2 * np.pi, count, endpoint=False)
        nrm = np.column_stack([np.cos(th), np.sin(th)])
        return c + spec.radius * nrm, nrm
    ca, sa = np.cos(spec.angle), np.sin(spec.angle)
    rot = np.array([[ca, -sa], [sa, ca]])
    r = 0.8 * spec.r_loc
    if spec.kind == "flat_edge":
        t = np.linspace(-r, r, count)
        loc = np.column_stack([np.zeros_like(t), t])
        nl = np.tile([1.0, 0.0], (count, 1))
    elif spec.kind == "convex_edge":
        t = np.linspace(-r, r, count)
        loc = np.column_stack([spec.a * t * t, t])
        keep = np.hypot(loc[:, 0], loc[:, 1]) <= r
        loc, t = loc[keep], t[keep]
        nl = np.column_stack([np.ones_like(t), -2.0 * spec.a * t])
        nl /= np.hypot(nl[:, 0], nl[:, 1])[:, None]
    else:
        half = count // 2
        t = np.linspace(0, r, half)
        loc = np.vstack([np.column_stack([np.zeros_like(t), t]), np.column_stack([t, np.zeros_like(t)])])
        nl = np.vstack([np.tile([1.0, 0.0], (half, 1)), np.tile([0.0, 1.0], (half, 1))])
    return c + loc @ rot.T, nl @ rot.T


@dataclass
class Artifact:
    k: int
    x: tuple
    xi: tuple
    inside: bool


@dataclass
class ArtifactPrediction:
    entries: list = field(default_factory=list)

    def inside(self):
        return [a for a in self.entries if a.inside]

    def to_table(self):
        lines = ["k,x,y,xi1,xi2,inside"]
        for a in self.entries:
            lines.append(f"{a.k},{a.x[0]:.6g},{a.x[1]:.6g},{a.xi[0]:.6g},{a.xi[1]:.6g},{int(a.inside)}")
        return "\n".join(lines) + "\n"


def predict_artifacts(spec, s, window, B=None, R=None, k_max=None, dedup=None):
    """Direct-method artifact locations ``C_k(x, xi)``, k != 0.

    Parameters
    ----------
    spec : PhantomSpec
        Coherent states use ``xi0/h``; edges use ``|xi| = B`` along each
        normal (the nearest possible artifact for the edge point).
    s : float
        Angular step.
    window : tuple
        (xmin, xmax, ymin, ymax) deciding the ``inside`` flag.
    B, R : float, optional
        Band limit (edges, required) and support radius. When both hold the
        strict Nyquist condition, no artifacts are predicted.
    k_max : int, optional
        Largest |k|; defaults to the last order whose shift can land inside
        the window.
    dedup : float, optional
        Merge predictions closer than this (default: none).
    """
    pts, nrm = singular_set(spec)
    if spec.kind == "coherent":
        mag = np.hypot(*spec.xi0) / spec.h
    else:
        if B is None:
            raise ValueError("edges need a band limit B")
        mag = B
    if B is not None and R is not None and nyquist_ok(s, B, R)[0]:
        return ArtifactPrediction([])
    xmin, xmax, ymin, ymax = window
    diag = np.hypot(xmax - xmin, ymax - ymin) + np.max(np.abs(pts))
    step = 2.0 * np.pi / (s * mag)
    kk = k_max if k_max is not None else max(1, int(np.floor(diag / step)))
    out = []
    for p, nv in zip(pts, nrm):
        pt = PhaseSpacePoint(tuple(p), tuple(mag * nv))
        for k in range(-kk, kk + 1):
            if k == 0:
                continue
            q = canonical_shift(pt, k, s)
            inside = xmin <= q.x[0] <= xmax and ymin <= q.x[1] <= ymax
            out.append(Artifact(k, q.x, q.xi, inside))
    if dedup:
        kept = []
        for a in out:
            if all(np.hypot(a.x[0] - b.x[0], a.x[1] - b.x[1]) > dedup or a.k != b.k for b in kept):
                kept.append(a)
        out = kept
    return ArtifactPrediction(out)


def verify_artifacts(prediction, recon, reference, tol_cells=2.0, peak_threshold=0.5,
                     envelope_direction=None, region=None):
    """Match peaks of |recon - reference| against the predicted locations.

    With ``envelope_direction`` the peaks are taken on the analytic-signal
    envelope of the difference (needed for oscillatory coherent-state
    replicas). ``extra`` reports per-prediction distance to the nearest peak,
    the matched count and the unmatched peaks.
    """
    m = compare(recon, reference, peak_threshold, region)
    if envelope_direction is not None:
        env = envelope(recon.with_values(recon.values - reference.values), envelope_direction)
        top = env.values.max()
        peaks = []
        if top > 0:
            for rc, mag in find_peaks2d(env.values, peak_threshold * top):
                peaks.append((index_to_xy(recon, rc), float(mag)))
        m.peak_list = peaks
    tol = tol_cells * recon.cell
    pk = np.array([p for p, _ in m.peak_list]).reshape(-1, 2)
    dists = []
    for a in prediction.inside():
        d = np.hypot(pk[:, 0] - a.x[0], pk[:, 1] - a.x[1]).min() if len(pk) else np.inf
        dists.append(float(d))
    pred = np.array([a.x for a in prediction.inside()]).reshape(-1, 2)
    unmatched = []
    for p, mag in m.peak_list:
        if not len(pred) or np.hypot(pred[:, 0] - p[0], pred[:, 1] - p[1]).min() > tol:
            unmatched.append((p, mag))
    m.extra.update({"distances": dists, "matched": int(np.sum(np.array(dists) <= tol)),
                    "predicted": len(dists), "unmatched_peaks": unmatched})
    return m


# ---------------------------------------------------------------------------
# interpolation-method displacement check
# ---------------------------------------------------------------------------

def interp_segments(points, normals):
    """Allowed artifact segments on the tangent lines of the given edge points.

    For a point with tangent coordinate u the artifact's tangent coordinate
    lies in ``u [-1, 1/3]``. Returns an array of segment endpoints (N, 2, 2);
    points whose tangent passes through the origin give degenerate segments.
    """
    segs = []
    for p, nv in zip(np.asarray(points), np.asarray(normals)):
        t = np.array([-nv[1], nv[0]])
        u = float(np.dot(p, t))
        foot = p - u * t
        lo, hi = interp_position_range(u)
        segs.append([foot + lo * t, foot + hi * t])
    return np.asarray(segs)


def distance_to_segments(q, segs):
    """Distance from each query point (M, 2) to the nearest segment (N, 2, 2)."""
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    a = segs[:, 0][None]
    b = segs[:, 1][None]
    ab = b - a
    L2 = np.sum(ab * ab, axis=-1)
    t = np.sum((q[:, None] - a) * ab, axis=-1) / np.where(L2 > 0, L2, 1.0)
    t = np.clip(np.where(L2 > 0, t, 0.0), 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.min(np.hypot(*(q[:, None] - proj).transpose(2, 0, 1)), axis=1)


def verify_interp_displacement(spec, recon, reference, peak_threshold=0.3, tol_cells=2.0, count=400):
    """Check interpolation-method artifact peaks against the tangent segments.

    Peaks of ``|recon - reference|`` above ``peak_threshold`` times its
    maximum must lie within ``tol_cells`` of a segment from
    ``interp_segments`` built on the phantom's singular set. ``extra`` holds
    the per-peak distances in cells and the fraction within tolerance.
    """
    pts, nrm = singular_set(spec, count)
    segs = interp_segments(pts, nrm)
    art = np.abs(recon.values - reference.values)
    peaks = find_peaks2d(art, peak_threshold * art.max()) if art.max() > 0 else []
    xy = np.array([index_to_xy(recon, rc) for rc, _ in peaks]).reshape(-1, 2)
    d = distance_to_segments(xy, segs) / recon.cell if len(xy) else np.zeros(0)
    frac = float(np.mean(d <= tol_cells)) if len(d) else 1.0
    return Metrics(0.0, 0.0, [(tuple(p), float(v)) for p, (_, v) in zip(xy, peaks)],
                   {"distances": d, "within_fraction": frac,
                    "max_distance": float(d.max()) if len(d) else 0.0, "peaks": len(d)})


def distance_to_curve(grid, points):
    """Distance from every cell center to a densely sampled curve (nearest sample)."""
    x, y = grid.mesh()
    d, _ = cKDTree(np.asarray(points)).query(np.column_stack([x.ravel(), y.ravel()]))
    return d.reshape(x.shape)


def band_energy_fraction(artifact, distance, width):
    """Share of ``sum artifact^2`` carried by cells with ``distance < width``."""
    e = np.asarray(artifact, dtype=float) ** 2
    tot = e.sum()
    if tot == 0:
        return 0.0
    return float(e[np.asarray(distance) < width].sum() / tot)


def edge_curve(spec, samples=4001, level=1e-3):
    """Dense samples of an edge phantom's curve where the taper exceeds ``level``."""
    if spec.kind not in ("flat_edge", "convex_edge"):
        raise ValueError("edge_curve needs a flat or convex edge")
    t = np.linspace(-2.0 * spec.r_loc, 2.0 * spec.r_loc, samples)
    u1 = spec.a * t * t if spec.kind == "convex_edge" else np.zeros_like(t)
    ca, sa = np.cos(spec.angle), np.sin(spec.angle)
    x = spec.center[0] + ca * u1 - sa * t
    y = spec.center[1] + sa * u1 + ca * t
    keep = taper(spec, x, y) > level
    return np.column_stack([x[keep], y[keep]])
