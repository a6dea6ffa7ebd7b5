"""Desk-scale experiment drivers with embedded pass/fail checks.

An experiment is described by a flat ``key = value`` config (see
``SCHEMA``); ``run_experiment`` dispatches on the ``experiment`` key, writes
its outputs into ``out`` and returns an ``ExperimentResult`` whose checks
carry the measured value, the threshold and the verdict.

Experiment kinds:

``replica``
    Coherent state, direct method against the multiplier form; predicted
    replica positions; optional frequency rescaling.
``edge_fit``
    Flat or convex edge; singular-profile fit on a crosscut below the edge
    and the ``1/m`` scaling of the coefficient over ``m_list``.
``corner``
    Corner phantom; peaks on a crosscut matched to the lines through the tip.
``band``
    Semiclassical convex edge; artifact energy near the edge.
``interp_disk``
    Off-center disk; interpolation method against the tangent-segment
    prediction and the angular convolution identity.
``nyquist``
    Coherent state reconstructed at multiples of the Nyquist step.
``refocus``
    Off-center coherent state, interpolation method before and after
    refocusing the data at the packet center.
"""
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import aliasing, conormal, grids, phantoms, radon, reconstruction
from .filtering import Kernel1D

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""


def _pair(text):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ValueError(f"expected two numbers, got {text!r}")
    return (float(parts[0]), float(parts[1]))


def _floats(text):
    return tuple(float(p) for p in text.replace(",", " ").split())


def _ints(text):
    return tuple(int(p) for p in text.replace(",", " ").split())


def _optional_pair(text):
    return None if text.strip().lower() in ("", "none", "off") else _pair(text)


# key -> (parser, default)
SCHEMA = {
    "experiment": (str, None),
    "name": (str, None),
    "out": (str, None),
    "seed": (int, 0),
    # phantom
    "phantom": (str, "coherent"),
    "center": (_pair, (0.0, 0.0)),
    "xi0": (_pair, (0.0, 72.0)),
    "h": (float, 1.0),
    "lambda": (float, None),
    "a": (float, 1.5),
    "angle": (float, 0.0),
    "rloc": (float, 0.4),
    "radius": (float, 0.5),
    "mu_scale": (float, 1.0),
    # grid and projection
    "n": (int, 256),
    "L": (float, 1.0),
    "m": (int, 36),
    "pcount": (int, None),
    "R": (float, None),
    # reconstruction
    "method": (str, "direct"),
    "kernel": (str, "lanczos3"),
    "kmax": (int, 2),
    "upsample": (int, 8),
    "refocus": (_optional_pair, None),
    # analysis
    "eps": (float, 1e-3),
    "freq_scale": (float, None),
    "tol_cells": (float, 2.0),
    "peak_threshold": (float, 0.5),
    "m_list": (_ints, ()),
    "y_cut": (float, -0.9),
    "fit_window": (_floats, (12.0, 16.0)),
    "factors": (_floats, (0.8, 2.0)),
    "ring_step": (float, None),
    "focus_radius": (float, 0.2),
    "identity_kernel": (str, "lanczos3"),
    "images": (int, 1),
}

KINDS = ("replica", "edge_fit", "corner", "band", "interp_disk", "nyquist", "refocus")


def parse_config(text, source="<config>"):
    """Parse ``key = value`` lines (``#`` comments) into a typed dict with defaults."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            raw[key] = SCHEMA[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    cfg = {k: d for k, (_, d) in SCHEMA.items()}
    cfg.update(raw)
    if cfg["experiment"] not in KINDS:
        raise ConfigError(f"{source}: experiment must be one of {KINDS}, got {cfg['experiment']!r}")
    if cfg["name"] is None:
        cfg["name"] = cfg["experiment"]
    if cfg["out"] is None:
        cfg["out"] = os.path.join("out", cfg["name"])
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    op: str

    @property
    def passed(self):
        v, t = self.value, self.threshold
        if not np.isfinite(v):
            return False
        return {"<": v < t, "<=": v <= t, ">": v > t, ">=": v >= t}[self.op]

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.6g} {self.op} {self.threshold:.6g}"


@dataclass
class ExperimentResult:
    name: str
    checks: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def summary(self):
        lines = [f"experiment {self.name}"]
        lines += [c.line() for c in self.checks]
        lines += [f"value {k} = {v:.6g}" for k, v in sorted(self.values.items())]
        lines.append(f"overall {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def phantom_spec(cfg, **override):
    kw = dict(kind=cfg["phantom"], center=cfg["center"], xi0=cfg["xi0"], h=cfg["h"],
              lam=cfg["lambda"] if cfg["lambda"] is not None else cfg["n"] / 8.0,
              a=cfg["a"], angle=cfg["angle"], r_loc=cfg["rloc"], radius=cfg["radius"],
              mu_scale=cfg["mu_scale"])
    kw.update(override)
    return phantoms.PhantomSpec(**kw)


def projection(cfg, m=None):
    return radon.ProjectionConfig(m or cfg["m"], cfg["pcount"] or radon.next_pow2(2 * cfg["n"]),
                                  cfg["R"] if cfg["R"] is not None else cfg["L"] * np.sqrt(2.0))


def recon_config(cfg, method=None):
    return reconstruction.ReconConfig(method=method or cfg["method"], kernel=Kernel1D(cfg["kernel"]),
                                      k_max=cfg["kmax"], upsample=cfg["upsample"])


class _Writer:
    """Writes outputs into the experiment directory and records their paths."""

    def __init__(self, cfg, result):
        self.dir = cfg["out"]
        self.images = bool(cfg["images"])
        self.result = result
        os.makedirs(self.dir, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.dir, name)
        self.result.outputs[name] = p
        return p

    def grid(self, name, img, vmin=None, vmax=None):
        grids.write_grid(self.path(name + ".grid"), img)
        if self.images:
            grids.write_image8(self.path(name + ".pgm"), img, vmin, vmax)

    def text(self, name, body):
        with open(self.path(name), "w", encoding="utf-8") as fh:
            fh.write(body)


def _sino(spec, cfg, m=None):
    return radon.radon_analytic(spec, projection(cfg, m))


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def run_replica(cfg, res, out):
    n, L, m = cfg["n"], cfg["L"], cfg["m"]
    s = np.pi / m
    spec = phantom_spec(cfg)
    direction = np.asarray(spec.xi0) / np.hypot(*spec.xi0)
    window = (-L, L, -L, L)
    f = phantoms.rasterize(spec, n, L)
    fd = reconstruction.fbp_direct(_sino(spec, cfg), n, L)
    fm = reconstruction.fbp_multiplier(f, m, cfg["kmax"])
    out.grid("phantom", f)
    out.grid("direct", fd)
    out.grid("multiplier", fm)
    res.checks.append(Check("direct_vs_multiplier_l2", grids.rel_l2(fd.values, fm.values), 0.05, "<"))

    pred = aliasing.predict_artifacts(spec, s, window, k_max=1)
    out.text("predictions.csv", pred.to_table())
    ver = aliasing.verify_artifacts(pred, fd, f, tol_cells=cfg["tol_cells"],
                                    peak_threshold=cfg["peak_threshold"], envelope_direction=direction)
    worst = max(ver.extra["distances"]) / f.cell if ver.extra["distances"] else np.inf
    res.checks.append(Check("replica_offset_cells", worst, cfg["tol_cells"], "<="))
    dist = _measured_shift(ver, pred, spec.center)
    res.values["replica_distance"] = dist
    res.values["predicted_distance"] = 2.0 * np.pi / (s * np.hypot(*spec.xi0) / spec.h)

    if cfg["freq_scale"]:
        q = cfg["freq_scale"]
        spec2 = phantom_spec(cfg, xi0=tuple(q * v for v in spec.xi0))
        f2 = phantoms.rasterize(spec2, n, L)
        fd2 = reconstruction.fbp_direct(_sino(spec2, cfg), n, L)
        out.grid("phantom_scaled", f2)
        out.grid("direct_scaled", fd2)
        pred2 = aliasing.predict_artifacts(spec2, s, window, k_max=1)
        out.text("predictions_scaled.csv", pred2.to_table())
        ver2 = aliasing.verify_artifacts(pred2, fd2, f2, tol_cells=cfg["tol_cells"],
                                         peak_threshold=cfg["peak_threshold"], envelope_direction=direction)
        worst2 = max(ver2.extra["distances"]) / f.cell if ver2.extra["distances"] else np.inf
        res.checks.append(Check("replica_offset_cells_scaled", worst2, cfg["tol_cells"], "<="))
        dist2 = _measured_shift(ver2, pred2, spec2.center)
        res.values["replica_distance_scaled"] = dist2
        res.checks.append(Check("distance_ratio_error", abs(dist / dist2 / q - 1.0), 0.05, "<="))


def _measured_shift(ver, pred, x0):
    """Mean distance from x0 of the peaks matched to the predictions."""
    pk = np.array([p for p, _ in ver.peak_list]).reshape(-1, 2)
    if not len(pk):
        return float("nan")
    d = []
    for a in pred.inside():
        j = np.argmin(np.hypot(pk[:, 0] - a.x[0], pk[:, 1] - a.x[1]))
        d.append(np.hypot(pk[j, 0] - x0[0], pk[j, 1] - x0[1]))
    return float(np.mean(d)) if d else float("nan")


def _edge_crossing(spec, y_cut):
    """x where the edge's tangent line at ``center`` crosses ``y = y_cut``."""
    ca, sa = np.cos(spec.angle), np.sin(spec.angle)
    if abs(ca) < 1e-12:
        raise ConfigError("edge tangent is horizontal; a horizontal crosscut never crosses it")
    t = (y_cut - spec.center[1]) / ca
    return spec.center[0] - t * sa


def _fit_row(spec, cfg, m, kind):
    n, L = cfg["n"], cfg["L"]
    xs = grids.axis_coords(n, L)
    row = reconstruction.direct_at(_sino(spec, cfg, m), xs, np.full(n, cfg["y_cut"]))
    p0 = _edge_crossing(spec, cfg["y_cut"])
    w = 1.0 / (np.sqrt(2.0) * spec.lam)
    cell = 2.0 * L / n
    fits = [conormal.fit_singularity(xs, row, kind, p0, wc * cell, w=w) for wc in cfg["fit_window"]]
    return xs, row, min(fits, key=lambda f: f.residual)


def run_edge_fit(cfg, res, out):
    n, L, m = cfg["n"], cfg["L"], cfg["m"]
    spec = phantom_spec(cfg)
    if spec.kind == "flat_edge":
        kind, k, tol = "pv_recip", phantoms.flat_edge_jump(spec), 0.20
    elif spec.kind == "convex_edge":
        kind, k, tol = "inv_sqrt_minus", phantoms.convex_edge_strength(spec), 0.25
    else:
        raise ConfigError("edge_fit needs phantom = flat_edge or convex_edge")
    f = phantoms.rasterize(spec, n, L)
    out.grid("phantom", f)
    out.grid("direct", reconstruction.fbp_direct(_sino(spec, cfg), n, L), -0.5, 1.5)
    xs, row, fit = _fit_row(spec, cfg, m, kind)
    grids.write_csv_crosscut(out.path("crosscut.csv"), xs, row)
    fits = [fit]
    theory = k / (2.0 * np.pi * m)
    res.values.update({"strength_k": k, "coefficient": fit.c, "coefficient_theory": theory})
    res.checks.append(Check("coefficient_rel_error", abs(fit.c / theory - 1.0), tol, "<="))
    if kind == "inv_sqrt_minus":
        # the half-order filter of a square-root jump gives k/(4m)
        res.values["coefficient_over_k_4m"] = fit.c * 4.0 * m / k
    scaled = {m: fit.c * m}
    for mm in cfg["m_list"]:
        if mm == m:
            continue
        fm = _fit_row(spec, cfg, mm, kind)[2]
        fits.append(fm)
        scaled[mm] = fm.c * mm
    if len(scaled) > 1:
        ref = scaled[m]
        spread = max(abs(v / ref - 1.0) for v in scaled.values())
        res.checks.append(Check("one_over_m_spread", spread, 0.15, "<="))
    out.text("fits.csv", conormal.report(fits))


def run_corner(cfg, res, out):
    n, L, m = cfg["n"], cfg["L"], cfg["m"]
    spec = phantom_spec(cfg)
    if spec.kind != "corner" or spec.angle != 0.0:
        raise ConfigError("corner experiment needs phantom = corner with angle = 0")
    f = phantoms.rasterize(spec, n, L)
    fd = reconstruction.fbp_direct(_sino(spec, cfg), n, L)
    out.grid("phantom", f)
    out.grid("direct", fd, -0.5, 1.5)
    xs, row = grids.crosscut(fd, row=cfg["y_cut"])
    grids.write_csv_crosscut(out.path("crosscut.csv"), xs, row)
    chk = conormal.corner_line_check(fd, spec.center, m, cfg["y_cut"], tol_cells=cfg["tol_cells"])
    lines = ["x,phi,expected_sign,found,sign"]
    for r in chk.extra["lines"]:
        lines.append(f"{r['x']:.6g},{r['phi']:.6g},{r['expected_sign']},{int(r['found'])},{r['sign'] or 0}")
    out.text("corner_lines.csv", "\n".join(lines) + "\n")
    res.checks.append(Check("matched_fraction", chk.extra["matched_fraction"], 0.8, ">="))
    res.checks.append(Check("sign_fraction", chk.extra["sign_fraction"], 0.8, ">="))


def run_band(cfg, res, out):
    n, L, m = cfg["n"], cfg["L"], cfg["m"]
    spec = phantom_spec(cfg)
    if spec.kind != "convex_edge":
        raise ConfigError("band experiment needs phantom = convex_edge")
    f = phantoms.rasterize(spec, n, L)
    fd = reconstruction.fbp_direct(_sino(spec, cfg), n, L)
    art = fd.values - f.values
    B = aliasing.estimate_band_limit(f, 1.0, cfg["eps"]).B
    D = 2.0 * np.pi / ((np.pi / m) * B)
    dist = aliasing.distance_to_curve(f, aliasing.edge_curve(spec))
    frac = aliasing.band_energy_fraction(art, dist, 0.9 * D)
    out.grid("phantom", f)
    out.grid("direct", fd, -0.1, 0.1)
    out.grid("artifact", f.with_values(art), -0.1, 0.1)
    res.values.update({"band_limit": B, "artifact_distance": D})
    res.checks.append(Check("band_energy_fraction", frac, 0.01, "<"))


def run_interp_disk(cfg, res, out):
    n, L, m = cfg["n"], cfg["L"], cfg["m"]
    spec = phantom_spec(cfg)
    if spec.kind != "disk":
        raise ConfigError("interp_disk experiment needs phantom = disk")
    sino = _sino(spec, cfg)
    f = phantoms.rasterize(spec, n, L)
    rc = recon_config(cfg, "interp")
    fd = reconstruction.fbp_direct(sino, n, L)
    fc = reconstruction.fbp_interp(sino, n, L, rc)
    ref = reconstruction.angular_blur(spec, n, L, m, rc.kernel, rc.upsample)
    out.grid("phantom", f)
    out.grid("direct", fd, -0.5, 1.5)
    out.grid("interp", fc, -0.5, 1.5)
    ver = aliasing.verify_interp_displacement(spec, fc, ref, cfg["peak_threshold"], cfg["tol_cells"])
    res.values["peaks"] = ver.extra["peaks"]
    res.checks.append(Check("peaks_off_segments_max_cells", ver.extra["max_distance"], cfg["tol_cells"], "<="))

    step = cfg["ring_step"] or 2.0 * L / n
    radii = np.arange(2.0 * step, (spec.support_disk()[1] + np.hypot(*spec.center)) * 1.2, step)
    ident = reconstruction.ReconConfig(method="interp", kernel=Kernel1D(cfg["identity_kernel"]),
                                       upsample=cfg["upsample"])
    mres = reconstruction.verify_convolution_identity(sino, ident, radii)
    res.checks.append(Check("convolution_identity_l2", mres.l2_rel, 0.02, "<"))


def run_nyquist(cfg, res, out):
    n, L = cfg["n"], cfg["L"]
    spec = phantom_spec(cfg)
    f = phantoms.rasterize(spec, n, L)
    R = aliasing.energy_radius(f, cfg["eps"], spec.center)
    B = aliasing.estimate_band_limit(f, 1.0, cfg["eps"]).B
    s_star = np.pi / (R * B)
    region = grids.disk_mask(f, R, spec.center)
    res.values.update({"R": R, "B": B, "nyquist_step": s_star})
    rows = ["factor,m,step,l2_rel"]
    errs = []
    for q in cfg["factors"]:
        m = int(np.ceil(np.pi / (q * s_star)))
        fd = reconstruction.fbp_direct(_sino(spec, cfg, m), n, L)
        e = grids.rel_l2(fd.values, f.values, region)
        errs.append((q, e))
        rows.append(f"{q:.6g},{m},{np.pi / m:.6g},{e:.6g}")
        out.grid(f"direct_x{q:g}", fd)
    out.text("sweep.csv", "\n".join(rows) + "\n")
    below = [e for q, e in errs if q < 1.0]
    above = [e for q, e in errs if q >= 2.0]
    if below:
        res.checks.append(Check("error_below_threshold", max(below), 0.01, "<"))
    if above:
        res.checks.append(Check("error_above_threshold", min(above), 0.1, ">"))


def run_refocus(cfg, res, out):
    n, L = cfg["n"], cfg["L"]
    spec = phantom_spec(cfg)
    x0 = cfg["refocus"] or spec.center
    f = phantoms.rasterize(spec, n, L)
    sino = _sino(spec, cfg)
    rc = recon_config(cfg, "interp")
    before = reconstruction.fbp_interp(sino, n, L, rc)
    after = reconstruction.fbp_interp(reconstruction.refocus(sino, x0), n, L, rc)
    mask = grids.disk_mask(f, cfg["focus_radius"], x0)
    e0 = float(np.sum((before.values - f.values)[mask] ** 2))
    e1 = float(np.sum((after.values - f.values)[mask] ** 2))
    out.grid("phantom", f)
    out.grid("interp", before)
    out.grid("interp_refocused", after)
    res.values.update({"energy_before": e0, "energy_after": e1})
    res.checks.append(Check("energy_drop", e0 / e1 if e1 > 0 else np.inf, 5.0, ">="))


RUNNERS = {"replica": run_replica, "edge_fit": run_edge_fit, "corner": run_corner, "band": run_band,
           "interp_disk": run_interp_disk, "nyquist": run_nyquist, "refocus": run_refocus}


def run_experiment(cfg):
    """Run one parsed config; writes ``summary.txt`` next to the outputs."""
    res = ExperimentResult(cfg["name"])
    out = _Writer(cfg, res)
    t0 = time.perf_counter()
    RUNNERS[cfg["experiment"]](cfg, res, out)
    res.elapsed = time.perf_counter() - t0
    out.text("summary.txt", res.summary())
    log.info("%s finished in %.1f s", cfg["name"], res.elapsed)
    return res
