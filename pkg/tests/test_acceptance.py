"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py`` (lines on stdout).
"""
import sys
import tempfile
import time
from functools import lru_cache
from importlib import resources

import numpy as np
import pytest

from radonalias.experiments import load_config, run_experiment
from radonalias.filtering import poisson_check
from radonalias.grids import ImageGrid
from radonalias.phantoms import disk_phantom
from radonalias.radon import ProjectionConfig, fourier_slice_check, radon

LINES = {}
_OUT = tempfile.mkdtemp(prefix="radonalias-acceptance-")
FIGURES = ("fig4", "fig5", "fig6", "fig7", "fig8", "fig9")


def record(num, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {num:>2}: {detail}"
    LINES[num] = line
    print(line)
    return ok


@lru_cache(maxsize=None)
def experiment(name):
    cfg = load_config(str(resources.files("radonalias") / "configs" / f"{name}.cfg"))
    cfg["out"] = f"{_OUT}/{name}"
    t0 = time.perf_counter()
    res = run_experiment(cfg)
    return res, time.perf_counter() - t0


def check(name, check_name):
    res, _ = experiment(name)
    return next(c for c in res.checks if c.name == check_name)


def fmt(*checks):
    return "; ".join(c.line() for c in checks)


def test_criterion_01_fourier_slice():
    img = ImageGrid.from_function(512, 1.0, lambda x, y: np.exp(-(x * x + y * y) / (2 * 0.1 ** 2)))
    t0 = time.perf_counter()
    m = fourier_slice_check(img, ProjectionConfig(m=36))
    dt = time.perf_counter() - t0
    ok = m.l2_rel < 1e-3 and dt < 5.0
    assert record(1, ok, f"slice l2_rel {m.l2_rel:.3g} < 1e-3, runtime {dt:.2f} s < 5 s")


def test_criterion_02_analytic_sinograms():
    sigma = 0.1
    g = ImageGrid.from_function(256, 1.0, lambda x, y: np.exp(-(x * x + y * y) / (2 * sigma ** 2)))
    sg = radon(g, ProjectionConfig(m=36, p_count=512))
    exact = sigma * np.sqrt(2 * np.pi) * np.exp(-sg.p ** 2 / (2 * sigma ** 2))
    eg = float(np.max(np.abs(sg.values - exact)) / exact.max())
    d = disk_phantom(512, 1.2, radius=1.0, lam=100.0)
    sd = radon(d, ProjectionConfig(m=36, p_count=1024))
    sel = np.abs(sd.p) < 0.9
    chord = 2 * np.sqrt(1 - sd.p[sel] ** 2)
    ed = float(np.max(np.abs(sd.values[:, sel] - chord) / chord))
    assert record(2, eg < 1e-3 and ed < 1e-2, f"gaussian rel {eg:.3g} < 1e-3, disk rel {ed:.3g} < 1e-2")


def test_criterion_03_poisson_summation():
    m = 6
    worst = 0.0
    rng = np.random.default_rng(0)
    for _ in range(5):
        deg = rng.integers(0, 2 * m, 4)
        a, b = rng.standard_normal((2, 4))
        rho = lambda phi: sum(ai * np.cos(d * phi) + bi * np.sin(d * phi) for ai, bi, d in zip(a, b, deg))
        exact = 2 * np.pi * sum(ai for ai, d in zip(a, deg) if d == 0)
        worst = max(worst, abs(poisson_check(rho, m).lhs - exact))
    r = poisson_check(lambda phi: np.exp(2j * m * phi), m)
    alias = abs(r.partial_sums[1] - r.partial_sums[0])
    ok = worst < 1e-12 and abs(r.lhs - 2 * np.pi) < 1e-12 and abs(alias - 2 * np.pi) < 1e-12
    assert record(3, ok, f"trig residual {worst:.2g} < 1e-12, k=+-1 alias term {alias:.15g} = 2 pi")


def test_criterion_04_multiplier_equivalence():
    c = check("fig4", "direct_vs_multiplier_l2")
    _, dt = experiment("fig4")
    assert record(4, c.passed and dt < 10.0, f"{fmt(c)}; runtime {dt:.2f} s < 10 s")


def test_criterion_05_replica_geometry():
    cs = [check("fig4", n) for n in ("replica_offset_cells", "replica_offset_cells_scaled",
                                       "distance_ratio_error")]
    assert record(5, all(c.passed for c in cs), fmt(*cs))


def test_criterion_06_nyquist_threshold():
    lo, hi = check("nyquist", "error_below_threshold"), check("nyquist", "error_above_threshold")
    ratio = hi.value / lo.value
    ok = lo.passed and hi.passed and ratio >= 10
    assert record(6, ok, f"{fmt(lo, hi)}; ratio {ratio:.3g} >= 10")


def test_criterion_07_artifact_free_band():
    c = check("fig8", "band_energy_fraction")
    assert record(7, c.passed, fmt(c))


def test_criterion_08_convolution_identity():
    c = check("fig9", "convolution_identity_l2")
    assert record(8, c.passed, fmt(c))


def test_criterion_09_singular_coefficients():
    cs = [check("fig5", "coefficient_rel_error"), check("fig5", "one_over_m_spread"),
          check("fig6", "coefficient_rel_error"), check("fig6", "one_over_m_spread"),
          check("fig7", "matched_fraction"), check("fig7", "sign_fraction")]
    labels = ["flat", "flat", "convex", "convex", "corner", "corner"]
    detail = "; ".join(f"{l} {c.line()}" for l, c in zip(labels, cs))
    assert record(9, all(c.passed for c in cs), detail)


def test_criterion_10_interp_displacement():
    c = check("fig9", "peaks_off_segments_max_cells")
    assert record(10, c.passed, fmt(c))


def test_criterion_11_refocusing():
    c = check("refocus", "energy_drop")
    assert record(11, c.passed, fmt(c))


def test_criterion_12_figure_replicas():
    total = 0.0
    failed = []
    for name in FIGURES:
        res, dt = experiment(name)
        total += dt
        failed += [f"{name}:{c.name}" for c in res.checks if not c.passed]
    ok = total < 300.0 and not failed
    detail = f"fig4-fig9 in {total:.1f} s < 300 s; failing checks: {', '.join(failed) or 'none'}"
    assert record(12, ok, detail)


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    bad = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            bad += 1
    sys.exit(1 if bad else 0)
