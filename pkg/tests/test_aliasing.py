import numpy as np
import pytest

from radonalias.aliasing import (PhaseSpacePoint, alias_order, band_energy_fraction, canonical_shift,
                                 circle_band_limit, distance_to_segments, edge_curve, estimate_band_limit,
                                 grid_shift, interp_displacement_interval, interp_position_range,
                                 interp_segments, nyquist_ok, predict_artifacts, singular_set)
from radonalias.grids import ImageGrid
from radonalias.phantoms import PhantomSpec, coherent_state

S = np.pi / 36


def test_canonical_shift_basics():
    pt = PhaseSpacePoint((0.3, 0.0), (0.0, 72.0))
    assert canonical_shift(pt, 0, S) is pt
    q = canonical_shift(pt, 1, S)
    assert q.xi == pt.xi
    assert np.hypot(q.x[0] - 0.3, q.x[1]) == pytest.approx(1.0, abs=1e-14)
    # xi^perp = (-72, 0): k = 1 moves to -x
    assert q.x[0] == pytest.approx(-0.7)
    back = canonical_shift(q, -1, S)
    assert back.x == pytest.approx(pt.x, abs=1e-15)


@pytest.mark.parametrize("k", [-3, -1, 2, 5])
def test_canonical_shift_distance(k):
    pt = PhaseSpacePoint((0.1, -0.2), (30.0, 40.0))
    q = canonical_shift(pt, k, 0.07)
    d = np.asarray(q.x) - np.asarray(pt.x)
    assert np.hypot(*d) == pytest.approx(2 * np.pi * abs(k) / (0.07 * 50.0), rel=1e-14)
    assert np.sign(np.dot(d, pt.perp_unit)) == np.sign(k)


def test_zero_frequency_rejected():
    with pytest.raises(ValueError):
        PhaseSpacePoint((0, 0), (0, 0))


def test_grid_shift():
    assert np.array_equal(grid_shift((1.0, 2.0), (0, 0), (0.5, 0.5)), [1.0, 2.0])
    assert grid_shift((1.0, 2.0), (1, 0), (1.0, 1.0)) == pytest.approx([1.0 + 2 * np.pi, 2.0])


def test_grid_shift_in_dual_variables_is_canonical_shift():
    # (x . xi^perp, |xi|) are the dual variables of (phi, p); folding the first by 2 pi k / s
    # and mapping back along xi^perp gives C_k
    pt = PhaseSpacePoint((0.2, 0.1), (10.0, -25.0))
    for k in (-2, 1, 3):
        sigma = pt.tangent_coord * pt.norm
        sigma2, rho = grid_shift((sigma, pt.norm), (k, 0), (S, 1.0))
        x = np.asarray(pt.x) + (sigma2 - sigma) / rho * pt.perp_unit
        assert x == pytest.approx(canonical_shift(pt, k, S).x, abs=1e-14)


def test_nyquist():
    assert nyquist_ok(np.deg2rad(4), 36, 1.0)[0]
    ok, margin = nyquist_ok(2 * np.pi / 36, 36, 1.0)
    assert not ok and margin < 0
    assert not nyquist_ok(np.pi / 36, 36, 1.0)[0]


def test_alias_order_is_unique():
    rng = np.random.default_rng(3)
    for _ in range(200):
        x = rng.uniform(-1, 1, 2)
        xi = rng.uniform(-80, 80, 2)
        pt = PhaseSpacePoint(tuple(x), tuple(xi))
        k = alias_order(pt, S)
        v = pt.tangent_coord * pt.norm + 2 * k * np.pi / S
        assert -np.pi / S <= v <= np.pi / S
        others = [j for j in range(k - 3, k + 4)
                  if j != k and -np.pi / S <= pt.tangent_coord * pt.norm + 2 * j * np.pi / S <= np.pi / S]
        assert others == []


def test_interp_intervals():
    # tangent coordinate u = -1, so the displacement factor interval appears unscaled
    pt = PhaseSpacePoint((0.0, 1.0), (72.0, 0.0))
    assert pt.tangent_coord == pytest.approx(1.0)
    pt = PhaseSpacePoint((0.0, -1.0), (72.0, 0.0))
    i1 = interp_displacement_interval(pt, 1)
    assert (i1.lo, i1.hi) == pytest.approx((2 / 3, 2.0))
    i2 = interp_displacement_interval(pt, 2)
    assert (i2.lo, i2.hi) == pytest.approx((4 / 5, 4 / 3))
    scaled = interp_displacement_interval(PhaseSpacePoint((0.0, -1.0), (72 * 1.3, 0.0)), 1)
    assert (scaled.lo, scaled.hi) == (i1.lo, i1.hi)
    with pytest.raises(ValueError):
        interp_displacement_interval(pt, 0)


def test_interp_interval_tangent_through_origin():
    pt = PhaseSpacePoint((0.5, 0.0), (72.0, 0.0))
    iv = interp_displacement_interval(pt, 1)
    assert not iv.valid and "origin" in iv.reason


def test_interp_position_union():
    u = 0.6
    lo, hi = interp_position_range(u)
    pts = [u - u * f for k in range(1, 200) for f in (2 * k / (2 * k + 1), 2 * k / (2 * k - 1))]
    assert min(pts) >= lo - 1e-12 and max(pts) <= hi + 1e-12
    assert (lo, hi) == pytest.approx((-0.6, 0.2))


def test_band_limit_coherent():
    img = coherent_state(512, 8.0, (0.0, 72.0), h=1.0)
    B = estimate_band_limit(img, h=1.0, eps=1e-4).B
    assert 69.0 <= B <= 75.0


def test_band_limit_constant_and_zero():
    assert estimate_band_limit(ImageGrid(32, 1.0, np.ones((32, 32)))).B == 0.0
    assert estimate_band_limit(ImageGrid.zeros(32, 1.0)).B == 0.0
    with pytest.raises(ValueError):
        estimate_band_limit(ImageGrid.zeros(32, 1.0), eps=0.0)


def test_circle_band_limit():
    phi = 2 * np.pi * np.arange(256) / 256
    assert circle_band_limit(np.exp(7j * phi), h=0.5).B == 3.5
    assert circle_band_limit(np.zeros(16)).B == 0.0


def test_predict_coherent_replicas():
    spec = PhantomSpec("coherent", center=(0.3, 0.0), xi0=(0.0, 72.0), h=1.0)
    pred = predict_artifacts(spec, S, (-1, 1, -1, 1), k_max=1)
    ks = sorted(a.k for a in pred.entries)
    assert ks == [-1, 1]
    for a in pred.entries:
        assert np.hypot(a.x[0] - 0.3, a.x[1]) == pytest.approx(1.0)
    table = pred.to_table().splitlines()
    assert table[0] == "k,x,y,xi1,xi2,inside" and len(table) == 3


def test_predict_nothing_when_nyquist_holds():
    spec = PhantomSpec("flat_edge")
    assert predict_artifacts(spec, S, (-1, 1, -1, 1), B=20.0, R=1.0).entries == []
    with pytest.raises(ValueError):
        predict_artifacts(spec, S, (-1, 1, -1, 1))


def test_singular_sets():
    for kind in ("flat_edge", "convex_edge", "corner", "disk"):
        pts, nrm = singular_set(PhantomSpec(kind, angle=0.3), 50)
        assert pts.shape == nrm.shape
        assert np.allclose(np.hypot(nrm[:, 0], nrm[:, 1]), 1.0)
    pts, nrm = singular_set(PhantomSpec("convex_edge", a=1.5), 101)
    assert np.allclose(pts[:, 0], 1.5 * pts[:, 1] ** 2)


def test_segments_and_distance():
    segs = interp_segments(np.array([[0.5, 0.0]]), np.array([[0.0, 1.0]]))
    # tangent along (-1, 0), u = -0.5: allowed range u[-1, 1/3] = [-1/6, 1/2] -> x in [-0.5, 1/6]
    xs = sorted([segs[0, 0, 0], segs[0, 1, 0]])
    assert xs == pytest.approx([-0.5, 1 / 6])
    d = distance_to_segments([[0.0, 0.0], [0.0, 0.3], [1.0, 0.0]], segs)
    assert d == pytest.approx([0.0, 0.3, 1 - 1 / 6])


def test_band_energy_fraction_and_edge_curve():
    art = np.array([1.0, 2.0, 0.0, 1.0])
    assert band_energy_fraction(art, np.array([0.1, 0.5, 0.0, 2.0]), 1.0) == pytest.approx(5 / 6)
    assert band_energy_fraction(np.zeros(3), np.zeros(3), 1.0) == 0.0
    c = edge_curve(PhantomSpec("convex_edge", a=1.5, r_loc=0.4))
    assert np.allclose(c[:, 0], 1.5 * c[:, 1] ** 2)
    with pytest.raises(ValueError):
        edge_curve(PhantomSpec("disk"))
