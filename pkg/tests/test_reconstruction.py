import numpy as np
import pytest

from radonalias.filtering import Kernel1D
from radonalias.grids import ImageGrid, Sinogram, disk_mask, rel_l2
from radonalias.phantoms import PhantomSpec, evaluate, rasterize
from radonalias.radon import ProjectionConfig, PsiSpec, p_axis, radon, radon_analytic
from radonalias.reconstruction import (BackprojectionReport, ReconConfig, alias_multiplier, direct_at, fbp_direct,
                                       fbp_interp, fbp_multiplier, psi_multiplier, refocus,
                                       verify_convolution_identity)


@pytest.fixture(scope="module")
def gauss_sino():
    img = ImageGrid.from_function(256, 1.0, lambda x, y: np.exp(-(x * x + y * y) / 0.02))
    return img, radon(img, ProjectionConfig(m=180, p_count=512))


def test_direct_dense_angles_is_faithful(gauss_sino):
    img, sino = gauss_sino
    rec = fbp_direct(sino, 256, 1.0)
    assert rel_l2(rec.values, img.values, disk_mask(img, 0.8)) < 0.02


def test_zero_sinogram():
    sino = Sinogram(8, 64, 1.0, np.zeros((8, 64)))
    assert not np.any(fbp_direct(sino, 32, 0.7).values)
    assert not np.any(fbp_interp(sino, 32, 0.7).values)
    m = verify_convolution_identity(sino, ReconConfig(method="interp"), [0.3, 0.5])
    assert m.l2_rel == 0.0


def test_linearity(rng):
    a, b = rng.standard_normal((2, 6, 64))
    sa, sb, sab = (Sinogram(6, 64, 1.0, v) for v in (a, b, 2 * a - 0.5 * b))
    for fn, cfg in ((fbp_direct, ReconConfig()), (fbp_interp, ReconConfig(method="interp"))):
        lhs = fn(sab, 32, 0.7, cfg).values
        rhs = 2 * fn(sa, 32, 0.7, cfg).values - 0.5 * fn(sb, 32, 0.7, cfg).values
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.abs(rhs).max()


def test_outside_offsets_are_counted():
    sino = Sinogram(4, 32, 0.5, np.ones((4, 32)))
    rep = BackprojectionReport()
    fbp_direct(sino, 16, 1.0, report=rep)
    assert rep.outside > 0 and rep.evaluations == 16 * 16 * 4


def test_rotation_covariance():
    m = 12
    spec = PhantomSpec("convex_edge", center=(0.1, 0.05), angle=0.3, lam=24.0, r_loc=0.4)
    rot = np.pi / m
    c, s = np.cos(rot), np.sin(rot)
    spec_r = PhantomSpec("convex_edge", center=(c * 0.1 - s * 0.05, s * 0.1 + c * 0.05), angle=0.3 + rot,
                         lam=24.0, r_loc=0.4)
    cfg = ProjectionConfig(m=m, p_count=256, R=1.0)
    g = radon_analytic(spec, cfg)
    g_r = radon_analytic(spec_r, cfg)
    rng = np.random.default_rng(5)
    x, y = rng.uniform(-0.5, 0.5, (2, 400))
    lhs = direct_at(g_r, c * x - s * y, s * x + c * y)
    rhs = direct_at(g, x, y)
    assert np.max(np.abs(lhs - rhs)) < 1e-3 * np.abs(rhs).max()


def test_interp_rejects_dirac():
    sino = Sinogram(4, 32, 1.0, np.zeros((4, 32)))
    with pytest.raises(ValueError):
        fbp_interp(sino, 16, 1.0, ReconConfig(method="interp", kernel=Kernel1D("dirac")))


def test_interp_matches_direct_above_nyquist():
    # band limit ~ 12 on a support of radius 0.5: m = 60 gives s B R < pi
    img = ImageGrid.from_function(128, 1.0, lambda x, y: np.exp(-(x * x + y * y) / 0.01))
    sino = radon(img, ProjectionConfig(m=60, p_count=256))
    d = fbp_direct(sino, 128, 1.0)
    i = fbp_interp(sino, 128, 1.0, ReconConfig(method="interp", kernel=Kernel1D("lanczos3")))
    assert rel_l2(i.values, d.values) < 0.02


def test_multiplier_values():
    mult = alias_multiplier(36, 1)
    theta = np.pi / 72
    g1 = mult(np.cos(theta), np.sin(theta)) - 1.0
    assert g1 == pytest.approx(-2.0)
    assert mult(0.0, 0.0) == 1.0
    # branch insensitivity: arg and arg - 2 pi give the same value
    for k in (1, 2, 3):
        for t in np.linspace(-np.pi, np.pi, 13):
            assert np.cos(2 * 36 * k * t) == pytest.approx(np.cos(2 * 36 * k * (t - 2 * np.pi)), abs=1e-9)


def test_multiplier_k0_is_identity(rng):
    img = ImageGrid(32, 1.0, rng.standard_normal((32, 32)))
    assert fbp_multiplier(img, 36, 0) is img


def test_psi_multiplier_identity_and_zero(rng):
    img = ImageGrid(32, 1.0, rng.standard_normal((32, 32)))
    assert psi_multiplier(img, PsiSpec.ones()) is img
    z = psi_multiplier(img, PsiSpec.zeros())
    # only the DC bin survives
    assert np.allclose(z.values, z.values.mean(), atol=1e-12)


def flat_top(center, flat, roll):
    def f(phi):
        d = np.abs(np.mod(phi - center + np.pi / 2, np.pi) - np.pi / 2)
        return np.where(d < flat, 1.0, np.where(d < flat + roll, np.cos(np.pi * (d - flat) / (2 * roll)) ** 2, 0.0))
    return PsiSpec(f, "flat-top")


def test_psi_window_keeps_matching_edge():
    # the edge content is the derivative across it; the taper's smooth bulk is isotropic and not part of it
    spec = PhantomSpec("flat_edge", angle=np.pi / 2, lam=32.0, r_loc=0.4)
    img = rasterize(spec, 256, 1.0)
    x, y = img.mesh()
    strip = ((np.abs(y) < 4 / 32) & (np.abs(x) < 0.2))[1:]
    d0 = np.diff(img.values, axis=0)[strip]
    kept = np.diff(psi_multiplier(img, flat_top(np.pi / 2, np.pi / 4, np.pi / 8)).values, axis=0)[strip]
    lost = np.diff(psi_multiplier(img, flat_top(0.0, np.pi / 4, np.pi / 8)).values, axis=0)[strip]
    assert rel_l2(kept, d0) < 0.05
    assert rel_l2(lost, d0) > 0.9


def test_refocus_identity_and_shift():
    p = p_axis(256, 2.0)
    vals = np.exp(-((p[None, :] - 0.1) ** 2) / 0.01) * np.ones((4, 1))
    sino = Sinogram(4, 256, 2.0, vals)
    assert refocus(sino, (0.0, 0.0)) is sino
    out = refocus(sino, (0.5, 0.0))
    assert out.origin == (0.5, 0.0)
    # row 0 has omega = (1, 0): the peak moves from 0.1 to 0.1 - 0.5
    expect = np.exp(-((out.p - (0.1 - 0.5)) ** 2) / 0.01)
    assert np.max(np.abs(out.values[0] - expect)) < 1e-3


def test_refocus_without_extension_fails():
    p = p_axis(64, 1.0)
    sino = Sinogram(2, 64, 1.0, np.exp(-((p[None, :] - 0.8) ** 2) / 0.002) * np.ones((2, 1)))
    with pytest.raises(ValueError):
        refocus(sino, (-0.6, 0.0), extend=False)


def test_refocused_reconstruction_is_unchanged():
    spec = PhantomSpec("disk", center=(0.3, 0.0), radius=0.2, lam=40.0)
    sino = radon_analytic(spec, ProjectionConfig(m=90, p_count=256, R=1.0))
    a = fbp_direct(sino, 64, 0.8)
    b = fbp_direct(refocus(sino, (0.3, 0.0)), 64, 0.8)
    assert rel_l2(b.values, a.values) < 1e-2


def test_convolution_identity_baseline_and_lanczos():
    spec = PhantomSpec("disk", center=(0.2, 0.1), radius=0.4, lam=64.0)
    sino = radon_analytic(spec, ProjectionConfig(m=36, p_count=512, R=1.0))
    radii = np.arange(0.1, 0.75, 0.05)
    lan = verify_convolution_identity(sino, ReconConfig(method="interp", kernel=Kernel1D("lanczos3")), radii)
    assert lan.l2_rel < 0.02
    base = verify_convolution_identity(sino, ReconConfig(method="interp", kernel=Kernel1D("lanczos3")), radii,
                                       conv_kernel=Kernel1D("dirac"))
    assert base.l2_rel > 10 * lan.l2_rel
    assert len(lan.extra["ring_l2"]) == len(radii)
