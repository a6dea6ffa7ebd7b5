import numpy as np
import pytest
from scipy.integrate import quad

from radonalias.conormal import (FitError, corner_line_check, fit_singularity, inv_sqrt_minus_reg, log_reg,
                                 model, pv_reg, report)
from radonalias.grids import ImageGrid

H = 1.0 / 256
T = np.arange(-200, 201) * H
W = 1.5 * H


def synth(kind, c0, p0=0.0013):
    return c0 * model(kind, T - p0, W) + 0.3 + 0.05 * T - 0.02 * T * T


@pytest.mark.parametrize("kind", ["pv_recip", "inv_sqrt_minus", "log_abs"])
def test_recovers_coefficient(kind):
    fit = fit_singularity(T, synth(kind, 0.01), kind, 0.0, 40 * H, w=W)
    assert fit.c == pytest.approx(0.01, rel=0.05)
    assert abs(fit.p0 - 0.0013) <= H
    assert fit.samples >= 20


def test_affine_background_does_not_change_c():
    y = synth("pv_recip", 0.01)
    a = fit_singularity(T, y, "pv_recip", 0.0, 40 * H, w=W)
    b = fit_singularity(T, y + 3.0 - 7.0 * T, "pv_recip", 0.0, 40 * H, w=W)
    assert abs(a.c - b.c) < 1e-10 and a.p0 == b.p0


def test_wrong_model_has_larger_residual():
    for true, wrong in (("pv_recip", "log_abs"), ("inv_sqrt_minus", "pv_recip"), ("log_abs", "pv_recip")):
        y = synth(true, 0.01) + 1e-4 * np.sin(37 * T)
        good = fit_singularity(T, y, true, 0.0, 40 * H, w=W)
        bad = fit_singularity(T, y, wrong, 0.0, 40 * H, w=W, reject=False)
        assert bad.residual >= 2 * good.residual


def test_rejections():
    with pytest.raises(FitError, match="samples"):
        fit_singularity(T, synth("pv_recip", 0.01), "pv_recip", 0.0, 5 * H)
    rng = np.random.default_rng(0)
    with pytest.raises(FitError, match="rejected"):
        fit_singularity(T, rng.standard_normal(T.size), "pv_recip", 0.0, 40 * H)
    with pytest.raises(ValueError):
        model("step", T, W)


def test_regularized_models_tend_to_the_singular_ones():
    x = np.array([-0.3, -0.1, 0.05, 0.2])
    w = 1e-4
    assert pv_reg(x, w) == pytest.approx(1 / x, rel=1e-5)
    assert log_reg(x, w) == pytest.approx(np.log(np.abs(x)), abs=1e-5)
    ref = np.where(x < 0, np.abs(x) ** -0.5, 0.0)
    assert inv_sqrt_minus_reg(x, w) == pytest.approx(ref, rel=1e-5, abs=1e-12)


def test_regularized_models_are_gaussian_smoothings():
    # direct quadrature of the convolution for log|x|, which is integrable
    w = 0.1
    g = lambda u: np.exp(-u * u / (2 * w * w)) / (np.sqrt(2 * np.pi) * w)
    for x in (0.0, 0.07, 0.4):
        direct = quad(lambda u: np.log(abs(x - u)) * g(u), -12 * w, 12 * w, points=[x], limit=200)[0]
        assert log_reg(x, w) == pytest.approx(direct, abs=1e-5)
    for x in (-0.2, 0.0, 0.15):
        # substitute x - u = -v^2 to remove the singularity: int 2 g(x + v^2) dv
        direct = quad(lambda v: 2 * g(x + v * v), 0, np.sqrt(12 * w + abs(x)), limit=200)[0]
        assert inv_sqrt_minus_reg(x, w) == pytest.approx(direct, rel=1e-4)


def test_report_table():
    fit = fit_singularity(T, synth("pv_recip", 0.01), "pv_recip", 0.0, 40 * H, w=W)
    lines = report([fit]).splitlines()
    assert lines[0] == "kind,c,p0,residual,window" and lines[1].startswith("pv_recip,")


def test_corner_check_rejects_cut_through_corner():
    img = ImageGrid.zeros(64, 1.0)
    with pytest.raises(ValueError):
        corner_line_check(img, (0.0, 0.0), 10, 0.0)


def test_corner_check_on_smooth_image():
    img = ImageGrid.from_function(128, 1.0, lambda x, y: np.exp(-(x * x + y * y) / 0.1))
    m = corner_line_check(img, (0.0, 0.0), 10, -0.5)
    assert m.extra["matched"] == 0 and m.extra["predicted"] > 0
