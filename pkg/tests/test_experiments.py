from importlib import resources

import numpy as np
import pytest

from radonalias.experiments import (KINDS, Check, ConfigError, ExperimentResult, load_config, parse_config,
                                    run_experiment)


def shipped(name, tmp_path, **override):
    cfg = load_config(str(resources.files("radonalias") / "configs" / name))
    cfg.update(out=str(tmp_path / cfg["name"]), images=0)
    cfg.update(override)
    return cfg


def test_defaults_and_types():
    cfg = parse_config("experiment = nyquist\nm = 12\ncenter = 0.1, -0.2\nfactors = 0.5 3\n")
    assert cfg["m"] == 12 and cfg["center"] == (0.1, -0.2) and cfg["factors"] == (0.5, 3.0)
    assert cfg["name"] == "nyquist" and cfg["out"].endswith("nyquist")
    assert cfg["refocus"] is None and cfg["kmax"] == 2


@pytest.mark.parametrize("text, match", [
    ("experiment = replica\nwibble = 3", "unknown key"),
    ("experiment = replica\nm = 3\nm = 4", "duplicate"),
    ("experiment = replica\nm = three", "bad value"),
    ("experiment = replica\njust words", "key = value"),
    ("experiment = dance", "experiment must be"),
    ("m = 3", "experiment must be"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_shipped_configs_parse():
    names = [p.name for p in (resources.files("radonalias") / "configs").iterdir() if p.name.endswith(".cfg")]
    assert {"fig4.cfg", "fig5.cfg", "fig6.cfg", "fig7.cfg", "fig8.cfg", "fig9.cfg", "nyquist.cfg",
            "refocus.cfg"} <= set(names)
    for n in names:
        assert load_config(str(resources.files("radonalias") / "configs" / n))["experiment"] in KINDS


def test_check_semantics():
    assert Check("a", 0.5, 1.0, "<").passed
    assert not Check("a", 1.0, 1.0, "<").passed
    assert Check("a", 1.0, 1.0, "<=").passed
    assert not Check("a", np.nan, 1.0, ">=").passed
    assert Check("a", 2.0, 1.0, ">").line() == "PASS a: 2 > 1"
    res = ExperimentResult("x", [Check("a", 2.0, 1.0, ">"), Check("b", 2.0, 1.0, "<")], values={"v": 3.0})
    assert not res.passed
    assert res.summary().splitlines() == ["experiment x", "PASS a: 2 > 1", "FAIL b: 2 < 1", "value v = 3",
                                          "overall FAIL"]


def test_summary_file_written(tmp_path):
    res = run_experiment(shipped("refocus.cfg", tmp_path))
    assert (tmp_path / "refocus" / "summary.txt").read_text() == res.summary()


def test_convex_edge_coefficient_is_k_over_4m(tmp_path):
    # measured coefficient of -x_-^(-1/2) below the vertex; its ratio to k/(2 pi m) is pi/2
    res = run_experiment(shipped("fig6.cfg", tmp_path, m_list=()))
    assert res.values["coefficient_over_k_4m"] == pytest.approx(1.0, abs=0.03)
    coef = [c for c in res.checks if c.name == "coefficient_rel_error"][0]
    assert coef.value == pytest.approx(np.pi / 2 - 1, abs=0.05)


def test_lanczos3_peaks_leave_the_tangent_segments(tmp_path):
    # the unstretched kernel passes frequencies the segment prediction assumes removed
    res = run_experiment(shipped("fig9.cfg", tmp_path, kernel="lanczos3"))
    off = [c for c in res.checks if c.name == "peaks_off_segments_max_cells"][0]
    assert not off.passed and off.value > 10
