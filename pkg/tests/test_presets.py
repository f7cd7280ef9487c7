import pytest

from memlif.presets import (FIGURES, PRESETS, adaptive_setup, read_curve, read_trace, reproduce,
                            write_curve)


def test_every_figure_has_a_preset():
    assert set(FIGURES) == set(PRESETS)


def test_curve_round_trip(tmp_path):
    write_curve(tmp_path / "c.csv", ["series", "x"], [["a", 0.1], ["b", 1e-7]])
    assert read_curve(tmp_path / "c.csv") == [{"series": "a", "x": 0.1}, {"series": "b", "x": 1e-7}]


def test_unknown_figure(tmp_path, cal):
    with pytest.raises(KeyError):
        reproduce("nope", cal, tmp_path)


@pytest.mark.parametrize("fig", ["dc-pw", "leak-up", "leak-down", "dc-rate"])
def test_quick_presets_pass(tmp_path, cal, fig):
    checks = reproduce(fig, cal, tmp_path)
    assert checks and all(c.passed for c in checks), [c for c in checks if not c.passed]
    assert (tmp_path / f"{fig}_curve.csv").is_file()
    assert read_trace(tmp_path / f"{fig}_trace.csv")["t_s"].size > 1


def test_res_preset_has_five_read_levels(tmp_path, cal):
    checks = reproduce("res", cal, tmp_path)
    assert all(c.passed for c in checks)
    levels = {r["v_read_v"] for r in read_curve(tmp_path / "res_curve.csv")}
    assert levels == {0.1, 0.175, 0.25, 0.325, 0.4}


def test_adaptive_setup_is_consistent(cal):
    setup = adaptive_setup(cal)
    assert setup.primary.vrest < 0.6 < setup.primary.vthr
    assert setup.regulator.vrest == 0.6 and setup.regulator.vthr == setup.regulator.vdd
    assert setup.regulator.vref < setup.regulator.vdd
    assert 0 < setup.width < 1e-3


def test_adaptive_preset_traces(tmp_path, cal):
    checks = reproduce("adaptive", cal, tmp_path)
    assert all(c.passed for c in checks)
    trace = read_trace(tmp_path / "adaptive_trace.csv")
    assert {"v_mem:primary", "v_mem:regulator", "thr:primary"} <= set(trace)
