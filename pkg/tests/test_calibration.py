import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from memlif import calibration as c
from memlif.chip import NeuronParams
from memlif.neuron import analytic_rate, pulse_width


def _truth():
    p = NeuronParams().replace(c1=2.5e-12, i_dn0=2e-10, v_leak_slope=0.07, pw_slope=0.1)
    v0, t0 = c.solve_pulse_width(0.45, 20e-3, 1.0, 10e-6, p.pw_slope)
    return c.Calibration(p.replace(pw_v0=v0, pw_t0=t0), c.default_contexts())


CHEAP = [a for a in c.default_anchors() if a.context in ("dc", "leak")]


@pytest.fixture(scope="module")
def round_trip():
    truth = _truth()
    anchors = c.synthetic_anchors(CHEAP, truth)
    return truth, anchors, c.fit(anchors, seed=1, restarts=4, free_contexts=False)


def test_default_anchor_set():
    anchors = c.default_anchors()
    assert len(anchors) >= 14
    assert all(a.source and a.weight == 1.0 for a in anchors)
    assert len({a.name for a in anchors}) == len(anchors)


def test_anchor_rejects_bad_values():
    with pytest.raises(c.AnchorError):
        c.Anchor("x", "rate", -1.0)
    with pytest.raises(c.AnchorError):
        c.Anchor("x", "speed", 1.0)


@given(st.floats(0.03, 0.144))
def test_pulse_width_solve_is_exact(slope):
    v0, t0 = c.solve_pulse_width(0.45, 20e-3, 1.0, 10e-6, slope)
    p = NeuronParams().replace(pw_slope=slope, pw_v0=v0, pw_t0=t0)
    assert pulse_width(0.45, p) == pytest.approx(20e-3, rel=1e-9)
    assert pulse_width(1.0, p) == pytest.approx(10e-6, rel=1e-9)


@given(st.floats(0.0, 1.0))
def test_free_param_codec(u):
    fp = c.FreeParam("params", "c1", 1e-13, 1e-10, log=True)
    x = fp.decode(u)
    assert fp.lo <= x <= fp.hi
    assert fp.encode(x) == pytest.approx(u, abs=1e-9)


def test_rate_anchor_uses_closed_form():
    cal = _truth()
    a = c.default_anchors()[0]
    bias = cal.bias(a.context).replace(**a.bias_overrides())
    assert c.simulate(a, cal) == pytest.approx(analytic_rate(a.conditions["i_syn"], bias, cal.params))


def test_exact_pulse_train_matches_surrogate_order(cal):
    a = next(x for x in c.default_anchors() if x.name == "temporal_10us")
    exact = c.simulate(a, cal)
    approx = c.simulate(a, cal, surrogate=True)
    assert exact == pytest.approx(approx, rel=0.5)


def test_ge_anchor_is_satisfied_above_target():
    a = c.Anchor("x", "decay", 2.0, relation="ge")
    assert c.relative_error(a, 3.0) == 0.0 and c.anchor_loss(a, 3.0) == 0.0
    assert c.relative_error(a, 1.0) == pytest.approx(-0.5)


def test_synthetic_round_trip_recovers_observables(round_trip):
    _, anchors, fit = round_trip
    assert fit.converged
    assert len(fit.residuals) == len(anchors)
    assert max(abs(r.rel_error) for r in fit.residuals) < 0.01
    pw = [r for r in fit.residuals if r.anchor.kind == "pulse_width"]
    assert all(abs(r.rel_error) < 1e-12 for r in pw)


def test_fit_respects_bounds_and_history(round_trip):
    _, _, fit = round_trip
    for fp in c.GLOBAL_SPACE:
        assert fp.lo <= getattr(fit.params, fp.name) <= fp.hi
    assert all(b <= a for a, b in zip(fit.history, fit.history[1:]))


def test_fit_is_deterministic(round_trip):
    _, anchors, fit = round_trip
    again = c.fit(anchors, seed=1, restarts=4, free_contexts=False)
    assert again.calibration == fit.calibration and again.objective == fit.objective


def test_perfect_fit_reports_zero(tmp_path):
    truth = _truth()
    anchors = c.synthetic_anchors(CHEAP, truth)
    rows = c.residual_report(c.FitResult(truth, c.residuals(anchors, truth), True, 0, 0.0, []))
    assert len(rows) == len(anchors)
    assert all(abs(r["rel_error"]) < 1e-12 for r in rows)
    c.write_report(tmp_path / "r.csv", rows)
    assert c.read_report(tmp_path / "r.csv") == rows


def test_report_sorted_by_error(cal):
    fit = c.FitResult(cal, c.residuals(c.default_anchors(), cal), True, 0, 0.0, [])
    errs = [abs(r["rel_error"]) for r in c.residual_report(fit)]
    assert errs == sorted(errs, reverse=True)


def test_anchor_csv_round_trip(tmp_path):
    anchors = c.default_anchors()
    c.write_anchors(tmp_path / "a.csv", anchors)
    assert c.read_anchors(tmp_path / "a.csv") == anchors


@pytest.mark.parametrize("text, where", [
    ("", "a.csv: empty"),
    ("name,kind,target\n", "a.csv: no anchors"),
    ("name,kind,target\nx,rate,fast\n", "a.csv:2:target"),
    ("name,kind,target,conditions\nx,rate,1,i_syn\n", "a.csv:2:conditions"),
    ("name,kind\nx,rate\n", "a.csv:1"),
    ("name,kind,target\nx,rate\n", "a.csv:2"),
])
def test_anchor_csv_errors_name_the_location(tmp_path, text, where):
    (tmp_path / "a.csv").write_text(text)
    with pytest.raises(c.AnchorError, match=where):
        c.read_anchors(tmp_path / "a.csv")


def test_empty_anchor_set_is_rejected():
    with pytest.raises(c.AnchorError):
        c.fit([])
