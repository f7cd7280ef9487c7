import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from memlif.chip import BiasConfig, NeuronParams, ParameterError, default_bias
from memlif.neuron import (NeuronState, Phase, Readout, analytic_period, analytic_rate, decay_time,
                           leak_current, leak_setting, membrane_phase_readout, pulse_width, step)
from memlif.sim import isi_rate, read_neuron, run, dc, single_neuron

P = NeuronParams()
B = default_bias()

def test_pulse_width_anchors():
    assert pulse_width(0.45, P) == pytest.approx(20e-3, rel=1e-9)
    assert pulse_width(1.0, P) == pytest.approx(10e-6, rel=1e-9)

def test_pulse_width_midpoint_between_anchors():
    mid = pulse_width(0.725, P)
    assert 10e-6 < mid < 20e-3

@given(st.floats(0.05, 3.3), st.floats(0.05, 3.3))
def test_pulse_width_strictly_decreasing(a, b):
    if a == b:
        return
    lo, hi = sorted((a, b))
    assert pulse_width(lo, P) >= pulse_width(hi, P)

def test_pulse_width_rejects_nonpositive_bias():
    with pytest.raises(ParameterError):
        pulse_width(0.0, P)

def test_leak_direction():
    assert leak_current(0.6, B, P) == 0.0
    assert leak_current(1.0, B, P) < 0.0
    assert leak_current(0.1, B, P) > 0.0

def test_leak_grows_with_bias():
    lo = leak_setting(B.replace(vtaun=1.0, vtaup=1.0), P)
    hi = leak_setting(B.replace(vtaun=1.3, vtaup=1.3), P)
    assert hi.i_dn > lo.i_dn and hi.i_up > lo.i_up

def test_rest_is_fixed_point():
    s = NeuronState(0.6)
    for dt in (1e-9, 1e-6, 1.0):
        new, spiked = step(s, 0.0, dt, B, P)
        assert new.v_mem == 0.6 and not spiked

def test_large_input_fires_and_resets():
    s, spiked = step(NeuronState(1.19), 1e-6, 1e-7, B, P, t=0.5)
    assert spiked
    assert s.v_mem == 0.0 and s.out == B.vdd and s.phase is Phase.SPIKING
    assert 0.5 < s.last_spike_time < 0.5 + 1e-7

def test_recovers_toward_rest_after_pulse():
    s = NeuronState(0.0, remaining=0.0)
    vs = []
    for _ in range(50):
        s, _ = step(s, 0.0, 1e-6, B, P)
        vs.append(s.v_mem)
    assert all(a <= b for a, b in zip(vs, vs[1:]))
    assert vs[-1] == 0.6

def test_step_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        step(NeuronState(0.6), 0.0, 0.0, B, P)
    with pytest.raises(ParameterError):
        step(NeuronState(0.6), -1e-9, 1e-6, B, P)

def test_analytic_limits():
    i_dn = leak_setting(B, P).i_dn
    assert analytic_period(i_dn, B, P) == math.inf
    assert analytic_period(0.5 * i_dn, B, P) == math.inf
    assert 1.0 / analytic_period(1.0, B, P) == pytest.approx(1.0 / pulse_width(B.vpw, P), rel=1e-6)

def test_decay_time():
    assert decay_time(0.6, B, P) == 0.0
    assert decay_time(1.2, B, P) == pytest.approx(P.c1 * 0.6 / leak_setting(B, P).i_dn)
    assert decay_time(0.0, B, P) == pytest.approx(P.c1 * 0.6 / leak_setting(B, P).i_up)

def test_phase_readout_examples():
    assert membrane_phase_readout(0.6, B) == (Readout.NEAR_REST, 0.0)
    assert membrane_phase_readout(0.0, B) == (Readout.RECENTLY_FIRED, -1.0)
    assert membrane_phase_readout(1.2, B) == (Readout.NEAR_THRESHOLD, 1.0)

@pytest.mark.parametrize("i", [20e-9, 50e-9, 100e-9, 200e-9, 400e-9])
def test_simulated_rate_matches_closed_form(i):
    period = analytic_period(i, B, P)
    dt = period / 1000
    exp = single_neuron(i, 25 * period, dt, B)
    trace, _ = run(exp, params=P)
    assert isi_rate(trace.spikes["n0"]) == pytest.approx(1.0 / period, rel=0.02)

@given(st.floats(0.0, 1.2), st.floats(1e-9, 1e-2))
def test_zero_input_moves_toward_rest(v0, dt):
    new, spiked = step(NeuronState(v0), 0.0, dt, B, P)
    assert not spiked
    dv = new.v_mem - v0
    assert np.sign(dv) in (0.0, np.sign(B.vrest - v0))
    # never overshoots rest
    assert (new.v_mem - B.vrest) * (v0 - B.vrest) >= 0.0

@given(st.lists(st.floats(0.0, 1e-5), min_size=1, max_size=60), st.floats(0.0, 3.3))
def test_membrane_stays_within_rails(currents, v0):
    s = NeuronState(v0)
    for i in currents:
        s, _ = step(s, i, 1e-6, B, P)
        assert 0.0 <= s.v_mem <= B.vdd

def test_rate_monotone_in_current_and_threshold():
    currents = np.geomspace(1e-6, 200e-6, 6)
    rates = [analytic_rate(i, B, P) for i in currents]
    assert all(a <= b for a, b in zip(rates, rates[1:]))
    thresholds = np.linspace(0.8, 1.8, 6)
    rates = [analytic_rate(50e-6, B.replace(vthr=t), P) for t in thresholds]
    assert all(a >= b for a, b in zip(rates, rates[1:]))

def test_simulated_rate_monotone_in_resistance():
    rs = np.geomspace(10e3, 1e6, 5)
    rates = []
    for r in rs:
        trace, _ = run(read_neuron(dc(0.25, B.vref), r, 0.05, 1e-6, B), params=P)
        rates.append(len(trace.spikes["n0"]))
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert rates[0] > rates[-1]
