import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from memlif.chip import default_bias, default_power_model
from memlif.network import Crossbar, VdspParams
from memlif.neuron import analytic_rate, pulse_width
from memlif.sim import (CrossbarLayer, CurrentInput, Experiment, ExperimentError, NeuronSpec,
                        ReadChain, dc, isi_rate, output_pulse_lengths, pulse_train, read_neuron,
                        run, single_neuron, single_pulse, spike_rate)

B = default_bias()
PM = default_power_model()


def test_stimulus_samples():
    assert not dc(0.0).sample(100, 1e-6).any()
    train = pulse_train(0.4, 10e-6, 100.0, baseline=2.4).sample(30000, 1e-6)
    high = train > 2.4
    assert high.sum() == 3 * 10
    assert np.allclose(train[high], 2.8)
    n, dt = 500, 1e-6
    assert np.array_equal(single_pulse(0.3, n * dt).sample(n, dt), dc(0.3).sample(n, dt))


def test_single_pulse_over_run_equals_dc(params):
    a, _ = run(read_neuron(single_pulse(0.25, 0.02, baseline=B.vref), 10e3, 0.02, 1e-6), params=params)
    b, _ = run(read_neuron(dc(0.25, B.vref), 10e3, 0.02, 1e-6), params=params)
    assert a.spikes == b.spikes
    assert np.array_equal(a.series["v_mem:n0"], b.series["v_mem:n0"])


def test_validation_errors(params):
    with pytest.raises(ExperimentError, match="too coarse"):
        single_neuron(1e-7, 0.01, 5e-6).validate(params)
    with pytest.raises(ExperimentError, match="probe"):
        single_neuron(1e-7, 0.01, 1e-7, record=["v_mem:nope"]).validate(params)
    with pytest.raises(ExperimentError, match="shorter"):
        single_neuron(1e-7, 1e-8, 1e-7).validate(params)
    with pytest.raises(ExperimentError, match="vrest"):
        single_neuron(1e-7, 0.01, 1e-7, B.replace(vrest=1.5)).validate(params)
    with pytest.raises(ExperimentError):
        run(single_neuron(1e-7, 0.01, 5e-6), params=params)


@settings(max_examples=20)
@given(st.floats(1e-4, 5e-3), st.floats(0.0, 1.2))
def test_quiescent_run_settles_at_rest(duration, v0):
    exp = Experiment(neurons={"n": NeuronSpec(B, initial_v=v0)}, duration=duration + 0.02,
                     dt=1e-6, stimuli={"in": dc(0.0, B.vref)}, chains=[ReadChain("in", "n")])
    trace, _ = run(exp)
    assert trace.spikes["n"] == []
    assert trace.series["v_mem:n"][-1] == B.vrest


def test_constant_drive_matches_closed_form(params):
    trace, _ = run(read_neuron(dc(0.4, B.vref), 10e3, 0.1, 1e-7), params=params)
    expected = analytic_rate(40e-6, B, params)
    measured = len(trace.spikes["n0"]) / trace.duration
    assert measured == pytest.approx(expected, rel=0.02)


def test_output_pulses_last_one_pulse_width(params):
    bias = B.replace(vpw=0.9)
    t_pw = pulse_width(0.9, params)
    dt = t_pw / 37
    trace, _ = run(single_neuron(300e-9, 0.01, dt, bias), params=params)
    lengths = output_pulse_lengths(trace, "n0")
    assert len(lengths) > 5
    assert all(abs(x - t_pw) <= dt * (1 + 1e-9) for x in lengths)
    isi = np.diff(trace.spikes["n0"])
    assert (isi >= t_pw * (1 - 1e-9)).all()


def test_quiescent_fast_mode_static_energy():
    _, ledger = run(single_neuron(0.0, 1.0, 1e-4, B.replace(vpw=0.5)), power=PM)
    block = ledger.blocks["neuron:n0"]
    assert block.static == 5e-6
    assert block.spikes == 0 and ledger.total == 5e-6


def _identity(ledger, chains_active):
    d = ledger.duration
    expected = 0.0
    for name, b in ledger.blocks.items():
        if name.startswith("ldo:"):
            expected += PM.ldo_static * d + PM.ldo_dynamic * b.active_time
        elif name.startswith("atten:"):
            expected += PM.atten_static * d + PM.atten_dynamic * b.active_time
        else:
            expected += PM.neuron_static_fast * d + PM.neuron_espike_fast * b.spikes
    return expected


def test_energy_identity_under_pulsed_drive(params):
    exp = read_neuron(pulse_train(0.4, 10e-6, 1000.0, baseline=B.vref), 10e3, 0.2, 1e-6)
    trace, ledger = run(exp, params=params, power=PM)
    active = ledger.blocks["ldo:in->n0"].active_time
    assert active == pytest.approx(200 * 10e-6, rel=1e-9)
    assert ledger.total == pytest.approx(_identity(ledger, active), rel=1e-15)
    assert ledger.blocks["neuron:n0"].spikes == len(trace.spikes["n0"])
    assert all(v >= 0 for v in ledger.as_dict().values())


def test_power_gating_only_cuts_read_static(params):
    exp = read_neuron(pulse_train(0.4, 10e-6, 1000.0, baseline=B.vref), 10e3, 0.05, 1e-6)
    _, plain = run(exp, params=params)
    _, gated = run(exp, params=params, power_gating=True)
    assert gated.static < plain.static
    assert gated.dynamic == plain.dynamic and gated.spike_energy == plain.spike_energy
    assert gated.blocks["neuron:n0"] == plain.blocks["neuron:n0"]


def test_determinism_byte_identical(tmp_path, params):
    exp = read_neuron(pulse_train(0.4, 15e-6, 100.0, baseline=B.vref), 10e3, 0.2, 1e-6)
    for k in range(2):
        trace, ledger = run(exp, params=params)
        trace.to_csv(tmp_path / f"t{k}.csv")
        trace.spikes_to_csv(tmp_path / f"s{k}.csv")
        ledger.write(tmp_path / f"l{k}.txt")
    for stem in "tsl":
        ext = "txt" if stem == "l" else "csv"
        assert (tmp_path / f"{stem}0.{ext}").read_bytes() == (tmp_path / f"{stem}1.{ext}").read_bytes()
    assert (tmp_path / "t0.csv").read_text().splitlines()[0] == "t_s,v_mem:n0,out:n0,v_in:in"


def test_halving_dt_keeps_rate(params):
    rates = []
    for dt in (1e-6, 5e-7):
        trace, _ = run(read_neuron(dc(0.25, B.vref), 30e3, 0.05, dt), params=params)
        rates.append(isi_rate(trace.spikes["n0"]))
    assert rates[1] == pytest.approx(rates[0], rel=0.01)


def test_rate_helpers():
    assert isi_rate([]) == 0.0
    t = [k * 0.125 for k in range(8)]
    assert isi_rate(t, skip=0) == pytest.approx(8.0)


def test_spike_rate_counts_window(params):
    trace, _ = run(single_neuron(200e-9, 0.01, 1e-7), params=params)
    full = spike_rate(trace, "n0")
    assert full == len(trace.spikes["n0"]) / trace.duration
    with pytest.raises(KeyError):
        spike_rate(trace, "zz")


def test_vdsp_in_the_loop_keeps_bounds(params):
    rng = np.random.default_rng(3)
    g = rng.uniform(1e-6, 1e-4, size=(3, 2))
    layer = CrossbarLayer(Crossbar(g), ["a", "b", "c"], ["x", "y"], v_in=B.vdd,
                          vdsp=VdspParams(eta_pot=0.2, eta_dep=0.2))
    neurons = {n: NeuronSpec(B) for n in "abcxy"}
    exp = Experiment(neurons=neurons, duration=0.01, dt=1e-7,
                     stimuli={"s": dc(150e-9)}, currents=[CurrentInput("s", n) for n in "abc"],
                     crossbars=[layer])
    run(exp, params=params)
    moved = layer.crossbar.conductance
    assert not np.array_equal(moved, g)
    assert ((moved >= 1e-6) & (moved <= 1e-4)).all()
