import numpy as np
import pytest
from hypothesis import given, strategies as st

from memlif.chip import ParameterError, default_bias
from memlif.network import (CHIP_ROWS, AdaptivePair, Crossbar, VdspParams, adaptive_threshold,
                            column_current, load_conductance, save_conductance,
                            shared_regulator_step, spike_to_gates, vdsp_update)
from memlif.neuron import NeuronState
from memlif.sim import (CrossbarLayer, CurrentInput, Experiment, NeuronSpec, ReadChain, dc, run)

VDSP = VdspParams(eta_pot=0.1, eta_dep=0.1)


def test_column_current_examples():
    xb = Crossbar.uniform(4, 2, 1e-4)
    assert column_current(xb, 0, 2.65, 2.4) == 0.0
    spike_to_gates(xb, [True, False, False, False])
    one = column_current(xb, 0, 2.65, 2.4)
    assert one == pytest.approx(25e-6)
    spike_to_gates(xb, [True, True, False, False])
    assert column_current(xb, 0, 2.65, 2.4) == 2 * one


def test_gates_follow_spikes():
    xb = Crossbar.uniform(CHIP_ROWS, 1, 1e-5)
    assert not spike_to_gates(xb, np.zeros(CHIP_ROWS, bool)).any()
    spikes = np.zeros(CHIP_ROWS, bool)
    spikes[3] = True
    assert list(np.flatnonzero(spike_to_gates(xb, spikes))) == [3]
    with pytest.raises(ParameterError):
        spike_to_gates(xb, np.zeros(CHIP_ROWS - 1, bool))


def test_crossbar_rejects_out_of_window_conductance():
    with pytest.raises(ParameterError):
        Crossbar(np.array([[1e-3]]))
    assert Crossbar(np.array([[0.0]])).conductance[0, 0] == 0.0  # unformed cell


@given(st.lists(st.floats(1e-6, 1e-4), min_size=1, max_size=8), st.floats(0.0, 1.0),
       st.randoms())
def test_column_current_linear_and_permutation_invariant(gs, od, rnd):
    xb = Crossbar(np.array(gs)[:, None])
    xb.gate[:] = True
    base = column_current(xb, 0, od, 0.0)
    assert base == pytest.approx(od * sum(gs), rel=1e-12, abs=1e-30)
    perm = list(gs)
    rnd.shuffle(perm)
    xp = Crossbar(np.array(perm)[:, None])
    xp.gate[:] = True
    assert column_current(xp, 0, od, 0.0) == pytest.approx(base, rel=1e-12, abs=1e-30)
    half = Crossbar(np.array(gs)[:, None] / 2, g_min=1e-7)
    half.gate[:] = True
    assert column_current(half, 0, od, 0.0) == pytest.approx(base / 2, rel=1e-12, abs=1e-30)


def test_conductance_csv_round_trip(tmp_path):
    g = np.array([[1e-5, 2.5e-5], [1e-4, 0.0]])
    save_conductance(tmp_path / "g.csv", g)
    assert np.array_equal(load_conductance(tmp_path / "g.csv"), g)
    (tmp_path / "bad.csv").write_text("1e-5,2e-5\n1e-5\n")
    with pytest.raises(ParameterError):
        load_conductance(tmp_path / "bad.csv")


def test_adaptive_threshold_floor():
    pair = AdaptivePair("p", "r")
    assert adaptive_threshold(pair, NeuronState(0.3), 0.6) == 0.6
    assert adaptive_threshold(pair, NeuronState(2.0), 0.6) == 2.0
    assert adaptive_threshold(pair, NeuronState(0.6), 0.6) == 0.6
    with pytest.raises(ParameterError):
        AdaptivePair("p", "p")


def test_shared_regulator_superposition():
    one = shared_regulator_step([True], 10e3, 3.3, 2.4)
    assert shared_regulator_step([False, False], 10e3, 3.3, 2.4) == 0.0
    assert one == pytest.approx(0.9 / 10e3)
    assert shared_regulator_step([True, True], 10e3, 3.3, 2.4) == 2 * one
    with pytest.raises(ParameterError):
        shared_regulator_step([], 10e3, 3.3, 2.4)


def test_vdsp_examples():
    g = 5e-5
    assert vdsp_update(g, 0.0, VDSP) == g
    assert vdsp_update(VDSP.g_max, 1.0, VDSP) == VDSP.g_max
    mid = (VDSP.g_min + VDSP.g_max) / 2
    assert vdsp_update(mid, -1.0, VDSP) == pytest.approx(mid - 0.1 * (mid - VDSP.g_min))


@given(st.floats(1e-6, 1e-4), st.lists(st.floats(-1.0, 1.0), max_size=200))
def test_vdsp_stays_bounded(g, traces):
    for tr in traces:
        g = vdsp_update(g, tr, VDSP)
        assert VDSP.g_min <= g <= VDSP.g_max


@given(st.floats(1e-6, 1e-4), st.floats(0.1, 1.0), st.booleans())
def test_vdsp_converges_monotonically(g, mag, potentiate):
    trace = mag if potentiate else -mag
    bound = VDSP.g_max if potentiate else VDSP.g_min
    dist = abs(bound - g)
    for _ in range(3000):
        g = vdsp_update(g, trace, VDSP)
        assert abs(bound - g) <= dist
        dist = abs(bound - g)
    assert dist <= 1e-6 * (VDSP.g_max - VDSP.g_min)


def _pre_post(extra):
    bias = default_bias()
    exp = Experiment(
        neurons={"pre": NeuronSpec(bias), "post": NeuronSpec(bias)}, duration=0.01, dt=1e-7,
        stimuli={"drive": dc(100e-9)}, currents=[CurrentInput("drive", "pre")],
        record=["v_mem:pre", "v_mem:post", "out:post", "i_in:post"])
    extra(exp, bias)
    return exp


def test_single_cell_crossbar_matches_read_chain(params):
    def chain(exp, bias):
        exp.chains.append(ReadChain("pre", "post", r_syn=10e3))

    def xbar(exp, bias):
        exp.crossbars.append(CrossbarLayer(Crossbar(np.array([[1 / 10e3]])), ["pre"], ["post"],
                                           v_in=bias.vdd))

    a, _ = run(_pre_post(chain), params=params)
    b, _ = run(_pre_post(xbar), params=params)
    assert a.spikes == b.spikes and len(a.spikes["post"]) > 0
    for k in a.series:
        assert np.array_equal(a.series[k], b.series[k]), k
