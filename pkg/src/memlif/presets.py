"""Figure-reproduction experiments and their pass/fail checks.

Each preset runs the simulator and returns a swept curve plus one
representative trace. Checks are computed from the written CSV files only,
so an external tool can re-derive every verdict.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calibration import LOW_LEAK_VTAUN, Calibration, pulse_train_rate
from .chip import LEAK_REFERENCE_BIAS, BiasConfig, NeuronParams
from .network import AdaptivePair
from .neuron import analytic_period, decay_time, leak_setting, pulse_width
from .signal_chain import attenuate
from .sim import (AdaptiveLink, Experiment, NeuronSpec, ReadChain, TraceSet, dc,
                  isi_rate, output_pulse_lengths, pulse_train, run, single_pulse)

FIGURES = ("res", "dc-rate", "dc-pw", "temporal", "leak-down", "leak-up", "adaptive")

# Drive used throughout the pulsed experiments: 400 mV read over 10 kohm.
PULSE_V_READ = 0.4
PULSE_R_SYN = 10e3
PULSE_I_SYN = PULSE_V_READ / PULSE_R_SYN


@dataclass
class PresetResult:
    figure: str
    header: list[str]
    rows: list[list]
    trace: TraceSet
    trace_every: int = 1


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


# ---------------------------------------------------------------------------
# helpers


def _map(fn, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _dc_chain(bias: BiasConfig, v_read: float, r_syn: float, duration: float, dt: float,
              record=None) -> Experiment:
    return Experiment(
        neurons={"n0": NeuronSpec(bias)}, duration=duration, dt=dt,
        stimuli={"in": dc(v_read, bias.vref)}, chains=[ReadChain("in", "n0", r_syn=r_syn)],
        record=record if record is not None else [])


def _measured_rate(spikes, duration: float) -> float:
    if len(spikes) >= 3:
        return isi_rate(spikes, skip=1)
    return len(spikes) / duration


def _dc_rate_task(args):
    """Simulated steady rate for a DC read; the window covers a few periods."""
    bias, params, v_read, r_syn, dt, cap = args
    i_att = attenuate(max(0.0, v_read) / r_syn, params).i_att
    period = analytic_period(i_att, bias, params)
    if not math.isfinite(period) or period > cap:
        duration = cap
    else:
        duration = min(cap, 4.5 * period)
    duration = max(duration, 100 * dt)
    exp = _dc_chain(bias, v_read, r_syn, duration, dt)
    trace, _ = run(exp, params=params)
    return _measured_rate(trace.spikes["n0"], trace.duration)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return repr(float(x))


def write_curve(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def read_curve(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        d = {}
        for k, v in r.items():
            try:
                d[k] = float(v)
            except ValueError:
                d[k] = v
        out.append(d)
    return out


def read_trace(path) -> dict[str, np.ndarray]:
    data = np.genfromtxt(path, delimiter=",", names=True, deletechars="", dtype=float)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def _within(value: float, target: float, tol: float) -> bool:
    return abs(value / target - 1.0) <= tol


def _check(name: str, ok: bool, detail: str) -> Check:
    return Check(name, bool(ok), detail)


def _nonincreasing(xs, rtol=1e-9) -> bool:
    return all(b <= a * (1 + rtol) + 1e-300 for a, b in zip(xs, xs[1:]))


def _nondecreasing(xs, rtol=1e-9) -> bool:
    return all(b >= a * (1 - rtol) for a, b in zip(xs, xs[1:]))


# ---------------------------------------------------------------------------
# res: rate vs synaptic resistance for five read voltages

RES_V_READ = (0.1, 0.175, 0.25, 0.325, 0.4)
RES_R = tuple(float(r) for r in np.logspace(4, 6, 9))


def run_res(cal: Calibration, dt: float = 1e-6, jobs: int = 1) -> PresetResult:
    bias, params = cal.bias("res"), cal.params
    grid = [(v, r) for v in RES_V_READ for r in RES_R]
    rates = _map(_dc_rate_task, [(bias, params, v, r, dt, 2.0) for v, r in grid], jobs)
    rows = [[v, r, rate] for (v, r), rate in zip(grid, rates)]
    trace, _ = run(_dc_chain(bias, 0.25, 10e3, 2e-3, dt, ["v_mem:n0", "out:n0", "v_in:in"]),
                   params=params)
    return PresetResult("res", ["v_read_v", "r_syn_ohm", "rate_hz"], rows, trace)


def check_res(curve, trace) -> list[Check]:
    mid = [r for r in curve if abs(r["v_read_v"] - 0.25) < 1e-9]
    rates = [r["rate_hz"] for r in sorted(mid, key=lambda r: r["r_syn_ohm"])]
    hi, lo = rates[0], rates[-1]
    span = math.log10(hi / lo) if lo > 0 else math.inf
    out = [
        _check("res: rate nonincreasing in R at 250 mV", _nonincreasing(rates),
               f"rates {['%.4g' % x for x in rates]}"),
        _check("res: span >= 3 decades", span >= 3, f"{span:.2f} decades"),
        _check("res: 10 kohm rate within x3 of 25 kHz", 25e3 / 3 <= hi <= 25e3 * 3, f"{hi:.4g} Hz"),
        _check("res: 1 Mohm rate within x3 of 8 Hz", 8 / 3 <= lo <= 8 * 3, f"{lo:.4g} Hz"),
    ]
    for v in RES_V_READ:
        sub = sorted((r for r in curve if abs(r["v_read_v"] - v) < 1e-9), key=lambda r: r["r_syn_ohm"])
        out.append(_check(f"res: nonincreasing at {v * 1e3:.0f} mV",
                          _nonincreasing([r["rate_hz"] for r in sub]), f"{len(sub)} points"))
    return out


# ---------------------------------------------------------------------------
# dc-rate: rate vs input current and threshold, plus the rate ceiling

DC_I = tuple(float(i) for i in np.logspace(math.log10(10e-6), math.log10(200e-6), 6))
DC_VTHR = (0.8, 1.0, 1.2, 1.4, 1.6, 1.8)
CEILING_VPW = (0.8, 0.9, 1.0, 1.1)


def run_dc_rate(cal: Calibration, dt: float = 1e-7, jobs: int = 1) -> PresetResult:
    base, params = cal.bias("dc"), cal.params
    points = [("rate", base.replace(vthr=vthr), i) for vthr in DC_VTHR for i in DC_I]
    points += [("ceiling", base.replace(vthr=1.2, vpw=vpw), 200e-6) for vpw in CEILING_VPW]
    tasks = []
    for _, b, i in points:
        step = min(dt, pulse_width(b.vpw, params) / 10)
        tasks.append((b, params, i * 10e3, 10e3, step, 0.05))
    rates = _map(_dc_rate_task, tasks, jobs)
    rows = []
    for (series, b, i), rate in zip(points, rates):
        t_pw = pulse_width(b.vpw, params)
        rows.append([series, b.vthr, b.vpw, i, rate, 1.0 / t_pw])
    i_ref = 40e-6
    trace, _ = run(_dc_chain(base, i_ref * 10e3, 10e3, 2e-3, dt,
                             ["v_mem:n0", "out:n0"]), params=params)
    return PresetResult("dc-rate", ["series", "vthr_v", "vpw_v", "i_syn_a", "rate_hz", "ceiling_hz"],
                        rows, trace, trace_every=10)


def check_dc_rate(curve, trace) -> list[Check]:
    def rate(vthr, i):
        for r in curve:
            if r["series"] == "rate" and abs(r["vthr_v"] - vthr) < 1e-9 and abs(r["i_syn_a"] / i - 1) < 1e-6:
                return r["rate_hz"]
        raise KeyError((vthr, i))

    out = []
    for vthr, i, target in ((1.8, 10e-6, 419.0), (1.8, 200e-6, 59e3),
                            (0.8, 10e-6, 800.0), (0.8, 200e-6, 68e3)):
        r = rate(vthr, i)
        out.append(_check(f"dc-rate: {i * 1e6:.0f} uA at {vthr} V within 30% of {target:g} Hz",
                          _within(r, target, 0.30), f"{r:.4g} Hz ({r / target - 1:+.1%})"))
    for vpw, target in ((0.8, 20e3), (1.1, 92e3)):
        r = next(x["rate_hz"] for x in curve if x["series"] == "ceiling" and abs(x["vpw_v"] - vpw) < 1e-9)
        out.append(_check(f"dc-rate: max rate at vpw {vpw} V within 30% of {target:g} Hz",
                          _within(r, target, 0.30), f"{r:.4g} Hz ({r / target - 1:+.1%})"))
    over = [r for r in curve if r["rate_hz"] > r["ceiling_hz"] * (1 + 1e-9)]
    out.append(_check("dc-rate: no rate above 1/T_pw", not over, f"{len(over)} violations"))
    ok_i = all(_nondecreasing([rate(v, i) for i in DC_I]) for v in DC_VTHR)
    ok_v = all(_nonincreasing([rate(v, i) for v in DC_VTHR]) for i in DC_I)
    out.append(_check("dc-rate: rate nondecreasing in current", ok_i, ""))
    out.append(_check("dc-rate: rate nonincreasing in threshold", ok_v, ""))
    return out


# ---------------------------------------------------------------------------
# dc-pw: output pulse width vs V_pw

PW_GRID = tuple(float(v) for v in np.round(np.linspace(0.45, 1.1, 12), 10))
PW_GRID = tuple(sorted(set(PW_GRID) | {1.0}))


def _pw_task(args):
    bias, params = args
    t_pw = pulse_width(bias.vpw, params)
    dt = t_pw / 100
    # one input pulse, just long enough to fire once and over before the output ends
    i_att = attenuate(200e-6, params).i_att
    t_charge = params.c1 * (bias.vthr - bias.vrest) / (i_att - leak_setting(bias, params).i_dn)
    width = (math.ceil(t_charge / dt) + 2) * dt
    exp = Experiment(
        neurons={"n0": NeuronSpec(bias)}, duration=width + t_pw + 40 * dt, dt=dt,
        stimuli={"in": single_pulse(2.0, width, 10 * dt, bias.vref)},
        chains=[ReadChain("in", "n0", r_syn=10e3)], record=["v_mem:n0", "out:n0"])
    trace, _ = run(exp, params=params)
    lengths = output_pulse_lengths(trace, "n0")
    return (lengths[0] if len(lengths) == 1 else math.nan), dt


def run_dc_pw(cal: Calibration, dt: float | None = None, jobs: int = 1) -> PresetResult:
    base, params = cal.bias("dc"), cal.params
    results = _map(_pw_task, [(base.replace(vpw=v), params) for v in PW_GRID], jobs)
    rows = [[v, pulse_width(v, params), sim, step] for v, (sim, step) in zip(PW_GRID, results)]
    b = base.replace(vpw=1.0)
    step = pulse_width(1.0, params) / 100 if dt is None else dt
    trace, _ = run(_dc_chain(b, 0.2, 10e3, 200e-6, step, ["v_mem:n0", "out:n0"]), params=params)
    return PresetResult("dc-pw", ["vpw_v", "t_pw_model_s", "t_pw_sim_s", "dt_s"], rows, trace)


def check_dc_pw(curve, trace) -> list[Check]:
    by_v = {round(r["vpw_v"], 9): r for r in curve}
    out = []
    for v, target in ((0.45, 20e-3), (1.0, 10e-6)):
        t = by_v[v]["t_pw_model_s"]
        out.append(_check(f"dc-pw: T_pw({v} V) within 1% of {target:g} s", _within(t, target, 0.01),
                          f"{t:.6g} s"))
    ts = [r["t_pw_model_s"] for r in sorted(curve, key=lambda r: r["vpw_v"])]
    out.append(_check("dc-pw: strictly decreasing", all(b < a for a, b in zip(ts, ts[1:])),
                      f"{len(ts)} points"))
    bad = [r for r in curve if not abs(r["t_pw_sim_s"] - r["t_pw_model_s"]) <= r["dt_s"] * 1.0001]
    out.append(_check("dc-pw: simulated pulse length within one step of T_pw", not bad,
                      f"{len(bad)} mismatches"))
    return out


# ---------------------------------------------------------------------------
# temporal: pulsed drive at 100 Hz with varying pulse width

TEMPORAL_WIDTHS = (5e-6, 7e-6, 10e-6, 12e-6, 15e-6, 20e-6)
TEMPORAL_RATE = 100.0


def _pulse_experiment(bias, width, duration, dt, record=None):
    return Experiment(
        neurons={"n0": NeuronSpec(bias)}, duration=duration, dt=dt,
        stimuli={"in": pulse_train(PULSE_V_READ, width, TEMPORAL_RATE, 0.0, bias.vref)},
        chains=[ReadChain("in", "n0", r_syn=PULSE_R_SYN)],
        record=record if record is not None else [])


def _temporal_duration(bias, params, width) -> float:
    est = pulse_train_rate(params, bias, PULSE_I_SYN, width, TEMPORAL_RATE, n_pulses=400)
    if est <= 0:
        return 3.0
    return float(min(3.0, max(0.3, math.ceil(6.5 / est * TEMPORAL_RATE) / TEMPORAL_RATE)))


def _temporal_task(args):
    bias, params, width, dt = args
    duration = _temporal_duration(bias, params, width)
    trace, _ = run(_pulse_experiment(bias, width, duration, dt), params=params)
    spikes = trace.spikes["n0"]
    rate = _measured_rate(spikes, duration)
    per = 1.0 / TEMPORAL_RATE
    if len(spikes) >= 2:
        # input pulses that started between consecutive output spikes
        counts = [math.floor(b / per) - math.floor(a / per) for a, b in zip(spikes, spikes[1:])]
        ppf = sum(counts) / len(counts)
    else:
        ppf = math.inf
    return rate, ppf, duration, len(spikes)


def run_temporal(cal: Calibration, dt: float = 1e-6, jobs: int = 1) -> PresetResult:
    bias, params = cal.bias("temporal"), cal.params
    res = _map(_temporal_task, [(bias, params, w, dt) for w in TEMPORAL_WIDTHS], jobs)
    rows = [[w, r, p, d, n] for w, (r, p, d, n) in zip(TEMPORAL_WIDTHS, res)]
    trace, _ = run(_pulse_experiment(bias, 15e-6, 0.2, dt, ["v_mem:n0", "out:n0", "v_in:in"]),
                   params=params)
    return PresetResult("temporal", ["width_s", "rate_hz", "pulses_per_spike", "duration_s", "spikes"],
                        rows, trace, trace_every=10)


def check_temporal(curve, trace) -> list[Check]:
    by_w = {round(r["width_s"] * 1e6, 6): r for r in curve}
    r10, r7, r15 = by_w[10.0]["rate_hz"], by_w[7.0]["rate_hz"], by_w[15.0]["rate_hz"]
    ppf = by_w[15.0]["pulses_per_spike"]
    rates = [r["rate_hz"] for r in sorted(curve, key=lambda r: r["width_s"])]
    return [
        _check("temporal: 10 us rate within 50% of 8 Hz", _within(r10, 8.0, 0.5), f"{r10:.4g} Hz"),
        _check("temporal: 7 us rate below 10 us rate", r7 < r10, f"{r7:.4g} < {r10:.4g} Hz"),
        _check("temporal: 15 us fires after 5 +- 1 pulses", abs(ppf - 5) <= 1, f"{ppf:.3g} pulses"),
        _check("temporal: 15 us rate within 50% of 18 Hz", _within(r15, 18.0, 0.5), f"{r15:.4g} Hz"),
        _check("temporal: rate monotone in pulse width", _nondecreasing(rates),
               f"{['%.4g' % x for x in rates]}"),
    ]


# ---------------------------------------------------------------------------
# leak-down / leak-up: free relaxation toward rest

LEAK_VTAUN = tuple(float(v) for v in np.round(np.linspace(1.0, 1.35, 8), 10))
LEAK_VTAUP = tuple(float(v) for v in np.round(np.linspace(1.1, 1.6, 6), 10))


def _relax(bias, params, v0, duration, dt):
    exp = Experiment(neurons={"n0": NeuronSpec(bias, initial_v=v0)}, duration=duration, dt=dt,
                     record=["v_mem:n0"])
    trace, _ = run(exp, params=params)
    v = trace.series["v_mem:n0"]
    at_rest = np.flatnonzero(v == bias.vrest)
    t_rest = float(trace.time[at_rest[0]]) if at_rest.size else math.inf
    return trace, t_rest


def run_leak_down(cal: Calibration, dt: float = 1e-6, jobs: int = 1) -> PresetResult:
    bias, params = cal.bias("leak"), cal.params
    rows = []
    high = bias
    low = bias.replace(vtaun=LOW_LEAK_VTAUN)
    trace, t_high = _relax(high, params, high.vthr, 3 * decay_time(high.vthr, high, params) + 1e-3, dt)
    _, t_low = _relax(low, params, low.vthr, 2.2, dt)
    rows.append(["high", high.vtaun, t_high, decay_time(high.vthr, high, params)])
    rows.append(["low", low.vtaun, t_low, decay_time(low.vthr, low, params)])
    for v in LEAK_VTAUN:
        b = bias.replace(vtaun=v)
        rows.append(["grid", v, math.nan, decay_time(b.vthr, b, params)])
    return PresetResult("leak-down", ["point", "vtaun_v", "decay_sim_s", "decay_model_s"], rows,
                        trace, trace_every=10)


def check_leak_down(curve, trace) -> list[Check]:
    high = next(r for r in curve if r["point"] == "high")
    low = next(r for r in curve if r["point"] == "low")
    grid = [r["decay_model_s"] for r in sorted((r for r in curve if r["point"] == "grid"),
                                                key=lambda r: r["vtaun_v"])]
    v = trace["v_mem:n0"]
    return [
        _check("leak-down: high-leak decay within 20% of 8 ms", _within(high["decay_sim_s"], 8e-3, 0.2),
               f"{high['decay_sim_s'] * 1e3:.4g} ms"),
        _check("leak-down: low-leak decay above 2 s", low["decay_sim_s"] > 2.0,
               f"not at rest after {2.2 if math.isinf(low['decay_sim_s']) else low['decay_sim_s']:.3g} s"),
        _check("leak-down: decay shortens as vtaun rises", all(b < a for a, b in zip(grid, grid[1:])), ""),
        _check("leak-down: trace falls monotonically", bool(np.all(np.diff(v) <= 0)), ""),
    ]


def run_leak_up(cal: Calibration, dt: float = 1e-6, jobs: int = 1) -> PresetResult:
    bias, params = cal.bias("leak"), cal.params
    rows = []
    trace = None
    for v in LEAK_VTAUP:
        b = bias.replace(vtaup=v)
        model = decay_time(0.0, b, params)
        step = min(dt, model / 200)
        duration = min(2.0, 1.5 * model + 20 * step)
        tr, t_rest = _relax(b, params, 0.0, duration, step)
        rows.append([v, t_rest, model, step])
        if trace is None:
            trace = tr
    return PresetResult("leak-up", ["vtaup_v", "rise_sim_s", "rise_model_s", "dt_s"], rows, trace,
                        trace_every=10)


def check_leak_up(curve, trace) -> list[Check]:
    rows = sorted(curve, key=lambda r: r["vtaup_v"])
    sims = [r["rise_sim_s"] for r in rows]
    finite = [s for s in sims if math.isfinite(s)]
    v = trace["v_mem:n0"]
    agree = all(abs(r["rise_sim_s"] - r["rise_model_s"]) <= r["dt_s"] * 1.0001 for r in rows)
    return [
        _check("leak-up: rise time shortens as vtaup rises", all(b < a for a, b in zip(finite, finite[1:])),
               f"{['%.4g' % s for s in sims]}"),
        _check("leak-up: simulated rise matches the constant-current model", agree, ""),
        _check("leak-up: trace rises monotonically to rest", bool(np.all(np.diff(v) >= 0)), ""),
    ]


# ---------------------------------------------------------------------------
# adaptive: primary neuron whose threshold is a regulator membrane

ADAPTIVE_RATE = 1000.0
ADAPTIVE_FLOOR = 0.6
ADAPTIVE_TARGET_ISI = (2e-3, 5e-3)
ADAPTIVE_TARGET_THR = (0.6, 2.0)


@dataclass(frozen=True)
class AdaptiveSetup:
    """Derived biases and drive of the adaptive pair for a given calibration."""

    primary: BiasConfig
    regulator: BiasConfig
    width: float
    duration: float = 60e-3


def _isi_with_threshold(params, bias, width, thr) -> float:
    b = bias.replace(vthr=thr)
    return 1.0 / max(pulse_train_rate(params, b, PULSE_I_SYN, width, ADAPTIVE_RATE, 200), 1e-9)


def _regulator(base: BiasConfig, params: NeuronParams, t_pw: float, step: float,
               isi_eq: float) -> BiasConfig:
    """Regulator biases for a given jump per primary spike and equilibrium interval.

    Each primary spike drives ``(vdd - vref) / R`` for ``T_pw`` into the
    regulator; vref sets the jump. The downward leak over one equilibrium
    interval cancels one jump, which sets vtaun.
    """
    overdrive = step * params.c1 * params.attenuation_k * 10e3 / t_pw
    i_dn = step * params.c1 / isi_eq
    vtaun = LEAK_REFERENCE_BIAS + params.v_leak_slope * math.log(i_dn / params.i_dn0)
    return base.replace(vref=base.vdd - overdrive, vtaun=vtaun, vthr=base.vdd,
                        vrest=ADAPTIVE_FLOOR)


def _adaptive_score(setup: AdaptiveSetup, params: NeuronParams) -> float:
    trace, _ = run(adaptive_experiment(setup), params=params)
    isi = np.diff(trace.spikes["primary"])
    if len(isi) < 4 or not _nondecreasing(list(isi), rtol=1e-6):
        return math.inf
    reg_end = trace.series["v_mem:regulator"][-1]
    return (abs(math.log(isi[0] / ADAPTIVE_TARGET_ISI[0]))
            + abs(math.log(isi[-1] / ADAPTIVE_TARGET_ISI[1]))
            + abs(math.log(reg_end / ADAPTIVE_TARGET_THR[1])))


def adaptive_setup(cal: Calibration, dt: float = 1e-6) -> AdaptiveSetup:
    """Derive the unreported adaptive-pair biases from the calibrated constants.

    The primary's rest level and drive width are picked on a grid so its
    steady interval is 2 ms at a 0.6 V threshold and 5 ms at 2.0 V. The
    regulator's jump per spike and equilibrium interval are then picked by
    short simulations: monotone intervals, ending near 5 ms with the
    regulator near 2.0 V.
    """
    params = cal.params
    base = cal.bias("temporal")
    best = None
    for vrest in np.round(np.arange(0.02, 0.59, 0.02), 10):
        b = base.replace(vrest=float(vrest))
        for k in range(1, 40):
            w = k * dt
            err = (abs(math.log(_isi_with_threshold(params, b, w, ADAPTIVE_TARGET_THR[0])
                                / ADAPTIVE_TARGET_ISI[0]))
                   + abs(math.log(_isi_with_threshold(params, b, w, ADAPTIVE_TARGET_THR[1])
                                  / ADAPTIVE_TARGET_ISI[1])))
            if best is None or err < best[0] - 1e-12:
                best = (err, float(vrest), w)
    _, vrest, width = best
    # the primary's own vthr is overridden by the regulator; keep it valid
    primary = base.replace(vrest=vrest, vthr=ADAPTIVE_TARGET_THR[1])
    t_pw = pulse_width(primary.vpw, params)
    choice = None
    for step in (0.15, 0.2, 0.25, 0.3):
        for isi_eq in (5e-3, 6e-3, 7e-3, 8e-3):
            setup = AdaptiveSetup(primary, _regulator(base, params, t_pw, step, isi_eq), width)
            score = _adaptive_score(setup, params)
            if choice is None or score < choice[0] - 1e-12:
                choice = (score, setup)
    return choice[1]


def adaptive_experiment(setup: AdaptiveSetup, dt: float = 1e-6) -> Experiment:
    return Experiment(
        neurons={"primary": NeuronSpec(setup.primary), "regulator": NeuronSpec(setup.regulator)},
        duration=setup.duration, dt=dt,
        stimuli={"in": pulse_train(PULSE_V_READ, setup.width, ADAPTIVE_RATE, 0.0, setup.primary.vref)},
        chains=[ReadChain("in", "primary", r_syn=PULSE_R_SYN)],
        adaptive=[AdaptiveLink(AdaptivePair("primary", "regulator", 10e3), ADAPTIVE_FLOOR)],
        record=["v_mem:primary", "out:primary", "v_mem:regulator", "thr:primary"])


def run_adaptive(cal: Calibration, dt: float = 1e-6, jobs: int = 1) -> PresetResult:
    setup = adaptive_setup(cal)
    trace, _ = run(adaptive_experiment(setup, dt), params=cal.params)
    spikes = trace.spikes["primary"]
    rows = []
    for k, (a, b) in enumerate(zip(spikes, spikes[1:]), start=1):
        rows.append([k, b, b - a])
    return PresetResult("adaptive", ["index", "t_s", "isi_s"], rows, trace, trace_every=10)


def check_adaptive(curve, trace) -> list[Check]:
    isi = [r["isi_s"] for r in curve]
    reg = trace["v_mem:regulator"]
    thr = trace["thr:primary"]
    out = [_check("adaptive: at least 4 intervals", len(isi) >= 4, f"{len(isi)} intervals")]
    if len(isi) < 4:
        return out
    return out + [
        _check("adaptive: ISI nondecreasing", _nondecreasing(isi, rtol=1e-6),
               f"{isi[0] * 1e3:.3g} ms to {isi[-1] * 1e3:.3g} ms"),
        _check("adaptive: first ISI within 50% of 2 ms", _within(isi[0], 2e-3, 0.5), f"{isi[0] * 1e3:.3g} ms"),
        _check("adaptive: last ISI within 50% of 5 ms", _within(isi[-1], 5e-3, 0.5), f"{isi[-1] * 1e3:.3g} ms"),
        _check("adaptive: threshold starts within 15% of 0.6 V", _within(thr[0], 0.6, 0.15), f"{thr[0]:.3g} V"),
        _check("adaptive: regulator ends within 15% of 2.0 V", _within(reg[-1], 2.0, 0.15),
               f"{reg[-1]:.3g} V"),
    ]


PRESETS = {
    "res": (run_res, check_res),
    "dc-rate": (run_dc_rate, check_dc_rate),
    "dc-pw": (run_dc_pw, check_dc_pw),
    "temporal": (run_temporal, check_temporal),
    "leak-down": (run_leak_down, check_leak_down),
    "leak-up": (run_leak_up, check_leak_up),
    "adaptive": (run_adaptive, check_adaptive),
}


def reproduce(figure: str, cal: Calibration, outdir, dt: float | None = None,
              jobs: int = 1) -> list[Check]:
    """Run a preset, write its CSVs and return checks re-derived from those files."""
    if figure not in PRESETS:
        raise KeyError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    runner, checker = PRESETS[figure]
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    kwargs = {"jobs": jobs}
    if dt is not None:
        kwargs["dt"] = dt
    result = runner(cal, **kwargs)
    curve_path = outdir / f"{figure}_curve.csv"
    trace_path = outdir / f"{figure}_trace.csv"
    write_curve(curve_path, result.header, result.rows)
    result.trace.to_csv(trace_path, every=result.trace_every)
    return checker(read_curve(curve_path), read_trace(trace_path))
