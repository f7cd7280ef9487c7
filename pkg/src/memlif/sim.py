"""Fixed-step simulation of wired neurons, read chains and crossbars.

Each step evaluates, in order: stimuli, read chains and crossbar columns
(using the presynaptic outputs of the previous step), then every neuron with
its input frozen for the step, then plasticity. Feedback therefore carries a
one-step transport delay. Neuron membranes are integrated exactly within a
step (see :func:`memlif.neuron.advance`), so spike instants are not rounded to
the grid.

Sample ``k`` of a trace holds the state at the end of step ``k`` (time
``(k + 1) * dt``); input probes hold the value applied during that step.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chip import (BiasConfig, ComparatorMode, NeuronParams, ParameterError, PowerModel,
                   check, comparator_mode, default_bias, default_power_model)
from .network import AdaptivePair, Crossbar, VdspParams, vdsp_update
from .neuron import leak_setting, membrane_phase_readout, pulse_width, advance
from .signal_chain import ATTENUATOR_MAX_INPUT, LdoLag


class ExperimentError(ValueError):
    pass


# ---------------------------------------------------------------------------
# stimuli


def _steps(x: float, dt: float) -> int:
    return int(round(x / dt))


@dataclass(frozen=True)
class Dc:
    level: float
    baseline: float = 0.0

    def validate(self, dt: float) -> None:
        pass

    def sample(self, n: int, dt: float) -> np.ndarray:
        return np.full(n, self.baseline + self.level)


@dataclass(frozen=True)
class PulseTrain:
    amplitude: float
    width: float
    rate: float
    start: float = 0.0
    baseline: float = 0.0

    def validate(self, dt: float) -> None:
        if self.width < dt * (1 - 1e-9):
            raise ExperimentError(f"pulse width {self.width} s shorter than dt {dt} s")
        if not self.rate > 0:
            raise ExperimentError(f"pulse rate must be > 0 Hz, got {self.rate}")
        if self.width > 1.0 / self.rate:
            raise ExperimentError("pulse width exceeds the pulse period")

    def sample(self, n: int, dt: float) -> np.ndarray:
        out = np.full(n, float(self.baseline))
        w = max(1, _steps(self.width, dt))
        m = 0
        while True:
            k0 = _steps(self.start + m / self.rate, dt)
            if k0 >= n:
                break
            out[k0:k0 + w] = self.baseline + self.amplitude
            m += 1
        return out


@dataclass(frozen=True)
class SinglePulse:
    amplitude: float
    width: float
    start: float = 0.0
    baseline: float = 0.0

    def validate(self, dt: float) -> None:
        if self.width < dt * (1 - 1e-9):
            raise ExperimentError(f"pulse width {self.width} s shorter than dt {dt} s")

    def sample(self, n: int, dt: float) -> np.ndarray:
        out = np.full(n, float(self.baseline))
        k0 = _steps(self.start, dt)
        out[k0:k0 + max(1, _steps(self.width, dt))] = self.baseline + self.amplitude
        return out


def dc(level: float, baseline: float = 0.0) -> Dc:
    return Dc(level, baseline)


def pulse_train(amplitude: float, width: float, rate: float, start: float = 0.0,
                baseline: float = 0.0) -> PulseTrain:
    return PulseTrain(amplitude, width, rate, start, baseline)


def single_pulse(amplitude: float, width: float, start: float = 0.0,
                 baseline: float = 0.0) -> SinglePulse:
    return SinglePulse(amplitude, width, start, baseline)


Stimulus = Dc | PulseTrain | SinglePulse

# ---------------------------------------------------------------------------
# wiring


@dataclass(frozen=True)
class NeuronSpec:
    bias: BiasConfig = field(default_factory=default_bias)
    initial_v: float | None = None  # None: start at rest


@dataclass(frozen=True)
class ReadChain:
    """Synapse + LDO + attenuator from ``source`` into neuron ``target``.

    ``source`` names a stimulus (the voltage on IN) or a neuron (IN is driven
    to that neuron's ``vdd`` while its output is high).
    """

    source: str
    target: str
    r_syn: float = 10e3
    v_ref: float | None = None  # None: target neuron's vref
    lag: float = 0.0
    name: str | None = None


@dataclass(frozen=True)
class CurrentInput:
    """Attenuated current injected straight into the membrane (no read path)."""

    source: str
    target: str


@dataclass
class CrossbarLayer:
    crossbar: Crossbar
    rows: list[str]  # presynaptic neurons driving the gates
    cols: list[str]  # postsynaptic neurons fed by the columns
    v_in: float  # row read level; overdrive is v_in - v_ref
    v_ref: float | None = None  # None: each column neuron's vref
    vdsp: VdspParams | None = None
    name: str = "xbar"


@dataclass(frozen=True)
class AdaptiveLink:
    pair: AdaptivePair
    floor: float | None = None  # None: primary's vrest


@dataclass
class Experiment:
    neurons: dict[str, NeuronSpec]
    duration: float
    dt: float
    stimuli: dict[str, Stimulus] = field(default_factory=dict)
    chains: list[ReadChain] = field(default_factory=list)
    currents: list[CurrentInput] = field(default_factory=list)
    crossbars: list[CrossbarLayer] = field(default_factory=list)
    adaptive: list[AdaptiveLink] = field(default_factory=list)
    record: list[str] | None = None  # None: v_mem and out of every neuron

    @property
    def n_steps(self) -> int:
        return _steps(self.duration, self.dt)

    def probes(self) -> list[str]:
        if self.record is not None:
            return list(self.record)
        out = []
        for name in self.neurons:
            out += [f"v_mem:{name}", f"out:{name}"]
        return out

    def validate(self, params: NeuronParams) -> None:
        if not self.dt > 0:
            raise ExperimentError(f"dt must be > 0, got {self.dt}")
        if not self.duration >= self.dt:
            raise ExperimentError(f"duration {self.duration} shorter than dt {self.dt}")
        if not self.neurons:
            raise ExperimentError("experiment has no neurons")
        clash = set(self.neurons) & set(self.stimuli)
        if clash:
            raise ExperimentError(f"names used for both neurons and stimuli: {sorted(clash)}")
        for name, spec in self.neurons.items():
            try:
                check(spec.bias)
            except ValueError as exc:
                raise ExperimentError(f"neuron {name}: {exc}") from None
            t_pw = pulse_width(spec.bias.vpw, params)
            if self.dt > t_pw / 10 * (1 + 1e-9):
                raise ExperimentError(
                    f"dt {self.dt} s too coarse for neuron {name}: pulse width {t_pw:.3g} s "
                    f"needs dt <= {t_pw / 10:.3g} s")
        for stim in self.stimuli.values():
            stim.validate(self.dt)
        for ch in self.chains:
            if ch.source not in self.stimuli and ch.source not in self.neurons:
                raise ExperimentError(f"chain source {ch.source!r} is not a stimulus or neuron")
            if ch.target not in self.neurons:
                raise ExperimentError(f"chain target {ch.target!r} is not a neuron")
            if not ch.r_syn > 0:
                raise ExperimentError(f"chain {ch.source}->{ch.target}: r_syn must be > 0")
        for ci in self.currents:
            if ci.source not in self.stimuli or ci.target not in self.neurons:
                raise ExperimentError(f"bad current input {ci.source}->{ci.target}")
        for layer in self.crossbars:
            xb = layer.crossbar
            if len(layer.rows) != xb.rows or len(layer.cols) != xb.cols:
                raise ExperimentError(f"crossbar {layer.name}: wiring does not match "
                                      f"{xb.rows}x{xb.cols} array")
            for n in layer.rows + layer.cols:
                if n not in self.neurons:
                    raise ExperimentError(f"crossbar {layer.name}: unknown neuron {n!r}")
        for link in self.adaptive:
            for n in (link.pair.primary, link.pair.regulator):
                if n not in self.neurons:
                    raise ExperimentError(f"adaptive pair: unknown neuron {n!r}")
        primaries = [link.pair.primary for link in self.adaptive]
        if len(primaries) != len(set(primaries)):
            raise ExperimentError("a neuron can have only one regulator")
        known = {"v_mem", "out", "i_in", "thr"}
        for probe in self.probes():
            kind, _, target = probe.partition(":")
            if kind in known and target in self.neurons:
                continue
            if kind == "v_in" and target in self.stimuli:
                continue
            raise ExperimentError(f"unknown probe {probe!r}")


# ---------------------------------------------------------------------------
# results


@dataclass
class TraceSet:
    t0: float
    dt: float
    n: int
    series: dict[str, np.ndarray]
    spikes: dict[str, list[float]]
    pulse_widths: dict[str, float] = field(default_factory=dict)

    @property
    def time(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def duration(self) -> float:
        return self.n * self.dt

    def to_csv(self, path, every: int = 1) -> None:
        names = list(self.series)
        cols = [self.series[k] for k in names]
        t = self.time
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s"] + names)
            for k in range(0, self.n, every):
                w.writerow([repr(float(t[k]))] + [repr(float(c[k])) for c in cols])

    def spikes_to_csv(self, path) -> None:
        events = sorted((t, n) for n, ts in self.spikes.items() for t in ts)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["neuron", "t_s"])
            for t, n in events:
                w.writerow([n, repr(float(t))])


@dataclass
class BlockEnergy:
    static: float = 0.0
    dynamic: float = 0.0
    spikes: int = 0
    spike_energy: float = 0.0
    active_time: float = 0.0

    @property
    def total(self) -> float:
        return self.static + self.dynamic + self.spike_energy


@dataclass
class EnergyLedger:
    duration: float
    blocks: dict[str, BlockEnergy] = field(default_factory=dict)

    @property
    def static(self) -> float:
        return sum(b.static for b in self.blocks.values())

    @property
    def dynamic(self) -> float:
        return sum(b.dynamic for b in self.blocks.values())

    @property
    def spike_energy(self) -> float:
        return sum(b.spike_energy for b in self.blocks.values())

    @property
    def total(self) -> float:
        return sum(b.total for b in self.blocks.values())

    def as_dict(self) -> dict:
        out = {"duration_s": self.duration}
        for name, b in self.blocks.items():
            out[f"{name}.static_J"] = b.static
            out[f"{name}.dynamic_J"] = b.dynamic
            out[f"{name}.active_s"] = b.active_time
            if name.startswith("neuron:"):
                out[f"{name}.spikes"] = b.spikes
                out[f"{name}.spike_J"] = b.spike_energy
        out.update(static_J=self.static, dynamic_J=self.dynamic,
                   spike_J=self.spike_energy, total_J=self.total)
        return out

    def to_text(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in self.as_dict().items())

    def write(self, path_txt, path_json=None) -> None:
        Path(path_txt).write_text(self.to_text())
        if path_json is not None:
            Path(path_json).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# simulation loop


class _Chain:
    """Resolved read chain (explicit chain, adaptive link group or crossbar column)."""

    __slots__ = ("name", "stim", "sources", "weights", "target", "v_ref", "lag", "od",
                 "active_steps", "active_partial", "saturated_steps")

    def __init__(self, name, target, v_ref, lag):
        self.name = name
        self.stim = None  # stimulus array, or None for neuron-driven chains
        self.sources = []  # neuron indices (neuron-driven)
        self.weights = []  # per source: conductance * overdrive, amperes while high
        self.target = target
        self.v_ref = v_ref
        self.lag = LdoLag(lag) if lag > 0 else None
        self.od = 0.0
        self.active_steps = 0
        self.active_partial = 0.0
        self.saturated_steps = 0


def run(exp: Experiment, bias: BiasConfig | None = None, params: NeuronParams | None = None,
        power: PowerModel | None = None, power_gating: bool = False
        ) -> tuple[TraceSet, EnergyLedger]:
    """Simulate ``exp`` and return its traces and energy ledger.

    ``bias`` is accepted for symmetry with the other entry points; each neuron
    carries its own bias in its :class:`NeuronSpec`.
    """
    params = params if params is not None else NeuronParams()
    power = power if power is not None else default_power_model()
    exp.validate(params)
    dt = exp.dt
    n = exp.n_steps
    names = list(exp.neurons)
    idx = {nm: i for i, nm in enumerate(names)}
    N = len(names)
    k_att = params.attenuation_k
    c1 = params.c1

    biases = [exp.neurons[nm].bias for nm in names]
    i_dn, i_up, t_pw = [], [], []
    for b in biases:
        leak = leak_setting(b, params)
        i_dn.append(leak.i_dn)
        i_up.append(leak.i_up)
        t_pw.append(pulse_width(b.vpw, params))
    vrest = [b.vrest for b in biases]
    vdd = [b.vdd for b in biases]
    base_thr = [b.vthr for b in biases]
    v = [exp.neurons[nm].initial_v if exp.neurons[nm].initial_v is not None else b.vrest
         for nm, b in zip(names, biases)]
    rem = [0.0] * N
    high_prev = [0.0] * N

    stim_arrays = {s: exp.stimuli[s].sample(n, dt) for s in exp.stimuli}
    stim_lists = {s: a.tolist() for s, a in stim_arrays.items()}

    chains: list[_Chain] = []
    for ch in exp.chains:
        tgt = idx[ch.target]
        v_ref = ch.v_ref if ch.v_ref is not None else biases[tgt].vref
        c = _Chain(ch.name or f"{ch.source}->{ch.target}", tgt, v_ref, ch.lag)
        if ch.source in exp.stimuli:
            c.stim = stim_lists[ch.source]
            c.od = 1.0 / ch.r_syn  # conductance; overdrive applied per step
        else:
            src = idx[ch.source]
            c.sources.append(src)
            c.weights.append(max(0.0, vdd[src] - v_ref) * (1.0 / ch.r_syn))
        chains.append(c)
    by_reg: dict[str, _Chain] = {}
    thr_source = [-1] * N
    thr_floor = [0.0] * N
    for link in exp.adaptive:
        p, r = idx[link.pair.primary], idx[link.pair.regulator]
        thr_source[p] = r
        thr_floor[p] = link.floor if link.floor is not None else vrest[p]
        c = by_reg.get(link.pair.regulator)
        if c is None:
            c = _Chain(f"link->{link.pair.regulator}", r, biases[r].vref, 0.0)
            by_reg[link.pair.regulator] = c
            chains.append(c)
        c.sources.append(p)
        c.weights.append(max(0.0, vdd[p] - c.v_ref) * (1.0 / link.pair.link_resistance))
    xbar_cols = []  # (layer, column index, chain)
    for layer in exp.crossbars:
        for j, post in enumerate(layer.cols):
            tgt = idx[post]
            v_ref = layer.v_ref if layer.v_ref is not None else biases[tgt].vref
            c = _Chain(f"{layer.name}:col{j}", tgt, v_ref, 0.0)
            c.sources = [idx[r] for r in layer.rows]
            chains.append(c)
            xbar_cols.append((layer, j, c))

    currents = [(stim_lists[ci.source], idx[ci.target]) for ci in exp.currents]

    probes = exp.probes()
    rec = {p: [0.0] * n for p in probes}
    rec_v = [(rec[p], idx[p[6:]]) for p in probes if p.startswith("v_mem:")]
    rec_out = [(rec[p], idx[p[4:]]) for p in probes if p.startswith("out:")]
    rec_in = [(rec[p], idx[p[5:]]) for p in probes if p.startswith("i_in:")]
    rec_thr = [(rec[p], idx[p[4:]]) for p in probes if p.startswith("thr:")]
    rec_stim = [(rec[p], stim_lists[p[5:]]) for p in probes if p.startswith("v_in:")]

    spikes: list[list[float]] = [[] for _ in range(N)]
    i_max = ATTENUATOR_MAX_INPUT
    inp = [0.0] * N
    thr = list(base_thr)
    any_adaptive = any(s >= 0 for s in thr_source)
    rng = range(N)

    for k in range(n):
        t = k * dt
        for j in rng:
            inp[j] = 0.0
        # read chains, using presynaptic outputs from the previous step
        for c in chains:
            if c.stim is not None:
                od = c.stim[k] - c.v_ref
                if od > 0.0:
                    i_syn = od * c.od
                    if i_syn > i_max:
                        i_syn = i_max
                        c.saturated_steps += 1
                    c.active_steps += 1
                else:
                    i_syn = 0.0
            elif c.weights:
                i_syn = 0.0
                frac_max = 0.0
                for s, w in zip(c.sources, c.weights):
                    h = high_prev[s]
                    if h > 0.0:
                        i_syn += w * (h / dt)
                        if h > frac_max:
                            frac_max = h
                if i_syn > i_max:
                    i_syn = i_max
                    c.saturated_steps += 1
                if frac_max > 0.0:
                    c.active_partial += frac_max
            else:
                continue  # crossbar columns handled below
            i_att = i_syn / k_att
            if c.lag is not None:
                i_att = c.lag.update(i_att, dt)
            inp[c.target] += i_att
        for layer, j, c in xbar_cols:
            xb = layer.crossbar
            g = xb.conductance
            gate = [high_prev[s] > 0.0 for s in c.sources]
            xb.gate = np.array(gate, dtype=bool)
            od = layer.v_in - c.v_ref
            i_syn = 0.0
            frac_max = 0.0
            if od > 0.0:
                for r, s in enumerate(c.sources):
                    h = high_prev[s]
                    if h > 0.0:
                        i_syn += od * g[r, j] * (h / dt)
                        if h > frac_max:
                            frac_max = h
            if i_syn > i_max:
                i_syn = i_max
                c.saturated_steps += 1
            if frac_max > 0.0:
                c.active_partial += frac_max
            inp[c.target] += i_syn / k_att
        for arr, tgt in currents:
            inp[tgt] += arr[k]
        if any_adaptive:
            for j in rng:
                r = thr_source[j]
                if r >= 0:
                    thr[j] = v[r] if v[r] > thr_floor[j] else thr_floor[j]

        v_before = v[:] if exp.crossbars else None
        spiked = []
        for j in rng:
            vj, rem[j], sp, high_prev[j] = advance(
                v[j], rem[j], inp[j], dt, c1, i_dn[j], i_up[j], vrest[j], thr[j], vdd[j], t_pw[j])
            v[j] = vj
            if sp:
                spikes[j].extend(t + off for off in sp)
                spiked.append(j)

        if spiked and exp.crossbars:
            _apply_vdsp(exp, idx, biases, v_before, spiked)

        for arr, j in rec_v:
            arr[k] = v[j]
        for arr, j in rec_out:
            arr[k] = vdd[j] if rem[j] > 0.0 else 0.0
        for arr, j in rec_in:
            arr[k] = inp[j]
        for arr, j in rec_thr:
            arr[k] = thr[j]
        for arr, s in rec_stim:
            arr[k] = s[k]

    trace = TraceSet(
        t0=dt, dt=dt, n=n,
        series={p: np.array(rec[p]) for p in probes},
        spikes={nm: spikes[i] for i, nm in enumerate(names)},
        pulse_widths={nm: t_pw[i] for i, nm in enumerate(names)},
    )
    ledger = _ledger(exp, names, biases, params, power, chains, spikes, n, dt, power_gating)
    return trace, ledger


def _apply_vdsp(exp, idx, biases, v_before, spiked):
    fired = set(spiked)
    for layer in exp.crossbars:
        if layer.vdsp is None:
            continue
        g = layer.crossbar.conductance
        for r, pre in enumerate(layer.rows):
            if idx[pre] not in fired:
                continue
            for j, post in enumerate(layer.cols):
                if g[r, j] == 0.0:
                    continue  # unformed cell
                p = idx[post]
                _, trace = membrane_phase_readout(v_before[p], biases[p])
                g[r, j] = vdsp_update(g[r, j], trace, layer.vdsp)


def _ledger(exp, names, biases, params, power, chains, spikes, n, dt, power_gating):
    duration = n * dt
    ledger = EnergyLedger(duration=duration)
    for c in chains:
        t_active = c.active_steps * dt + c.active_partial
        t_static = t_active if power_gating else duration
        ledger.blocks[f"ldo:{c.name}"] = BlockEnergy(
            static=power.ldo_static * t_static, dynamic=power.ldo_dynamic * t_active,
            active_time=t_active)
        ledger.blocks[f"atten:{c.name}"] = BlockEnergy(
            static=power.atten_static * t_static, dynamic=power.atten_dynamic * t_active,
            active_time=t_active)
    for i, nm in enumerate(names):
        mode = comparator_mode(biases[i], params)
        count = len(spikes[i])
        ledger.blocks[f"neuron:{nm}"] = BlockEnergy(
            static=power.neuron_static(mode) * duration, spikes=count,
            spike_energy=power.neuron_espike(mode) * count)
    return ledger


# ---------------------------------------------------------------------------
# measurements


def spike_rate(trace: TraceSet, neuron: str, window: float | None = None,
               start: float | None = None) -> float:
    """Spike count in a window divided by its length.

    By default the window is the last ``window`` seconds of the run (the
    whole run if ``window`` is None).
    """
    if neuron not in trace.spikes:
        raise KeyError(f"unknown neuron {neuron!r}")
    end = trace.duration
    if window is None:
        window = end
    if window > end * (1 + 1e-12) or not window > 0:
        raise ValueError(f"window {window} s not in (0, {end}] s")
    lo = end - window if start is None else start
    hi = lo + window
    count = sum(1 for t in trace.spikes[neuron] if lo <= t < hi)
    return count / window


def isi_rate(spike_times, skip: int = 1) -> float:
    """Steady-state rate from spike times, ignoring the first ``skip`` spikes."""
    ts = list(spike_times)[skip:]
    if len(ts) < 2:
        return 0.0
    return (len(ts) - 1) / (ts[-1] - ts[0])


def output_pulse_lengths(trace: TraceSet, neuron: str) -> list[float]:
    """Length of every complete high interval of a neuron's OUT series."""
    out = trace.series[f"out:{neuron}"] > 0
    lengths = []
    k, n = 0, len(out)
    while k < n:
        if out[k]:
            j = k
            while j < n and out[j]:
                j += 1
            if k > 0 and j < n:
                lengths.append((j - k) * trace.dt)
            k = j
        else:
            k += 1
    return lengths


def single_neuron(i_att: float, duration: float, dt: float, bias: BiasConfig | None = None,
                  name: str = "n0", record: list[str] | None = None) -> Experiment:
    """One neuron driven by a constant attenuated current (no read path)."""
    bias = bias if bias is not None else default_bias()
    return Experiment(
        neurons={name: NeuronSpec(bias)}, duration=duration, dt=dt,
        stimuli={"i_src": dc(i_att)}, currents=[CurrentInput("i_src", name)],
        record=record if record is not None else [f"v_mem:{name}", f"out:{name}"],
    )


def read_neuron(stimulus: Stimulus, r_syn: float, duration: float, dt: float,
                bias: BiasConfig | None = None, name: str = "n0", lag: float = 0.0,
                record: list[str] | None = None) -> Experiment:
    """One neuron fed through synapse, LDO and attenuator from a voltage source."""
    bias = bias if bias is not None else default_bias()
    return Experiment(
        neurons={name: NeuronSpec(bias)}, duration=duration, dt=dt,
        stimuli={"in": stimulus}, chains=[ReadChain("in", name, r_syn=r_syn, lag=lag)],
        record=record if record is not None else [f"v_mem:{name}", f"out:{name}", "v_in:in"],
    )


def energy_components(ledger: EnergyLedger) -> dict[str, float]:
    """Static, dynamic and spike energy regrouped by kind (for identity checks)."""
    return {"static": ledger.static, "dynamic": ledger.dynamic, "spike": ledger.spike_energy}


def fast_mode(bias: BiasConfig, params: NeuronParams) -> bool:
    return comparator_mode(bias, params) is ComparatorMode.FAST


def finite(x: float) -> bool:
    return math.isfinite(x)
