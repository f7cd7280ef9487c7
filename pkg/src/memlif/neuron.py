"""Leaky integrate-and-fire neuron with bi-directional constant-current leak.

The membrane capacitor ``c1`` integrates the attenuated input current. Above
``vrest`` a bias-set current ``i_dn`` pulls the membrane down, below ``vrest``
a current ``i_up`` pulls it up; the leak never carries the membrane past
``vrest``. Crossing ``vthr`` emits a spike: the membrane is held at ground and
the output held at ``vdd`` for one pulse width, which is also the refractory
period.

Within a step the input is constant, so the membrane trajectory is piecewise
linear and :func:`advance` integrates it exactly, locating rest and threshold
crossings inside the step instead of rounding them to the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .chip import LEAK_REFERENCE_BIAS, BiasConfig, NeuronParams, ParameterError
from .signal_chain import attenuate

# Fraction of the rest-to-threshold span above which the membrane reads as
# "about to fire".
NEAR_THRESHOLD_FRACTION = 0.75


class Phase(str, Enum):
    INTEGRATING = "integrating"
    SPIKING = "spiking"


class Readout(str, Enum):
    RECENTLY_FIRED = "recently_fired"
    NEAR_REST = "near_rest"
    NEAR_THRESHOLD = "near_threshold"


@dataclass
class NeuronState:
    v_mem: float
    remaining: float = 0.0  # time left in the output pulse; 0 while integrating
    last_spike_time: float | None = None
    out: float = 0.0

    @property
    def phase(self) -> Phase:
        return Phase.SPIKING if self.remaining > 0 else Phase.INTEGRATING

    @classmethod
    def at_rest(cls, bias: BiasConfig) -> "NeuronState":
        return cls(v_mem=bias.vrest)


@dataclass(frozen=True)
class LeakSetting:
    i_dn: float
    i_up: float


def pulse_width(vpw: float, params: NeuronParams) -> float:
    """Output pulse width (and refractory period) for bias ``vpw``."""
    if not vpw > 0:
        raise ParameterError(f"vpw must be > 0 V, got {vpw}")
    x = (vpw - params.pw_v0) / params.pw_slope
    # log1p(exp(x)) without overflow
    g = x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))
    return params.pw_t0 * (math.log(2.0) / g) ** 2


def leak_setting(bias: BiasConfig, params: NeuronParams) -> LeakSetting:
    s = params.v_leak_slope
    return LeakSetting(
        i_dn=params.i_dn0 * math.exp((bias.vtaun - LEAK_REFERENCE_BIAS) / s),
        i_up=params.i_up0 * math.exp((bias.vtaup - LEAK_REFERENCE_BIAS) / s),
    )


def leak_current(v_mem: float, bias: BiasConfig, params: NeuronParams) -> float:
    """Signed leak current into the membrane at ``v_mem``."""
    if v_mem > bias.vrest:
        return -leak_setting(bias, params).i_dn
    if v_mem < bias.vrest:
        return leak_setting(bias, params).i_up
    return 0.0


def advance(v, remaining, i, dt, c1, i_dn, i_up, vrest, vthr, vdd, t_pw):
    """Integrate one neuron exactly over ``dt`` with constant input ``i``.

    Plain floats in and out so the simulation loop can call it cheaply.

    Returns:
        ``(v, remaining, spike_offsets, high_time)`` where ``spike_offsets``
        are spike instants measured from the start of the step and
        ``high_time`` is how long the output was high during the step.
    """
    spikes = []
    high = 0.0
    left = dt
    eps = dt * 1e-9
    while left > 0.0:
        if remaining > 0.0:
            hold = remaining if remaining < left else left
            remaining -= hold
            high += hold
            left -= hold
            if remaining <= eps:
                remaining = 0.0
            if remaining > 0.0 or left <= eps:
                break
            continue

        # integrating phase
        if v > vthr or (v == vthr and (i - i_dn if vthr >= vrest else i + i_up) > 0.0):
            spikes.append(dt - left)
            v = 0.0
            remaining = t_pw
            continue
        if v < vrest:
            rate = (i + i_up) / c1
            bound = vrest
        elif v > vrest:
            rate = (i - i_dn) / c1
            bound = vrest if rate < 0.0 else vdd
        else:
            rate = (i - i_dn) / c1
            if rate <= 0.0:
                break  # pinned at rest
            bound = vdd
        if rate == 0.0:
            break
        hits_thr = rate > 0.0 and v < vthr <= bound
        if hits_thr:
            bound = vthr
        t_hit = (bound - v) / rate
        if t_hit >= left:
            v += rate * left
            if (rate > 0.0 and v > bound) or (rate < 0.0 and v < bound):
                v = bound
            break
        v = bound
        left -= t_hit
        if hits_thr:
            net_above = i - i_dn if vthr >= vrest else i + i_up
            if net_above > 0.0:
                spikes.append(dt - left)
                v = 0.0
                remaining = t_pw
        elif v == vdd:
            break
    return v, remaining, spikes, high


def step(state: NeuronState, i_att: float, dt: float, bias: BiasConfig, params: NeuronParams,
         t: float = 0.0, vthr: float | None = None) -> tuple[NeuronState, bool]:
    """Advance ``state`` by ``dt`` under constant attenuated input ``i_att``.

    ``t`` is the absolute time at the start of the step (used for
    ``last_spike_time``); ``vthr`` overrides the bias threshold, as the
    adaptive pair does.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be > 0 s, got {dt}")
    if i_att < 0:
        raise ParameterError(f"input current must be >= 0 A, got {i_att}")
    leak = leak_setting(bias, params)
    thr = bias.vthr if vthr is None else vthr
    v, remaining, spikes, _ = advance(
        state.v_mem, state.remaining, i_att, dt, params.c1, leak.i_dn, leak.i_up,
        bias.vrest, thr, bias.vdd, pulse_width(bias.vpw, params),
    )
    last = t + spikes[-1] if spikes else state.last_spike_time
    new = NeuronState(v_mem=v, remaining=remaining, last_spike_time=last,
                      out=bias.vdd if remaining > 0 else 0.0)
    return new, bool(spikes)


def analytic_period(i: float, bias: BiasConfig, params: NeuronParams) -> float:
    """Closed-form firing period for constant post-attenuation current ``i``.

    Returns ``inf`` when the downward leak defeats the input.
    """
    leak = leak_setting(bias, params)
    if not i > leak.i_dn:
        return math.inf
    c1 = params.c1
    return (pulse_width(bias.vpw, params)
            + c1 * bias.vrest / (i + leak.i_up)
            + c1 * (bias.vthr - bias.vrest) / (i - leak.i_dn))


def analytic_rate(i_syn: float, bias: BiasConfig, params: NeuronParams) -> float:
    """Steady firing rate for a constant synaptic current ``i_syn`` (pre-attenuation)."""
    i = attenuate(i_syn, params).i_att
    return 1.0 / analytic_period(i, bias, params)


def decay_time(v_start: float, bias: BiasConfig, params: NeuronParams) -> float:
    """Time for the unstimulated membrane to leak from ``v_start`` to ``vrest``."""
    leak = leak_setting(bias, params)
    if v_start >= bias.vrest:
        current = leak.i_dn
    else:
        current = leak.i_up
    dv = abs(v_start - bias.vrest)
    if dv == 0:
        return 0.0
    return math.inf if current == 0 else params.c1 * dv / current


def membrane_phase_readout(v_mem: float, bias: BiasConfig,
                           near_fraction: float = NEAR_THRESHOLD_FRACTION) -> tuple[Readout, float]:
    """Map the membrane voltage to a plasticity trace in [-1, 1] and a category.

    The trace is negative shortly after a spike (membrane still below rest)
    and approaches +1 as the membrane nears threshold.
    """
    trace = (v_mem - bias.vrest) / (bias.vthr - bias.vrest)
    trace = min(1.0, max(-1.0, trace))
    if v_mem < bias.vrest:
        return Readout.RECENTLY_FIRED, trace
    if trace >= near_fraction:
        return Readout.NEAR_THRESHOLD, trace
    return Readout.NEAR_REST, trace
