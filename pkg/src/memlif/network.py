"""Crossbar, adaptive neuron pairs and the VDSP weight-update hook."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chip import ParameterError
from .neuron import NeuronState

# Input layer size of the fabricated array.
CHIP_ROWS = 16


@dataclass
class Crossbar:
    """1T1R array: ``conductance[i, j]`` couples input row ``i`` to column ``j``.

    A row conducts only while its access transistor is on, i.e. while the
    presynaptic neuron driving the gate is emitting a pulse.
    """

    conductance: np.ndarray
    g_min: float = 1e-6
    g_max: float = 1e-4
    gate: np.ndarray = field(default=None)

    def __post_init__(self):
        self.conductance = np.array(self.conductance, dtype=float, ndmin=2)
        if self.gate is None:
            self.gate = np.zeros(self.rows, dtype=bool)
        else:
            self.gate = np.asarray(self.gate, dtype=bool)
        if self.gate.shape != (self.rows,):
            raise ParameterError(f"gate vector length {self.gate.size} != rows {self.rows}")
        if not 0 <= self.g_min < self.g_max:
            raise ParameterError(f"need 0 <= g_min < g_max, got {self.g_min}, {self.g_max}")
        g = self.conductance
        ok = (g == 0) | ((g >= self.g_min) & (g <= self.g_max))
        if not ok.all():
            i, j = np.argwhere(~ok)[0]
            raise ParameterError(
                f"conductance[{i},{j}]={g[i, j]} outside [{self.g_min}, {self.g_max}] and not 0")

    @property
    def rows(self) -> int:
        return self.conductance.shape[0]

    @property
    def cols(self) -> int:
        return self.conductance.shape[1]

    @classmethod
    def uniform(cls, rows: int, cols: int, g: float, **kw) -> "Crossbar":
        return cls(np.full((rows, cols), g), **kw)


def column_current(xbar: Crossbar, col: int, v_in: float, v_ref: float) -> float:
    """Current summed by the column's LDO from every row whose gate is on."""
    if not 0 <= col < xbar.cols:
        raise IndexError(f"column {col} out of range for {xbar.cols} columns")
    overdrive = max(0.0, v_in - v_ref)
    return float(overdrive * xbar.conductance[xbar.gate, col].sum())


def spike_to_gates(xbar: Crossbar, spikes) -> np.ndarray:
    """Drive the access gates from the presynaptic output state."""
    spikes = np.asarray(spikes, dtype=bool)
    if spikes.shape != (xbar.rows,):
        raise ParameterError(f"expected {xbar.rows} gate values, got {spikes.size}")
    xbar.gate = spikes.copy()
    return xbar.gate


def save_conductance(path, g: np.ndarray) -> None:
    """Row-major CSV, siemens."""
    g = np.array(g, dtype=float, ndmin=2)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in g:
            w.writerow([repr(float(x)) for x in row])


def load_conductance(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise ParameterError(f"{Path(path).name}:{lineno}: {exc}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise ParameterError(f"{Path(path).name}: ragged or empty conductance matrix")
    return np.array(rows)


@dataclass(frozen=True)
class AdaptivePair:
    """Primary neuron whose threshold is the regulator's membrane voltage.

    The primary's output pulses reach the regulator through an ordinary read
    chain with ``link_resistance`` as the synapse.
    """

    primary: str
    regulator: str
    link_resistance: float = 10e3

    def __post_init__(self):
        if self.primary == self.regulator:
            raise ParameterError("primary and regulator must be different neurons")
        if not self.link_resistance > 0:
            raise ParameterError(f"link resistance must be > 0, got {self.link_resistance}")


def adaptive_threshold(pair: AdaptivePair | None, reg_state: NeuronState, floor: float) -> float:
    """Threshold seen by the primary: the regulator membrane, never below ``floor``."""
    return max(floor, reg_state.v_mem)


def shared_regulator_step(pool_spikes, link_resistance: float, v_high: float, v_ref: float) -> float:
    """Read current into a regulator shared by a pool of neurons.

    ``pool_spikes`` holds, per pool member, whether its output is high (or the
    fraction of the step it was high). Each member drives an identical link.
    """
    pool_spikes = list(pool_spikes)
    if not pool_spikes:
        raise ParameterError("shared regulator pool is empty")
    per_link = max(0.0, v_high - v_ref) / link_resistance
    return per_link * float(sum(float(s) for s in pool_spikes))


@dataclass(frozen=True)
class VdspParams:
    eta_pot: float = 0.05
    eta_dep: float = 0.05
    g_min: float = 1e-6
    g_max: float = 1e-4

    def __post_init__(self):
        for name in ("eta_pot", "eta_dep"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ParameterError(f"{name} must be in (0, 1], got {value}")
        if not self.g_min < self.g_max:
            raise ParameterError(f"g_min must be < g_max, got {self.g_min}, {self.g_max}")


def vdsp_update(g: float, post_trace: float, p: VdspParams) -> float:
    """Conductance after one presynaptic spike, given the postsynaptic trace.

    A negative trace (the postsynaptic neuron fired recently and is still
    below rest) depresses toward ``g_min``; a positive trace (postsynaptic
    neuron close to firing) potentiates toward ``g_max``. Steps are
    multiplicative in the distance to the bound, so the window is never left.
    """
    if not p.g_min <= g <= p.g_max:
        raise ParameterError(f"conductance {g} outside [{p.g_min}, {p.g_max}]")
    if post_trace > 0:
        g = g + p.eta_pot * min(post_trace, 1.0) * (p.g_max - g)
    elif post_trace < 0:
        g = g - p.eta_dep * min(-post_trace, 1.0) * (g - p.g_min)
    return min(p.g_max, max(p.g_min, g))
