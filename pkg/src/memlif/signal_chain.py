"""Synaptic read path: Ohmic read under the LDO clamp, then current attenuation."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chip import NeuronParams, ParameterError

# Largest input current the attenuator/LDO pair is specified for.
ATTENUATOR_MAX_INPUT = 200e-6


@dataclass(frozen=True)
class SynapseRead:
    r_syn: float  # R_ext + R_IC, ohms
    v_in: float
    v_ref: float

    def __post_init__(self):
        if not self.r_syn > 0:
            raise ParameterError(f"r_syn must be > 0 ohm, got {self.r_syn}")

    @property
    def v_read(self) -> float:
        return self.v_in - self.v_ref


@dataclass(frozen=True)
class AttenuatorOut:
    i_att: float
    saturated: bool = False


def synapse_current(read: SynapseRead) -> float:
    """Read current through the synapse; the LDO pass device only sources."""
    return max(0.0, (read.v_in - read.v_ref) * (1.0 / read.r_syn))


def ldo_node_voltage(read: SynapseRead) -> float:
    """Voltage at the LDO side of the synapse."""
    if read.v_in > read.v_ref:
        return read.v_ref
    return read.v_in


def attenuate(i_syn: float, params: NeuronParams) -> AttenuatorOut:
    if i_syn < 0:
        raise ParameterError(f"attenuator input must be >= 0 A, got {i_syn}")
    if i_syn > ATTENUATOR_MAX_INPUT:
        return AttenuatorOut(ATTENUATOR_MAX_INPUT / params.attenuation_k, True)
    return AttenuatorOut(i_syn / params.attenuation_k, False)


def read_chain(read: SynapseRead, params: NeuronParams) -> AttenuatorOut:
    """Synapse read followed by attenuation, as seen by the neuron."""
    return attenuate(synapse_current(read), params)


class LdoLag:
    """Optional first-order settling of the read current.

    With ``tau == 0`` the output equals the input exactly (instant LDO).
    The update is the exact solution for an input held constant over ``dt``.
    """

    def __init__(self, tau: float = 0.0):
        if tau < 0:
            raise ParameterError(f"LDO time constant must be >= 0 s, got {tau}")
        self.tau = tau
        self.value = 0.0

    def update(self, target: float, dt: float) -> float:
        if self.tau == 0.0:
            self.value = target
        else:
            self.value = target + (self.value - target) * math.exp(-dt / self.tau)
        return self.value
