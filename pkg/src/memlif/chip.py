"""Bias voltages, physical constants and the power model of the neuron chip.

Every quantity is in SI units (volts, amperes, farads, seconds, watts,
joules). Field names of :class:`BiasConfig` are the lower-cased bias
symbols (``vdd``, ``vref``, ``vtaun`` ...), which is also how they appear in
config and params files.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import NamedTuple


class ParameterError(ValueError):
    """A physically meaningless argument was passed to a model function."""


class Violation(NamedTuple):
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


class ValidationError(ValueError):
    """Raised by :func:`check` with every violated invariant attached."""

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class ComparatorMode(str, Enum):
    FAST = "fast"
    LOW_POWER = "low_power"


# V_bcomp at or above this level selects the fast (high-bias) comparator.
FAST_COMPARATOR_VBCOMP = 2.0

# Leak currents i_dn0 / i_up0 are quoted at this bias.
LEAK_REFERENCE_BIAS = 1.2


@dataclass(frozen=True)
class BiasConfig:
    vdd: float = 3.3
    vref: float = 2.4
    vopa: float = 2.4  # stored and validated, no behavioral role
    vgain: float = 2.1  # stored and validated, no behavioral role
    vtaun: float = 1.2
    vtaup: float = 1.2
    vrest: float = 0.6
    vthr: float = 1.2
    vbcomp: float = 2.4
    vpw: float = 1.0

    def replace(self, **changes: float) -> "BiasConfig":
        return replace(self, **changes)

    @property
    def comparator_mode(self) -> ComparatorMode:
        if self.vbcomp >= FAST_COMPARATOR_VBCOMP:
            return ComparatorMode.FAST
        return ComparatorMode.LOW_POWER


BIAS_FIELDS = tuple(f.name for f in fields(BiasConfig))


@dataclass(frozen=True)
class NeuronParams:
    """Calibratable physical constants of one neuron and its read path.

    The output pulse width follows a subthreshold-to-strong-inversion
    interpolation of the C2 discharge current::

        T_pw(v) = pw_t0 * (ln 2 / ln(1 + exp((v - pw_v0) / pw_slope)))**2

    so ``pw_t0`` is the width at ``v = pw_v0``; far below ``pw_v0`` the map is
    exponential with slope ``pw_slope / 2``, far above it falls off as
    ``1 / (v - pw_v0)**2``.
    """

    # defaults are the bundled calibration (data/calibrated.params)
    c1: float = 1.5185452606878588e-12
    attenuation_k: float = 500.0
    i_dn0: float = 4.8889757154910405e-11
    i_up0: float = 3.013230560292063e-08
    v_leak_slope: float = 0.05730040318177822
    pw_t0: float = 0.00037159991246673093
    pw_v0: float = 0.644937683696721
    pw_slope: float = 0.08432527329702588
    vreset: float = 0.0
    comparator_mode: ComparatorMode | None = None  # None: derived from vbcomp

    def replace(self, **changes) -> "NeuronParams":
        return replace(self, **changes)


PARAM_FIELDS = tuple(f.name for f in fields(NeuronParams))


@dataclass(frozen=True)
class PowerModel:
    ldo_static: float
    ldo_dynamic: float
    atten_static: float
    atten_dynamic: float
    neuron_static_fast: float
    neuron_espike_fast: float
    neuron_static_lp: float
    neuron_espike_lp: float

    def neuron_static(self, mode: ComparatorMode) -> float:
        return self.neuron_static_fast if mode is ComparatorMode.FAST else self.neuron_static_lp

    def neuron_espike(self, mode: ComparatorMode) -> float:
        return self.neuron_espike_fast if mode is ComparatorMode.FAST else self.neuron_espike_lp


POWER_FIELDS = tuple(f.name for f in fields(PowerModel))


def default_bias() -> BiasConfig:
    """Typical bias column of the chip."""
    return BiasConfig()


def default_power_model() -> PowerModel:
    return PowerModel(
        ldo_static=10e-6,
        ldo_dynamic=18e-6,
        atten_static=10e-12,
        atten_dynamic=20e-6,
        neuron_static_fast=5e-6,
        neuron_espike_fast=200e-12,
        neuron_static_lp=17e-9,
        neuron_espike_lp=7e-9,
    )


def validate(cfg: BiasConfig) -> list[Violation]:
    """Return every violated bias invariant; an empty list means valid."""
    out: list[Violation] = []
    if not cfg.vdd > 0:
        out.append(Violation("vdd", f"must be > 0 V, got {cfg.vdd}"))
    for name in BIAS_FIELDS:
        if name == "vdd":
            continue
        value = getattr(cfg, name)
        if not 0.0 <= value <= cfg.vdd:
            out.append(Violation(name, f"field in [0, vdd={cfg.vdd}] violated, got {value}"))
    if not cfg.vrest < cfg.vthr:
        out.append(Violation("vrest,vthr", f"vrest < vthr violated ({cfg.vrest} >= {cfg.vthr})"))
    if not cfg.vrest > 0.0:
        out.append(Violation("vrest", f"vrest > vreset (0 V) violated, got {cfg.vrest}"))
    return out


def check(cfg: BiasConfig) -> BiasConfig:
    """Return ``cfg`` unchanged if valid, otherwise raise :class:`ValidationError`."""
    violations = validate(cfg)
    if violations:
        raise ValidationError(violations)
    return cfg


def validate_params(p: NeuronParams) -> list[Violation]:
    out: list[Violation] = []
    for name in ("c1", "attenuation_k", "pw_t0", "pw_slope", "v_leak_slope"):
        if not getattr(p, name) > 0:
            out.append(Violation(name, f"must be > 0, got {getattr(p, name)}"))
    for name in ("i_dn0", "i_up0"):
        if not getattr(p, name) >= 0:
            out.append(Violation(name, f"must be >= 0, got {getattr(p, name)}"))
    if p.vreset != 0.0:
        out.append(Violation("vreset", f"reset level is ground, got {p.vreset}"))
    return out


def validate_power(pm: PowerModel) -> list[Violation]:
    return [
        Violation(name, f"must be >= 0, got {getattr(pm, name)}")
        for name in POWER_FIELDS
        if not getattr(pm, name) >= 0
    ]


def comparator_mode(bias: BiasConfig, params: NeuronParams) -> ComparatorMode:
    if params.comparator_mode is not None:
        return ComparatorMode(params.comparator_mode)
    return bias.comparator_mode
