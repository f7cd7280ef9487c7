"""Sectioned key=value experiment configs and calibrated-params files.

Sections: ``[bias]``, ``[params]``, ``[power]``, ``[experiment]``,
``[stimulus]``, ``[crossbar]`` and any number of ``[context.NAME]`` bias
overrides (used by params files). Omitted keys take model defaults; unknown
sections or keys are errors.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .chip import (BIAS_FIELDS, PARAM_FIELDS, POWER_FIELDS, BiasConfig, ComparatorMode,
                   NeuronParams, PowerModel, default_bias, default_power_model, validate,
                   validate_params, validate_power)
from .network import Crossbar, load_conductance
from .sim import (CrossbarLayer, CurrentInput, Experiment, NeuronSpec, ReadChain, dc,
                  pulse_train, single_pulse)


class ConfigError(ValueError):
    pass


STIMULUS_KINDS = ("dc", "pulse_train", "single_pulse")
MODES = ("chain", "current")


@dataclass(frozen=True)
class ExperimentSettings:
    duration: float = 0.1
    dt: float = 1e-6
    r_syn: float = 10e3
    lag: float = 0.0
    mode: str = "chain"  # chain: voltage through the read path; current: amperes into the membrane
    record: tuple[str, ...] = ()  # empty: every neuron's v_mem and out


@dataclass(frozen=True)
class StimulusSettings:
    """Drive on IN. ``amplitude`` is the overdrive above ``baseline`` (volts),
    or the attenuated current (amperes) in ``current`` mode."""

    kind: str = "dc"
    amplitude: float = 0.0
    width: float = 10e-6
    rate: float = 100.0
    start: float = 0.0
    baseline: float | None = None  # None: the bias vref (zero overdrive between pulses)


@dataclass(frozen=True)
class CrossbarSettings:
    rows: int = 1
    cols: int = 1
    g: float = 1e-4
    conductance_file: str = ""
    v_read: float = 0.25  # row overdrive above vref while a gate is on


@dataclass
class RunConfig:
    bias: BiasConfig = field(default_factory=default_bias)
    params: NeuronParams = field(default_factory=NeuronParams)
    power: PowerModel = field(default_factory=default_power_model)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)
    stimulus: StimulusSettings = field(default_factory=StimulusSettings)
    crossbar: CrossbarSettings | None = None
    contexts: dict[str, BiasConfig] = field(default_factory=dict)
    base_dir: Path | None = field(default=None, compare=False)

    def stimulus_object(self):
        s = self.stimulus
        if self.experiment.mode == "current":
            base = 0.0 if s.baseline is None else s.baseline
        else:
            base = self.bias.vref if s.baseline is None else s.baseline
        if s.kind == "dc":
            return dc(s.amplitude, base)
        if s.kind == "pulse_train":
            return pulse_train(s.amplitude, s.width, s.rate, s.start, base)
        return single_pulse(s.amplitude, s.width, s.start, base)

    def build_experiment(self, dt: float | None = None) -> Experiment:
        e = self.experiment
        dt = e.dt if dt is None else dt
        record = list(e.record) or None
        stim = {"in": self.stimulus_object()}
        if self.crossbar is None:
            exp = Experiment(neurons={"n0": NeuronSpec(self.bias)}, duration=e.duration, dt=dt,
                             stimuli=stim, record=record)
            if e.mode == "current":
                exp.currents.append(CurrentInput("in", "n0"))
            else:
                exp.chains.append(ReadChain("in", "n0", r_syn=e.r_syn, lag=e.lag))
            return exp
        xb = self.crossbar
        if xb.conductance_file:
            path = Path(xb.conductance_file)
            if not path.is_absolute() and self.base_dir is not None:
                path = self.base_dir / path
            g = load_conductance(path)
            if g.shape != (xb.rows, xb.cols):
                raise ConfigError(f"[crossbar] conductance_file is {g.shape[0]}x{g.shape[1]}, "
                                  f"expected {xb.rows}x{xb.cols}")
        else:
            g = np.full((xb.rows, xb.cols), xb.g)
        rows = [f"in{i}" for i in range(xb.rows)]
        cols = [f"out{j}" for j in range(xb.cols)]
        neurons = {n: NeuronSpec(self.bias) for n in rows + cols}
        exp = Experiment(neurons=neurons, duration=e.duration, dt=dt, stimuli=stim, record=record)
        for n in rows:
            if e.mode == "current":
                exp.currents.append(CurrentInput("in", n))
            else:
                exp.chains.append(ReadChain("in", n, r_syn=e.r_syn, lag=e.lag))
        exp.crossbars.append(CrossbarLayer(Crossbar(g), rows, cols,
                                           v_in=self.bias.vref + xb.v_read))
        return exp


SECTIONS = {
    "bias": BIAS_FIELDS,
    "params": PARAM_FIELDS,
    "power": POWER_FIELDS,
    "experiment": tuple(f.name for f in fields(ExperimentSettings)),
    "stimulus": tuple(f.name for f in fields(StimulusSettings)),
    "crossbar": tuple(f.name for f in fields(CrossbarSettings)),
}

_KEY_RE = re.compile(r"^\s*([^=:\s\[#;][^=:]*?)\s*[=:]")
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")


def _line_index(text: str) -> dict[tuple[str, str], int]:
    """Line number of every ``(section, key)`` and ``(section, '')`` header."""
    index = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, ""), lineno)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip()), lineno)
    return index


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None,
                 params_defaults: NeuronParams | None = None) -> RunConfig:
    """Parse and fully validate a config; every problem is reported with its line.

    Omitted ``[params]`` keys come from ``params_defaults`` (model defaults
    when None).
    """
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    lines = _line_index(text)
    errors: list[str] = []

    def where(section, key=""):
        n = lines.get((section, key))
        return f"{source}:{n}" if n else source

    values: dict[str, dict[str, object]] = {}
    contexts: dict[str, dict[str, float]] = {}
    for section in cp.sections():
        if section.startswith("context."):
            allowed = BIAS_FIELDS
        elif section in SECTIONS:
            allowed = SECTIONS[section]
        else:
            errors.append(f"{where(section)}: unknown section [{section}]")
            continue
        parsed: dict[str, object] = {}
        for key, raw in cp.items(section):
            if key not in allowed:
                errors.append(f"{where(section, key)}: unknown key {key!r} in [{section}]")
                continue
            try:
                parsed[key] = _convert(section, key, raw)
            except ValueError as exc:
                errors.append(f"{where(section, key)}: [{section}] {key}: {exc}")
        if section.startswith("context."):
            contexts[section[len("context."):]] = parsed
        else:
            values[section] = parsed
    if errors:
        raise ConfigError("\n".join(errors))

    bias = BiasConfig(**values.get("bias", {}))
    for v in validate(bias):
        errors.append(f"{where('bias')}: [bias] {v}")
    params = replace(params_defaults or NeuronParams(), **values.get("params", {}))
    for v in validate_params(params):
        errors.append(f"{where('params')}: [params] {v}")
    power = default_power_model()
    if "power" in values:
        power = replace(power, **values["power"])
    for v in validate_power(power):
        errors.append(f"{where('power')}: [power] {v}")
    ctx = {}
    for name, changes in contexts.items():
        ctx[name] = default_bias().replace(**changes)
        for v in validate(ctx[name]):
            errors.append(f"{where('context.' + name)}: [context.{name}] {v}")
    exp = ExperimentSettings(**values.get("experiment", {}))
    stim = StimulusSettings(**values.get("stimulus", {}))
    xbar = CrossbarSettings(**values["crossbar"]) if "crossbar" in values else None
    errors += _check_settings(exp, stim, xbar, where)
    if errors:
        raise ConfigError("\n".join(errors))
    return RunConfig(bias, params, power, exp, stim, xbar, ctx, base_dir)


def _convert(section: str, key: str, raw: str):
    raw = raw.strip()
    if section == "params" and key == "comparator_mode":
        if raw in ("", "auto"):
            return None
        try:
            return ComparatorMode(raw)
        except ValueError:
            raise ValueError(f"expected auto, fast or low_power, got {raw!r}") from None
    if section == "experiment" and key == "record":
        return tuple(p.strip() for p in raw.split(",") if p.strip())
    if (section, key) in (("experiment", "mode"), ("stimulus", "kind"),
                          ("crossbar", "conductance_file")):
        return raw
    if section == "stimulus" and key == "baseline" and raw in ("", "vref"):
        return None
    if section == "crossbar" and key in ("rows", "cols"):
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"expected an integer, got {raw!r}") from None
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"expected a number, got {raw!r}") from None


def _check_settings(exp, stim, xbar, where) -> list[str]:
    errors = []
    if exp.mode not in MODES:
        errors.append(f"{where('experiment', 'mode')}: [experiment] mode must be one of {MODES}")
    for key in ("duration", "dt", "r_syn"):
        if not getattr(exp, key) > 0:
            errors.append(f"{where('experiment', key)}: [experiment] {key} must be > 0")
    if exp.lag < 0:
        errors.append(f"{where('experiment', 'lag')}: [experiment] lag must be >= 0")
    if stim.kind not in STIMULUS_KINDS:
        errors.append(f"{where('stimulus', 'kind')}: [stimulus] kind must be one of {STIMULUS_KINDS}")
    if xbar is not None:
        if xbar.rows < 1 or xbar.cols < 1:
            errors.append(f"{where('crossbar')}: [crossbar] rows and cols must be >= 1")
        if not xbar.g >= 0:
            errors.append(f"{where('crossbar', 'g')}: [crossbar] g must be >= 0")
    return errors


def load_config(path, params_defaults: NeuronParams | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, source=str(path), base_dir=path.parent,
                        params_defaults=params_defaults)


def _fmt(key: str, value) -> str:
    if value is None:
        return "vref" if key == "baseline" else "auto"
    if isinstance(value, ComparatorMode):
        return value.value
    if isinstance(value, tuple):
        return ",".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _section(name: str, obj, names) -> str:
    body = "".join(f"{k} = {_fmt(k, getattr(obj, k))}\n" for k in names)
    return f"[{name}]\n{body}"


def serialize(cfg: RunConfig) -> str:
    parts = [
        _section("bias", cfg.bias, BIAS_FIELDS),
        _section("params", cfg.params, PARAM_FIELDS),
        _section("power", cfg.power, POWER_FIELDS),
        _section("experiment", cfg.experiment, SECTIONS["experiment"]),
        _section("stimulus", cfg.stimulus, SECTIONS["stimulus"]),
    ]
    if cfg.crossbar is not None:
        parts.append(_section("crossbar", cfg.crossbar, SECTIONS["crossbar"]))
    for name, b in cfg.contexts.items():
        parts.append(_section(f"context.{name}", b, BIAS_FIELDS))
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# params files


def params_text(params: NeuronParams, contexts: dict[str, BiasConfig]) -> str:
    parts = [_section("params", params, PARAM_FIELDS)]
    base = default_bias()
    for name, b in contexts.items():
        changed = [k for k in BIAS_FIELDS if getattr(b, k) != getattr(base, k)]
        parts.append(_section(f"context.{name}", b, changed))
    return "\n".join(parts)


def save_params(path, params: NeuronParams, contexts: dict[str, BiasConfig]) -> None:
    Path(path).write_text(params_text(params, contexts))


def load_params(path) -> tuple[NeuronParams, dict[str, BiasConfig]]:
    cfg = load_config(path)
    return cfg.params, cfg.contexts
