"""Fit neuron constants to measured anchors.

An anchor is one measured number (a firing rate, a pulse width, a decay time)
together with the experiment that produced it. Anchors are grouped into
*contexts*: named bias configurations of the experiment families. Bias values
the measurements do not report (for example the pulse-width bias used during
the DC rate sweeps) are free context parameters, fitted alongside the global
:class:`NeuronParams` within fixed bounds.

The objective is ``sum(w * (log sim - log target)**2)``; ``ge`` anchors only
penalize a shortfall. Pulse-train anchors use a continuous surrogate of the
firing period during the search (the true rate is quantized to ``f_in / k``
and would leave the simplex on flat plateaus); reports use the true value.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize

from .chip import BIAS_FIELDS, BiasConfig, NeuronParams, ParameterError, default_bias
from .neuron import advance, analytic_period, decay_time, leak_setting, pulse_width
from .signal_chain import attenuate

log = logging.getLogger(__name__)

KINDS = ("rate", "pulse_width", "decay", "pulse_rate", "pulses_to_fire")
RELATIONS = ("eq", "ge")

# Reported when the model cannot fire at all; keeps the log objective finite.
RATE_FLOOR = 1e-3


class AnchorError(ValueError):
    pass


@dataclass(frozen=True)
class Anchor:
    """One measured target.

    ``conditions`` by kind:

    * ``rate``: ``i_syn`` (A) or ``v_read`` (V) and ``r_syn`` (ohm), plus bias overrides.
    * ``pulse_width``: ``vpw``.
    * ``decay``: bias overrides; decay runs from ``vthr`` down to ``vrest``.
    * ``pulse_rate`` / ``pulses_to_fire``: ``i_syn`` (A), ``width`` (s), ``rate`` (Hz).

    Any condition named like a bias field overrides the context bias.
    """

    name: str
    kind: str
    target: float
    context: str = "default"
    conditions: dict = field(default_factory=dict)
    weight: float = 1.0
    relation: str = "eq"
    source: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise AnchorError(f"anchor {self.name}: unknown kind {self.kind!r}")
        if self.relation not in RELATIONS:
            raise AnchorError(f"anchor {self.name}: relation must be eq or ge")
        if not self.target > 0:
            raise AnchorError(f"anchor {self.name}: target must be > 0, got {self.target}")
        if not self.weight >= 0:
            raise AnchorError(f"anchor {self.name}: weight must be >= 0")

    def bias_overrides(self) -> dict:
        return {k: v for k, v in self.conditions.items() if k in BIAS_FIELDS}

    def describe(self) -> str:
        cond = ";".join(f"{k}={v:g}" for k, v in self.conditions.items())
        return f"{self.name}[{self.context}]({cond})"


@dataclass
class Calibration:
    """Fitted neuron constants plus the bias of every experiment context."""

    params: NeuronParams
    contexts: dict[str, BiasConfig] = field(default_factory=dict)

    def bias(self, context: str) -> BiasConfig:
        return self.contexts.get(context, default_bias())


@dataclass(frozen=True)
class FreeParam:
    """One search dimension: ``owner`` is ``params`` or a context name."""

    owner: str
    name: str
    lo: float
    hi: float
    log: bool = False

    def decode(self, u: float) -> float:
        u = min(1.0, max(0.0, u))
        if self.log:
            x = math.exp(math.log(self.lo) + (math.log(self.hi) - math.log(self.lo)) * u)
        else:
            x = self.lo + (self.hi - self.lo) * u
        return min(self.hi, max(self.lo, x))

    def encode(self, x: float) -> float:
        x = min(self.hi, max(self.lo, x))
        if self.log:
            return (math.log(x) - math.log(self.lo)) / (math.log(self.hi) - math.log(self.lo))
        return (x - self.lo) / (self.hi - self.lo)


GLOBAL_SPACE = (
    FreeParam("params", "c1", 0.1e-12, 100e-12, log=True),
    FreeParam("params", "i_dn0", 1e-12, 100e-9, log=True),
    FreeParam("params", "i_up0", 1e-12, 100e-9, log=True),
    FreeParam("params", "v_leak_slope", 0.02, 0.3),
    # upper bound keeps the two-point pulse-width solve well posed
    FreeParam("params", "pw_slope", 0.03, 0.144),
)

# Base bias and unreported (free) biases of the built-in experiment families.
BASE_CONTEXTS = {
    "dc": {},
    "res": {"vref": 1.0},
    "temporal": {},
    "leak": {},
}
CONTEXT_SPACE = {
    "dc": (FreeParam("dc", "vrest", 0.01, 0.59), FreeParam("dc", "vtaun", 0.8, 2.5),
           FreeParam("dc", "vpw", 0.45, 1.2)),
    "res": (FreeParam("res", "vthr", 0.7, 3.3), FreeParam("res", "vtaun", 0.8, 2.5)),
    "temporal": (FreeParam("temporal", "vthr", 0.7, 3.3),),
    "leak": (FreeParam("leak", "vthr", 0.7, 3.3), FreeParam("leak", "vtaun", 1.0, 1.35)),
}

# Bias of the low-leak point; only the high-leak point is fitted.
LOW_LEAK_VTAUN = 1.0


def default_anchors() -> list[Anchor]:
    a = Anchor
    return [
        a("dc_rate_low_i_high_thr", "rate", 419.0, "dc", {"i_syn": 10e-6, "vthr": 1.8},
          source="DC rate sweep, 10 uA at 1.8 V threshold"),
        a("dc_rate_high_i_high_thr", "rate", 59e3, "dc", {"i_syn": 200e-6, "vthr": 1.8},
          source="DC rate sweep, 200 uA at 1.8 V threshold"),
        a("dc_rate_low_i_low_thr", "rate", 800.0, "dc", {"i_syn": 10e-6, "vthr": 0.8},
          source="DC rate sweep, 10 uA at 0.8 V threshold"),
        a("dc_rate_high_i_low_thr", "rate", 68e3, "dc", {"i_syn": 200e-6, "vthr": 0.8},
          source="DC rate sweep, 200 uA at 0.8 V threshold"),
        a("max_rate_vpw_0.8", "rate", 20e3, "dc", {"i_syn": 200e-6, "vthr": 1.2, "vpw": 0.8},
          source="rate ceiling at 0.8 V pulse-width bias"),
        a("max_rate_vpw_1.1", "rate", 92e3, "dc", {"i_syn": 200e-6, "vthr": 1.2, "vpw": 1.1},
          source="rate ceiling at 1.1 V pulse-width bias"),
        a("pulse_width_0.45", "pulse_width", 20e-3, "dc", {"vpw": 0.45},
          source="pulse width at 0.45 V"),
        a("pulse_width_1.0", "pulse_width", 10e-6, "dc", {"vpw": 1.0},
          source="pulse width at 1.0 V"),
        a("res_10k", "rate", 25e3, "res", {"v_read": 0.25, "r_syn": 10e3},
          source="resistance sweep upper end, 250 mV read"),
        a("res_1M", "rate", 8.0, "res", {"v_read": 0.25, "r_syn": 1e6},
          source="resistance sweep lower end, 250 mV read"),
        a("leak_high", "decay", 8e-3, "leak", {},
          source="threshold-to-rest decay at the high-leak bias"),
        a("leak_low", "decay", 2.0, "leak", {"vtaun": LOW_LEAK_VTAUN}, relation="ge",
          source="threshold-to-rest decay at the low-leak bias"),
        a("temporal_10us", "pulse_rate", 8.0, "temporal",
          {"i_syn": 40e-6, "width": 10e-6, "rate": 100.0},
          source="40 uA pulses, 10 us at 100 Hz"),
        a("temporal_7us", "pulse_rate", 2.0, "temporal",
          {"i_syn": 40e-6, "width": 7e-6, "rate": 100.0},
          source="40 uA pulses, 7 us at 100 Hz"),
        a("temporal_15us", "pulse_rate", 18.0, "temporal",
          {"i_syn": 40e-6, "width": 15e-6, "rate": 100.0},
          source="40 uA pulses, 15 us at 100 Hz"),
        a("pulses_to_fire_15us", "pulses_to_fire", 5.0, "temporal",
          {"i_syn": 40e-6, "width": 15e-6, "rate": 100.0},
          source="input pulses integrated per output spike, 15 us"),
    ]


def default_contexts() -> dict[str, BiasConfig]:
    return {name: default_bias().replace(**base) for name, base in BASE_CONTEXTS.items()}


# ---------------------------------------------------------------------------
# pulse-width map


def _softplus(x: float) -> float:
    return x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))


def solve_pulse_width(v1: float, t1: float, v2: float, t2: float,
                      slope: float) -> tuple[float, float]:
    """``(pw_v0, pw_t0)`` putting the pulse-width map exactly through two points."""
    if v1 > v2:
        v1, t1, v2, t2 = v2, t2, v1, t1
    if not (v1 < v2 and t1 > t2 > 0):
        raise ParameterError("pulse-width points must have distinct bias and falling width")
    target = math.log(t1 / t2)

    def f(v0):
        return 2.0 * math.log(_softplus((v2 - v0) / slope) / _softplus((v1 - v0) / slope)) - target

    lo, hi = v1 - 50 * slope, v2 + 50 * slope
    if f(hi) <= 0:
        raise ParameterError(f"pw_slope {slope} V too large for a {t1 / t2:.3g}x width ratio")
    v0 = brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)
    t0 = t1 * (_softplus((v1 - v0) / slope) / math.log(2.0)) ** 2
    return v0, t0


# ---------------------------------------------------------------------------
# observables


def _i_syn(anchor: Anchor) -> float:
    c = anchor.conditions
    if "i_syn" in c:
        return float(c["i_syn"])
    return max(0.0, float(c["v_read"])) / float(c["r_syn"])


def _constant_rate(i_syn: float, bias: BiasConfig, params: NeuronParams) -> float:
    period = analytic_period(attenuate(i_syn, params).i_att, bias, params)
    return 1.0 / period if math.isfinite(period) else 0.0


def pulse_train_spikes(params: NeuronParams, bias: BiasConfig, i_syn: float, width: float,
                       rate: float, n_pulses: int) -> list[float]:
    """Spike times for a neuron starting at rest and driven by a current pulse train.

    Pulses start at ``t = k / rate``; the integration is exact, so this equals
    a fine-grid simulation whose grid contains every pulse edge.
    """
    leak = leak_setting(bias, params)
    t_pw = pulse_width(bias.vpw, params)
    i = attenuate(i_syn, params).i_att
    per = 1.0 / rate
    args = (params.c1, leak.i_dn, leak.i_up, bias.vrest, bias.vthr, bias.vdd, t_pw)
    v, rem = bias.vrest, 0.0
    spikes = []
    for k in range(n_pulses):
        t = k * per
        v, rem, s, _ = advance(v, rem, i, width, *args)
        spikes += [t + x for x in s]
        v, rem, s, _ = advance(v, rem, 0.0, per - width, *args)
        spikes += [t + width + x for x in s]
    return spikes


def pulse_train_rate(params: NeuronParams, bias: BiasConfig, i_syn: float, width: float,
                     rate: float, n_pulses: int = 600) -> float:
    """Steady firing rate under a pulse train (first spike excluded)."""
    spikes = pulse_train_spikes(params, bias, i_syn, width, rate, n_pulses)
    if len(spikes) < 3:
        return len(spikes) * rate / n_pulses
    s = spikes[1:]
    return (len(s) - 1) / (s[-1] - s[0])


def surrogate_period(params: NeuronParams, bias: BiasConfig, i_syn: float, width: float,
                     rate: float, max_pulses: int = 400) -> float:
    """Continuous stand-in for the pulse-train firing period.

    Starts from reset just after an output pulse and returns
    ``(k - 1 + f) / rate`` where pulse ``k`` crosses threshold a fraction
    ``f`` of the way through. Beyond ``max_pulses`` it extrapolates from the
    remaining distance to threshold so the objective keeps a slope.
    """
    leak = leak_setting(bias, params)
    t_pw = pulse_width(bias.vpw, params)
    i = attenuate(i_syn, params).i_att
    per = 1.0 / rate
    args = (params.c1, leak.i_dn, leak.i_up, bias.vrest, bias.vthr, bias.vdd, t_pw)
    v, rem, _, _ = advance(0.0, 0.0, 0.0, per - width, *args)
    for k in range(1, max_pulses + 1):
        v, rem, s, _ = advance(v, rem, i, width, *args)
        if s:
            return (k - 1 + s[0] / width) * per
        v, rem, s, _ = advance(v, rem, 0.0, per - width, *args)
    span = max(bias.vthr - bias.vrest, 1e-3)
    return max_pulses * per * (1.0 + (bias.vthr - v) / span)


def simulate(anchor: Anchor, cal: Calibration, surrogate: bool = False) -> float:
    """Model value of ``anchor``'s observable under ``cal``."""
    params = cal.params
    bias = cal.bias(anchor.context).replace(**anchor.bias_overrides())
    c = anchor.conditions
    kind = anchor.kind
    if kind == "rate":
        return _constant_rate(_i_syn(anchor), bias, params)
    if kind == "pulse_width":
        return pulse_width(bias.vpw, params)
    if kind == "decay":
        return decay_time(bias.vthr, bias, params)
    i_syn, width, rate = _i_syn(anchor), float(c["width"]), float(c["rate"])
    if surrogate:
        out_rate = 1.0 / surrogate_period(params, bias, i_syn, width, rate)
    else:
        out_rate = pulse_train_rate(params, bias, i_syn, width, rate)
    if kind == "pulse_rate":
        return out_rate
    return rate / out_rate if out_rate > 0 else math.inf


def anchor_loss(anchor: Anchor, value: float) -> float:
    floor = RATE_FLOOR if anchor.kind in ("rate", "pulse_rate") else 1e-12
    d = math.log(max(value, floor)) - math.log(anchor.target)
    if anchor.relation == "ge" and d >= 0:
        return 0.0
    return anchor.weight * d * d


def relative_error(anchor: Anchor, value: float) -> float:
    if anchor.relation == "ge" and value >= anchor.target:
        return 0.0
    return value / anchor.target - 1.0


# ---------------------------------------------------------------------------
# fitting


@dataclass
class Residual:
    anchor: Anchor
    simulated: float
    rel_error: float


@dataclass
class FitResult:
    calibration: Calibration
    residuals: list[Residual]
    converged: bool
    iterations: int
    objective: float
    history: list[float] = field(default_factory=list)  # running best objective per search

    @property
    def params(self) -> NeuronParams:
        return self.calibration.params


def search_space(anchors: list[Anchor], free_contexts: bool = True) -> list[FreeParam]:
    space = list(GLOBAL_SPACE)
    if free_contexts:
        used = []
        for a in anchors:
            if a.context not in used:
                used.append(a.context)
        for ctx in used:
            space += CONTEXT_SPACE.get(ctx, ())
    return space


def _pw_points(anchors: list[Anchor], cal: Calibration):
    pts = {}
    for a in anchors:
        if a.kind == "pulse_width":
            vpw = cal.bias(a.context).replace(**a.bias_overrides()).vpw
            pts[vpw] = a.target
    if len(pts) != 2:
        return None
    (v1, t1), (v2, t2) = sorted(pts.items())
    return v1, t1, v2, t2


class Problem:
    """Objective over the unit box; picklable so restarts can run in workers."""

    def __init__(self, anchors: list[Anchor], base: Calibration, space: list[FreeParam]):
        if not anchors:
            raise AnchorError("anchor set is empty")
        self.anchors = list(anchors)
        self.base = base
        self.space = list(space)
        self.pw = _pw_points(anchors, base)

    def decode(self, u) -> Calibration:
        p_changes: dict[str, float] = {}
        c_changes: dict[str, dict[str, float]] = {}
        for fp, ui in zip(self.space, u):
            x = fp.decode(float(ui))
            if fp.owner == "params":
                p_changes[fp.name] = x
            else:
                c_changes.setdefault(fp.owner, {})[fp.name] = x
        params = replace(self.base.params, **p_changes)
        if self.pw is not None:
            v0, t0 = solve_pulse_width(*self.pw, params.pw_slope)
            params = replace(params, pw_v0=v0, pw_t0=t0)
        contexts = dict(self.base.contexts)
        for name, ch in c_changes.items():
            contexts[name] = self.base.bias(name).replace(**ch)
        return Calibration(params, contexts)

    def encode(self, cal: Calibration) -> np.ndarray:
        out = []
        for fp in self.space:
            if fp.owner == "params":
                out.append(fp.encode(getattr(cal.params, fp.name)))
            else:
                out.append(fp.encode(getattr(cal.bias(fp.owner), fp.name)))
        return np.array(out)

    def __call__(self, u) -> float:
        u = np.asarray(u, dtype=float)
        outside = np.sum(np.abs(u - np.clip(u, 0.0, 1.0)))
        if outside > 0:
            return 1e3 + outside
        try:
            cal = self.decode(u)
            total = 0.0
            for a in self.anchors:
                total += anchor_loss(a, simulate(a, cal, surrogate=True))
        except (ParameterError, ValueError, OverflowError, ZeroDivisionError):
            return math.inf
        return total if math.isfinite(total) else math.inf


def _local_search(problem: Problem, u0: np.ndarray, maxfev: int, rounds: int):
    """Nelder-Mead, restarted from the incumbent until it stops improving.

    Returns ``(u, f, iterations, converged)``.
    """
    f0 = problem(u0)
    if not math.isfinite(f0):
        return u0, f0, 0, False
    u, f, nit, stalled = u0, f0, 0, False
    for _ in range(rounds):
        res = minimize(problem, u, method="Nelder-Mead",
                       options=dict(maxfev=maxfev, xatol=1e-9, fatol=1e-13, adaptive=True))
        nit += int(res.nit)
        if res.fun < f - 1e-10:
            u, f = np.clip(res.x, 0.0, 1.0), float(res.fun)
        else:
            stalled = True  # a fresh simplex around the incumbent found nothing better
            break
    return u, f, nit, stalled


def _restart(args):
    problem, u0, maxfev, rounds = args
    return _local_search(problem, u0, maxfev, rounds)


def _map(fn, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def fit(anchors: list[Anchor], initial: NeuronParams | Calibration | None = None,
        seed: int = 0, restarts: int = 16, polish: int = 3, screen_fev: int = 1500,
        maxfev: int = 4000, rounds: int = 30, free_contexts: bool = True,
        jobs: int = 1) -> FitResult:
    """Fit the model to ``anchors``.

    Stage one runs a short local search from ``initial`` and from
    ``restarts`` seeded random points inside the bounds; stage two polishes
    the ``polish`` best candidates to convergence. Deterministic for a given
    seed regardless of ``jobs``.
    """
    anchors = list(anchors)
    if initial is None:
        base = Calibration(NeuronParams(), default_contexts())
    elif isinstance(initial, NeuronParams):
        base = Calibration(initial, default_contexts())
    else:
        base = Calibration(initial.params, {**default_contexts(), **initial.contexts})
    problem = Problem(anchors, base, search_space(anchors, free_contexts))
    rng = np.random.default_rng(seed)
    starts = [problem.encode(base)]
    starts += [rng.uniform(0.05, 0.95, len(problem.space)) for _ in range(restarts)]

    screened = _map(_restart, [(problem, u0, screen_fev, 3) for u0 in starts], jobs)
    total_nit = sum(s[2] for s in screened)
    history = []
    best = math.inf
    for k, (_, f, _, _) in enumerate(screened):
        if not math.isfinite(f):
            log.warning("start %d: non-finite objective, skipped", k)
        best = min(best, f)
        history.append(best)
    finite = sorted((s for s in screened if math.isfinite(s[1])), key=lambda s: s[1])
    if not finite:
        return FitResult(base, residuals(anchors, base), False, total_nit, math.inf, history)

    polished = _map(_restart, [(problem, s[0], maxfev, rounds) for s in finite[:polish]], jobs)
    best_u, best_f, any_ok = finite[0][0], finite[0][1], False
    for u, f, nit, ok in polished:
        total_nit += nit
        any_ok = any_ok or ok
        if f < best_f:
            best_u, best_f = u, f
        history.append(best_f)
    cal = problem.decode(best_u)
    return FitResult(cal, residuals(anchors, cal), any_ok, total_nit, best_f, history)


def residuals(anchors: list[Anchor], cal: Calibration) -> list[Residual]:
    out = []
    for a in anchors:
        value = simulate(a, cal)
        out.append(Residual(a, value, relative_error(a, value)))
    return out


def residual_report(fit_result: FitResult, anchors: list[Anchor] | None = None) -> list[dict]:
    """One row per anchor, largest absolute relative error first."""
    res = fit_result.residuals if anchors is None else residuals(anchors, fit_result.calibration)
    rows = [{"anchor": r.anchor.describe(), "target": r.anchor.target,
             "simulated": r.simulated, "rel_error": r.rel_error} for r in res]
    rows.sort(key=lambda r: -abs(r["rel_error"]))
    return rows


REPORT_COLUMNS = ("anchor", "target", "simulated", "rel_error")


def write_report(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow([r["anchor"]] + [repr(float(r[k])) for k in REPORT_COLUMNS[1:]])


def read_report(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != REPORT_COLUMNS:
            raise AnchorError(f"{path}: not a residual report")
        for row in reader:
            rows.append({"anchor": row[0], **{k: float(x) for k, x in zip(REPORT_COLUMNS[1:], row[1:])}})
    return rows


# ---------------------------------------------------------------------------
# anchors CSV

ANCHOR_COLUMNS = ("name", "kind", "context", "conditions", "target", "weight", "relation", "source")


def _format_conditions(c: dict) -> str:
    return ";".join(f"{k}={v!r}" for k, v in c.items())


def write_anchors(path, anchors: list[Anchor]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ANCHOR_COLUMNS)
        for a in anchors:
            w.writerow([a.name, a.kind, a.context, _format_conditions(a.conditions),
                        repr(a.target), repr(a.weight), a.relation, a.source])


def read_anchors(path) -> list[Anchor]:
    """Parse an anchors CSV; errors name the file, line and column."""
    name = Path(path).name
    anchors = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise AnchorError(f"{name}: empty anchors file")
        header = [h.strip() for h in header]
        missing = [c for c in ("name", "kind", "target") if c not in header]
        if missing:
            raise AnchorError(f"{name}:1: missing column(s) {', '.join(missing)}")
        unknown = [c for c in header if c not in ANCHOR_COLUMNS]
        if unknown:
            raise AnchorError(f"{name}:1: unknown column(s) {', '.join(unknown)}")
        col = {h: i for i, h in enumerate(header)}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not x.strip() for x in row):
                continue
            if len(row) != len(header):
                raise AnchorError(f"{name}:{lineno}: expected {len(header)} columns, got {len(row)}")

            def get(key, default=None):
                return row[col[key]].strip() if key in col else default

            def num(key, default=None):
                raw = get(key)
                if raw is None or raw == "":
                    if default is None:
                        raise AnchorError(f"{name}:{lineno}:{key}: value required")
                    return default
                try:
                    return float(raw)
                except ValueError:
                    raise AnchorError(f"{name}:{lineno}:{key}: not a number: {raw!r}") from None

            conditions = {}
            for item in filter(None, (get("conditions", "") or "").split(";")):
                k, eq, v = item.partition("=")
                try:
                    if not eq:
                        raise ValueError
                    conditions[k.strip()] = float(v)
                except ValueError:
                    raise AnchorError(
                        f"{name}:{lineno}:conditions: bad entry {item!r} (want key=number)") from None
            try:
                anchors.append(Anchor(
                    name=get("name"), kind=get("kind"), target=num("target"),
                    context=get("context") or "default", conditions=conditions,
                    weight=num("weight", 1.0), relation=get("relation") or "eq",
                    source=get("source", "") or ""))
            except AnchorError as exc:
                raise AnchorError(f"{name}:{lineno}: {exc}") from None
    if not anchors:
        raise AnchorError(f"{name}: no anchors")
    return anchors


def synthetic_anchors(template: list[Anchor], cal: Calibration) -> list[Anchor]:
    """Copies of ``template`` whose targets are the model values under ``cal``."""
    out = []
    for a in template:
        value = simulate(a, cal)
        out.append(replace(a, target=value, relation="eq"))
    return out


PARAM_FIT_FIELDS = tuple(f.name for f in fields(NeuronParams) if f.name != "comparator_mode")
