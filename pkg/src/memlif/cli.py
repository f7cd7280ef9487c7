"""Command-line front end.

Exit codes: 0 ok, 1 usage, 2 validation, 3 acceptance-check failure (or a
calibration that did not converge).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import calibration as calib
from .chip import ParameterError, check, validate_params
from .config import (SECTIONS, ConfigError, RunConfig, load_config, load_params, parse_config,
                     save_params)
from .presets import FIGURES, reproduce
from .sim import ExperimentError, run

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def bundled_params_path() -> Path:
    return Path(str(resources.files("memlif") / "data" / "calibrated.params"))


def load_calibration(path=None) -> calib.Calibration:
    """Calibration from a params file, or the bundled one."""
    path = Path(path) if path is not None else bundled_params_path()
    if not path.is_file():
        raise ConfigError(f"params file not found: {path}")
    params, contexts = load_params(path)
    return calib.Calibration(params, {**calib.default_contexts(), **contexts})


def _config(args, cal: calib.Calibration) -> RunConfig:
    if args.config is None:
        return parse_config("", params_defaults=cal.params)
    return load_config(args.config, params_defaults=cal.params)


# ---------------------------------------------------------------------------
# commands


def cmd_reproduce(args) -> int:
    cal = load_calibration(args.params)
    figures = FIGURES if args.figure == "all" else (args.figure,)
    out = Path(args.out)
    lines, failed = [], 0
    for fig in figures:
        checks = reproduce(fig, cal, out, dt=args.dt, jobs=args.jobs)
        for c in checks:
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}".rstrip())
            failed += not c.passed
    lines.append(f"{len(lines) - failed}/{len(lines)} checks passed")
    summary = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(summary)
    print(summary, end="")
    return EXIT_CHECK if failed else EXIT_OK


def _simulate(cfg: RunConfig, dt, power_gating):
    exp = cfg.build_experiment(dt)
    return exp, *run(exp, params=cfg.params, power=cfg.power, power_gating=power_gating)


def _rates(trace) -> dict[str, float]:
    return {n: len(ts) / trace.duration for n, ts in trace.spikes.items()}


def cmd_run(args) -> int:
    cal = load_calibration(args.params)
    cfg = _config(args, cal)
    exp, trace, ledger = _simulate(cfg, args.dt, args.power_gating)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out / "trace.csv", every=args.every)
    trace.spikes_to_csv(out / "spikes.csv")
    ledger.write(out / "ledger.txt", out / "ledger.json")
    lines = [f"duration_s = {exp.duration!r}"]
    for n, r in _rates(trace).items():
        lines.append(f"{n}.spikes = {len(trace.spikes[n])}")
        lines.append(f"{n}.rate_hz = {r!r}")
    lines.append(f"energy_total_J = {ledger.total!r}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def resolve_variable(name: str) -> tuple[str, str]:
    """``section.key`` of a sweepable field; bare names search the sections."""
    if "." in name:
        section, _, key = name.partition(".")
        if section in SECTIONS and key in SECTIONS[section]:
            return section, key
        raise UsageError(f"unknown sweep variable {name!r}")
    for section in ("bias", "experiment", "stimulus", "crossbar", "params"):
        if name in SECTIONS[section]:
            return section, name
    raise UsageError(f"unknown sweep variable {name!r}")


def _with_value(cfg: RunConfig, section: str, key: str, value: float) -> RunConfig:
    if section == "bias":
        return replace(cfg, bias=cfg.bias.replace(**{key: value}))
    if section == "params":
        return replace(cfg, params=cfg.params.replace(**{key: value}))
    if section == "crossbar":
        xb = cfg.crossbar
        if xb is None:
            raise UsageError("sweep over a crossbar field needs a [crossbar] section")
        if key in ("rows", "cols"):
            value = int(round(value))
        return replace(cfg, crossbar=replace(xb, **{key: value}))
    return replace(cfg, **{section: replace(getattr(cfg, section), **{key: value})})


def _sweep_point(task):
    cfg, dt, power_gating = task
    _, trace, ledger = _simulate(cfg, dt, power_gating)
    return _rates(trace), {n: len(t) for n, t in trace.spikes.items()}, ledger.total


def sweep_grid(lo: float, hi: float, steps: int, log: bool) -> list[float]:
    if steps < 1:
        raise UsageError(f"steps must be >= 1, got {steps}")
    if steps == 1:
        return [lo]
    if log:
        if lo <= 0 or hi <= 0:
            raise UsageError("log sweep needs a positive range")
        return [float(x) for x in np.logspace(np.log10(lo), np.log10(hi), steps)]
    return [float(x) for x in np.linspace(lo, hi, steps)]


def cmd_sweep(args) -> int:
    section, key = resolve_variable(args.variable)
    try:
        lo, hi = (float(x) for x in args.range.split(":"))
    except ValueError:
        raise UsageError(f"--range must be LO:HI, got {args.range!r}") from None
    grid = sweep_grid(lo, hi, args.steps, args.log)
    cal = load_calibration(args.params)
    cfg = _config(args, cal)
    points = []
    for value in grid:
        pcfg = _with_value(cfg, section, key, value)
        check(pcfg.bias)
        bad = validate_params(pcfg.params)
        if bad:
            raise ConfigError("; ".join(str(v) for v in bad))
        pcfg.build_experiment(args.dt).validate(pcfg.params)
        points.append((pcfg, args.dt, args.power_gating))
    if args.jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, points))
    else:
        results = [_sweep_point(p) for p in points]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    neurons = list(results[0][0])
    header = [f"{section}.{key}"] + [f"{n}.rate_hz" for n in neurons] + \
             [f"{n}.spikes" for n in neurons] + ["energy_total_J"]
    lines = [",".join(header)]
    for value, (rates, counts, energy) in zip(grid, results):
        row = [repr(value)] + [repr(rates[n]) for n in neurons] + \
              [str(counts[n]) for n in neurons] + [repr(energy)]
        lines.append(",".join(row))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if args.anchors in (None, "builtin"):
        anchors = calib.default_anchors()
    else:
        anchors = calib.read_anchors(args.anchors)
    initial = load_calibration(args.params)
    result = calib.fit(anchors, initial, seed=args.seed, restarts=args.restarts, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cal = result.calibration
    used = {a.context for a in anchors}
    save_params(out / "calibrated.params", cal.params,
                {k: v for k, v in cal.contexts.items() if k in used})
    rows = calib.residual_report(result)
    calib.write_report(out / "residuals.csv", rows)
    info = {"objective": result.objective, "converged": result.converged,
            "iterations": result.iterations, "anchors": len(anchors)}
    (out / "fit.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    for r in rows:
        print(f"{r['rel_error']:+8.3f}  {r['anchor']}  target={r['target']:.4g} sim={r['simulated']:.4g}")
    print(f"objective={result.objective:.6g} converged={result.converged}")
    return EXIT_OK if result.converged else EXIT_CHECK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="memlif", description="Memristive LIF neuron chain simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_default):
        sp.add_argument("--out", default=out_default, help="output directory")
        sp.add_argument("--params", default=None, help="calibrated params file (default: bundled)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")

    rp = sub.add_parser("reproduce", help="re-run a figure experiment and check it")
    rp.add_argument("figure", choices=FIGURES + ("all",))
    common(rp, "out")
    rp.add_argument("--dt", type=float, default=None, help="step override (s)")
    rp.set_defaults(func=cmd_reproduce)

    for name, func, helptext in (("run", cmd_run, "simulate one config"),
                                 ("sweep", cmd_sweep, "sweep one config field")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", default=None, help="experiment config file")
        common(sp, "out")
        sp.add_argument("--dt", type=float, default=None, help="step override (s)")
        sp.add_argument("--power-gating", action="store_true",
                        help="count read-path static power only while the clamp conducts")
        sp.set_defaults(func=func)
        if name == "run":
            sp.add_argument("--every", type=int, default=1, help="trace decimation")
        else:
            sp.add_argument("--variable", required=True)
            sp.add_argument("--range", required=True, help="LO:HI")
            sp.add_argument("--steps", type=int, required=True)
            sp.add_argument("--log", action="store_true", help="log-spaced grid")

    cp = sub.add_parser("calibrate", help="fit params to anchors")
    cp.add_argument("--anchors", default="builtin", help="anchors CSV or 'builtin'")
    common(cp, "calibration")
    cp.add_argument("--seed", type=int, default=0)
    cp.add_argument("--restarts", type=int, default=16)
    cp.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    if getattr(args, "every", 1) < 1:
        parser.error("--every must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"memlif: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ExperimentError, ParameterError, calib.AnchorError, ValueError) as exc:
        print(f"memlif: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
