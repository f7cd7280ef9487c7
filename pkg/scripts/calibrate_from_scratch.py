"""Fit the model to the built-in anchors from a neutral start and compare seeds."""

import argparse
import json
from pathlib import Path

from memlif import calibration as calib
from memlif.chip import NeuronParams
from memlif.config import save_params

NEUTRAL = NeuronParams(c1=1e-12, i_dn0=1e-10, i_up0=1e-10, v_leak_slope=0.1, pw_slope=0.1,
                       pw_t0=1e-4, pw_v0=0.7)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out/calibration")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    anchors = calib.default_anchors()
    summary = {}
    for seed in args.seeds:
        fit = calib.fit(anchors, NEUTRAL, seed=seed, jobs=args.jobs)
        save_params(out / f"seed{seed}.params", fit.calibration.params, fit.calibration.contexts)
        calib.write_report(out / f"seed{seed}_residuals.csv", calib.residual_report(fit))
        worst = max(abs(r.rel_error) for r in fit.residuals)
        summary[seed] = {"objective": fit.objective, "converged": fit.converged, "worst": worst,
                         "i_up0": fit.params.i_up0}
        print(f"seed {seed}: objective {fit.objective:.5g}, worst residual {worst:+.3f}, "
              f"i_up0 {fit.params.i_up0:.3g} A")
    (out / "seeds.json").write_text(json.dumps(summary, indent=2) + "\n")


if __name__ == "__main__":
    main()
