"""Read-path energy overhead with and without power gating across input pulse rates."""

import argparse

from memlif.cli import load_calibration
from memlif.sim import pulse_train, read_neuron, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--duration", type=float, default=0.2)
    args = ap.parse_args()
    cal = load_calibration()
    bias = cal.bias("temporal")
    print("rate_hz,spikes,total_J,gated_total_J,read_share,gated_read_share")
    for rate in (10.0, 100.0, 1000.0, 10000.0):
        exp = read_neuron(pulse_train(0.4, 10e-6, rate, baseline=bias.vref), 10e3,
                          args.duration, 1e-6, bias)
        rows = []
        for gating in (False, True):
            trace, ledger = run(exp, params=cal.params, power_gating=gating)
            neuron = ledger.blocks["neuron:n0"].total
            rows.append((ledger.total, 1 - neuron / ledger.total))
        print(f"{rate:g},{len(trace.spikes['n0'])},{rows[0][0]:.6g},{rows[1][0]:.6g},"
              f"{rows[0][1]:.4f},{rows[1][1]:.4f}")


if __name__ == "__main__":
    main()
