"""Mean reconstruction infidelity of the pi pulse against filter cutoff."""

import argparse

import numpy as np

from hamrec.scenarios import Scenario, load_scenario
from hamrec.scenarios.runner import run_reconstruction


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cutoffs-mhz", type=float, nargs="+", default=[100, 50, 20, 12, 8, 6, 4, 3, 2])
    ap.add_argument("--order", type=int, default=3)
    ap.add_argument("--noisy", action="store_true")
    args = ap.parse_args()
    base = load_scenario("sq_pi_flat_top").with_overrides(noiseless=not args.noisy or None).to_dict()
    base["pipeline"]["filter_order"] = args.order
    truth, _ = Scenario.from_dict(base).hamiltonians()
    bw = np.max(np.abs(truth.amplitude("X"))) / (2 * np.pi)
    print(f"peak Rabi frequency {bw / 1e6:.2f} MHz")
    print(f"{'cutoff_MHz':>10s} {'ratio':>6s} {'infidelity':>11s}")
    for fc in args.cutoffs_mhz:
        base["pipeline"]["critical_freq"] = fc * 1e6
        run = run_reconstruction(Scenario.from_dict(base))
        print(f"{fc:10.1f} {fc * 1e6 / bw:6.1f} {1 - run.mean_fidelity:11.2e}")


if __name__ == "__main__":
    main()
