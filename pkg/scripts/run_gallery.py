"""Run every bundled scenario and print a one-line summary for each."""

import argparse
import time

from hamrec.scenarios import list_scenarios, load_scenario, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs")
    ap.add_argument("--noiseless", action="store_true")
    args = ap.parse_args()
    for name in list_scenarios():
        sc = load_scenario(name).with_overrides(noiseless=args.noiseless or None)
        start = time.perf_counter()
        outcome = run_scenario(sc, args.out)
        brief = {k: v for k, v in outcome.summary.items() if isinstance(v, (int, float))}
        print(f"{name:24s} {time.perf_counter() - start:6.2f} s  {brief}")


if __name__ == "__main__":
    main()
