"""Reconstruction infidelity against pi-pulse duration at fixed area.

Prints the measured-z infidelity next to the one obtained from the exact
z records, which isolates the cost of the resonator lag.
"""

import argparse

from hamrec.scenarios import load_scenario
from hamrec.scenarios.runner import reconstruct_dataset, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--durations-ns", type=float, nargs="+", default=[50, 75, 100, 150, 250, 400])
    ap.add_argument("--readout-model", choices=["ode", "adiabatic"], default="ode")
    args = ap.parse_args()
    sc = load_scenario("fig2e_sweep")
    data = sc.to_dict()
    data["pipeline"]["readout_model"] = args.readout_model
    sc = type(sc).from_dict(data)
    print(f"{'duration_ns':>11s} {'measured':>10s} {'exact_z':>10s}")
    for d_ns in args.durations_ns:
        ds, ref = simulate(sc, d_ns * 1e-9, sc.sweep.ramp_fraction)
        meas = 1 - reconstruct_dataset(sc, ds, ref).mean_fidelity
        exact = 1 - reconstruct_dataset(sc, ds, ref, z=ds.z_true).mean_fidelity
        print(f"{d_ns:11.0f} {meas:10.2e} {exact:10.2e}")


if __name__ == "__main__":
    main()
