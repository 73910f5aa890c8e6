"""OTOC time series for selected states and the steady-state profile versus E/N."""

import argparse
from pathlib import Path

import numpy as np

from almg import ModelParams, OtocRequest, diagonalize, microcanonical_otoc, steady_state_profile
from almg.model import EVEN
from almg.otoc import EigenbasisPair
from almg.output import write_columns


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=300)
    ap.add_argument("--xi", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=-0.6)
    ap.add_argument("--states", type=int, nargs="+", default=[0, 74, 95, 115, 140])
    ap.add_argument("--profile-N", type=int, default=400, help="size used for the steady-state profile")
    ap.add_argument("--out", type=Path, default=Path("results/otoc"))
    args = ap.parse_args()

    params = ModelParams(args.N, args.xi, args.alpha)
    spec = diagonalize(params)
    times = np.linspace(0.0, 50.0, 2000)
    cols = {"t": times}
    for W, V in (("sp", "sm"), ("sx", "sx")):
        pair = EigenbasisPair(spec, W, V)
        for j in args.states:
            cols[f"F_{W}{V}_{j}"] = microcanonical_otoc(OtocRequest(params, (EVEN, j), W, V, times), pair=pair).f_values
    write_columns(args.out / "otoc_series.csv", cols)

    big = ModelParams(args.profile_N, args.xi, args.alpha)
    big_spec = diagonalize(big)
    table = {}
    for W, V in (("sp", "sm"), ("sx", "sx")):
        prof = steady_state_profile(big, W, V, EVEN, spec=big_spec)
        table.update(j=prof.j, e_per_site=prof.energy_per_site, eps=prof.eps)
        table[f"F_bar_{W}{V}"] = prof.f_bar
    write_columns(args.out / "otoc_steady_profile.csv", table)

    e, f = table["e_per_site"], np.abs(table["F_bar_spsm"])
    for lo, hi in ((-np.inf, 0.35), (0.41, 0.49), (0.55, np.inf)):
        band = (e > lo) & (e < hi)
        print(f"E/N in ({lo}, {hi}): median |F_bar| = {np.median(f[band]):.3e} over {band.sum()} states")


if __name__ == "__main__":
    main()
