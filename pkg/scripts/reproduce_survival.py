"""Survival probability around the three critical quenches at N = 300.

Writes one CSV per column with F(t) for xi_c and xi_c +- step, plus a summary
of the long-time means over t in [20, 200].
"""

import argparse
from pathlib import Path

import numpy as np

from almg import ModelParams, QuenchSpec, StateSelector, critical_xi_from_ground, critical_xi_from_highest
from almg import diagonalize, quench_coefficients, survival_probability
from almg.output import write_columns
from almg.quench import collapse_signature


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=300)
    ap.add_argument("--step", type=float, default=0.1, help="offset of the neighbouring xi2 values")
    ap.add_argument("--t-max", type=float, default=200.0)
    ap.add_argument("--n-points", type=int, default=4001)
    ap.add_argument("--out", type=Path, default=Path("results/survival"))
    args = ap.parse_args()

    N = args.N
    columns = [
        ("alpha0_ground", 0.0, 0.6, StateSelector.ground(), critical_xi_from_ground(0.0, 0.6, N)),
        ("alpha-0.6_ground", -0.6, 0.6, StateSelector.ground(), critical_xi_from_ground(-0.6, 0.6, N)),
        ("alpha-0.6_highest", -0.6, 0.7, StateSelector.highest_even(), critical_xi_from_highest(-0.6, 0.7, N, 0.4)),
    ]
    times = np.linspace(0.0, args.t_max, args.n_points)
    summary = {"column": [], "xi2": [], "offset": [], "mean_F": [], "max_F": []}
    for name, alpha, xi1, sel, xi_c in columns:
        initial = diagonalize(ModelParams(N, xi1, alpha))
        cols = {"t": times}
        for offset in (-args.step, 0.0, args.step):
            xi2 = xi_c + offset
            if not 0.0 <= xi2 <= 1.0:
                continue
            ldos = quench_coefficients(QuenchSpec(N, alpha, xi1, xi2, sel), initial=initial)
            series = survival_probability(ldos, times)
            cols[f"F_xi2={xi2:.4f}"] = series.values
            mean, peak = collapse_signature(series)
            for key, val in zip(summary, (name, xi2, offset, mean, peak)):
                summary[key].append(val)
            print(f"{name:18s} xi2={xi2:.4f} <F>={mean:.4f} max={peak:.4f}")
        write_columns(args.out / f"{name}.csv", cols)
    write_columns(args.out / "summary.csv", summary)


if __name__ == "__main__":
    main()
