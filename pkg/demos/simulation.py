"""Compare the estimates with exact permutation p-values on simulated data.

Each replicate draws 10 controls and 10 shifted cases, computes the exact
two-sided permutation p-value by enumerating all 184756 allocations, and
reports how far each estimate lands from it.  ``Z = (p - p2) / RMSE2`` puts
the error of ``p2`` on the scale of its own predicted RMSE.

Run with ``python demos/simulation.py [dist] [reps]``; ``dist`` is one of
exp, normal, t5 or uniform.
"""

import sys

import numpy as np

from permcap import pipeline


def main(dist="normal", reps=40):
    rows, summary = pipeline.bench_sim(dist, m0=10, m1=10, reps=reps, seed=1)
    print(f"{dist} data, shift {summary['shift']}, {summary['retained']} replicates "
          f"({summary['separated_excluded']} perfectly separated ones dropped)\n")
    print(f"{'':4s} {'median p_hat/p':>15s} {'10%':>8s} {'90%':>8s}")
    for e in ("p1", "p2", "p3"):
        print(f"{e:4s} {summary[f'{e}_ratio_median']:15.3f} {summary[f'{e}_ratio_q10']:8.3f} "
              f"{summary[f'{e}_ratio_q90']:8.3f}")
    z = np.array([r["z_2"] for r in rows])
    print(f"\nZ for p2: median {np.median(z):+.2f}, largest {z.max():.2f}")
    worst = max(rows, key=lambda r: r["z_2"])
    print(f"largest Z at exact p = {worst['p']:.3g} (p2 = {worst['p2']:.3g}, RMSE {worst['p2_rmse']:.3g})")
    print("\np1 tends to undershoot small p-values; conditioning on the observed point (p2, p3)")
    print("pulls the estimates back toward the exact value.")


if __name__ == "__main__":
    args = sys.argv[1:]
    main(args[0] if args else "normal", int(args[1]) if len(args) > 1 else 40)
