"""How the estimates behave as the observed correlation grows.

For a balanced design with 20 samples per group this walks ``rho`` from 0 to
1 and prints the cap-volume estimate ``p1``, the conditioned estimate ``p2``
and their root mean squared errors under the conditioned model.  Watch three
things in the table:

* ``p2`` never falls below ``1/N`` and lands on it at ``rho = 1``;
* the RMSE of ``p1`` stops shrinking once ``p1`` is far below ``1/N``;
* the RMSE of ``p2`` stays comparable to ``p2`` and vanishes at ``rho = 1``.

Run with ``python demos/sweep_tour.py``.
"""

from permcap import pipeline
from permcap.estimators import Sided

RHOS = [0.0, 0.2, 0.4, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.99, 1.0]


def main():
    rows = pipeline.sweep([20], RHOS, Sided.ONE)
    n_inv = rows[0]["granularity"]
    print(f"m0 = m1 = 20, one-sided, 1/N = {n_inv:.3g}\n")
    print(f"{'rho':>5s} {'p1':>10s} {'p2':>10s} {'p2*N':>8s} {'RMSE2(p1)':>10s} {'RMSE2(p2)':>10s} {'CV(p2)':>7s}")
    for r in rows:
        print(f"{r['rho']:5.2f} {r['p1']:10.3g} {r['p2']:10.3g} {r['p2'] / n_inv:8.3g} "
              f"{r['rmse2_p1']:10.3g} {r['rmse2_p2']:10.3g} {r['cv_p2']:7.3g}")
    print()
    for name, ok, detail in pipeline.sweep_properties(rows, Sided.ONE, tail_points=2):
        tag = "info" if ok is None else ("ok" if ok else "FAILED")
        print(f"[{tag}] {name}: {detail}")


if __name__ == "__main__":
    main()
