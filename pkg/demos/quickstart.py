"""Estimate gene-set p-values for a small synthetic study.

The script writes an expression matrix, a label file and a GMT collection to
a temporary directory, then runs the same pipeline as ``permcap run-estimate``.
Eight genes carry a real group difference; the ``shifted`` set collects them.

Run with ``python demos/quickstart.py``.
"""

import tempfile
from pathlib import Path

import numpy as np

from permcap import pipeline
from permcap.estimators import Sided

M0, M1, GENES = 12, 15, 300


def write_inputs(root):
    rng = np.random.default_rng(7)
    labels = np.array([0] * M0 + [1] * M1)
    values = rng.standard_normal((GENES, M0 + M1))
    values[:8] += 1.2 * labels
    samples = [f"s{i}" for i in range(M0 + M1)]
    with open(root / "matrix.tsv", "w") as fh:
        fh.write("gene\t" + "\t".join(samples) + "\n")
        for g, row in enumerate(values):
            fh.write(f"g{g}\t" + "\t".join(f"{v:.5f}" for v in row) + "\n")
    with open(root / "labels.csv", "w") as fh:
        fh.write("sample,group\n")
        fh.writelines(f"{s},{lab}\n" for s, lab in zip(samples, labels))
    with open(root / "sets.gmt", "w") as fh:
        fh.write("shifted\tgenes with a group effect\t" + "\t".join(f"g{i}" for i in range(8)) + "\n")
        for k in range(5):
            members = rng.choice(np.arange(8, GENES), 20, replace=False)
            fh.write(f"null{k}\trandom genes\t" + "\t".join(f"g{i}" for i in members) + "\n")


def main():
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        write_inputs(root)
        matrix = pipeline.read_expression_tsv(root / "matrix.tsv")
        labels = pipeline.read_labels_csv(root / "labels.csv", matrix.samples)
        sets = pipeline.read_gmt(root / "sets.gmt")
        records = pipeline.run_estimate(matrix, sets, labels, ("p1", "p2", "p3"), Sided.TWO, with_rmse=True)

    n_orbit = records[0]["granularity"]
    print(f"{M0} controls, {M1} cases: the smallest attainable permutation p-value is {n_orbit:.3g}\n")
    print(f"{'set':8s} {'rho_hat':>8s} {'p1':>10s} {'p2':>10s} {'RMSE(p2)':>10s} {'p3':>10s}")
    for r in records:
        print(f"{r['name']:8s} {r['rho_hat']:8.3f} {r['p1_estimate']:10.3g} {r['p2_estimate']:10.3g} "
              f"{r['p2_rmse']:10.3g} {r['p3_estimate']:10.3g}")
    print("\nThe shifted set gets a tiny p-value far below anything 10^5 random permutations could")
    print("resolve, and its RMSE stays a modest multiple of the estimate itself.")


if __name__ == "__main__":
    main()
