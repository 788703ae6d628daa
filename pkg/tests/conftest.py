import numpy as np
import pytest


def write_dataset(root, m0=6, m1=7, n_genes=40, seed=0, effect=1.0):
    """Small expression matrix, shuffled label file and a GMT with edge cases."""
    rng = np.random.default_rng(seed)
    n = m0 + m1
    labels = np.array([0] * m0 + [1] * m1)
    values = rng.standard_normal((n_genes, n))
    values[:8] += effect * labels
    values[n_genes - 1] = 2.5
    samples = [f"S{i:02d}" for i in range(n)]
    matrix = root / "matrix.tsv"
    with open(matrix, "w") as fh:
        fh.write("gene\t" + "\t".join(samples) + "\n")
        for g in range(n_genes):
            fh.write(f"G{g}\t" + "\t".join(repr(float(v)) for v in values[g]) + "\n")
    label_path = root / "labels.csv"
    order = rng.permutation(n)
    with open(label_path, "w") as fh:
        fh.write("sample,condition\n")
        for i in order:
            fh.write(f"{samples[i]},{labels[i]}\n")
    gmt = root / "sets.gmt"
    with open(gmt, "w") as fh:
        fh.write("UP\tshifted genes\t" + "\t".join(f"G{g}" for g in range(8)) + "\n")
        fh.write("NULL\trandom genes\t" + "\t".join(f"G{g}" for g in range(10, 22)) + "\n")
        fh.write(f"MIXED\tincl. constant and absent\tG3\tG15\tG{n_genes - 1}\tABSENT\n")
        fh.write("EMPTY\tnothing usable\tABSENT\n")
    return matrix, label_path, gmt


@pytest.fixture
def dataset(tmp_path):
    return write_dataset(tmp_path)


CRITERIA = {
    1: "orbit sizes",
    2: "Chebychev worked example",
    3: "moment formulas against sampling and enumeration",
    4: "sphere geometry",
    5: "census identities",
    6: "qualitative sweep at m = 20, 70",
    7: "simulation harness, normal shift",
    8: "performance at m0 = 22, m1 = 50",
}
_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    entry = _acceptance.setdefault(number, {"ok": True, "details": []})
    entry["ok"] &= report.passed
    if hasattr(report, "wasxfail"):
        entry["details"].append(f"expected failure: {report.wasxfail}")
    entry["details"].extend(v for k, v in report.user_properties if k == "detail")


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        item.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_acceptance):
        entry = _acceptance[number]
        tr.write_line(f"criterion {number} ({CRITERIA.get(number, '')}): {'PASS' if entry['ok'] else 'FAIL'}")
        for detail in entry["details"]:
            tr.write_line(f"    {detail}")
