import csv

import pytest


def write_rows(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


@pytest.fixture
def grid_2d(tmp_path):
    """3x3 scan with two non-finite cells (empty, the upstream sentinel)."""
    rows = []
    for a in (-1.0, 0.0, 1.0):
        for b in (-1.0, 0.0, 1.0):
            loss = "" if (a, b) in ((-1.0, -1.0), (1.0, 1.0)) else repr(a * a + 2 * b * b)
            rows.append([repr(a), repr(b), loss])
    return write_rows(tmp_path / "grid2d.csv", ["alpha", "beta", "loss"], rows)


@pytest.fixture
def grids_1d(tmp_path):
    paths = []
    for name, scale in (("top", 3.0), ("bottom", 1.0), ("random", 2.0)):
        rows = [[repr(a / 4), repr(scale * (a / 4) ** 2)] for a in range(-4, 5)]
        if name == "top":
            rows[0][1] = ""  # divergent rim cell
        paths.append(write_rows(tmp_path / f"scan_{name}.csv", ["alpha", "loss"], rows))
    return paths


@pytest.fixture
def scores_csv(tmp_path):
    rows = [["w.a", "dense0", i, repr(v)]
            for i, v in enumerate([1.0, 0.31, 0.07, 0.025, 0.0009, 0.0])]
    return write_rows(tmp_path / "fisher_coords.csv",
                      ["parameter", "layer", "index", "score"], rows)


@pytest.fixture
def sweep_csv(tmp_path):
    rows = []
    values = {"guided": [0.9, 0.8, 0.85], "standard": [0.7, 0.75, 0.6]}
    for plan, headline in values.items():
        for frac in ("1.0", "0.25"):
            for restart in range(3):
                v = headline[restart] * (1.0 if frac == "1.0" else 0.9)
                failed = plan == "standard" and frac == "0.25" and restart == 2
                rows.append([plan, frac, restart, "headline", repr(0.0 if failed else v)])
                rows.append([plan, frac, restart, "failed", repr(float(failed))])
    return write_rows(tmp_path / "sweep.csv",
                      ["regularizer", "fraction", "restart", "metric", "value"], rows)
