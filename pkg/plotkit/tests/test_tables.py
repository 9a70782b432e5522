import numpy as np
import pytest

from plotkit import SchemaError, read_grid, read_scores, read_sweep


def test_read_grid_2d_shape_and_gaps(grid_2d):
    grid = read_grid(grid_2d)
    assert grid["losses"].shape == (3, 3)
    assert np.array_equal(grid["alphas"], [-1.0, 0.0, 1.0])
    assert np.isnan(grid["losses"][0, 0]) and np.isnan(grid["losses"][2, 2])
    assert grid["losses"][1, 1] == 0.0
    assert grid["losses"][0, 2] == 3.0  # alpha=-1, beta=1


def test_read_grid_1d(grids_1d):
    grid = read_grid(grids_1d[0])
    assert grid["betas"] is None
    assert grid["alphas"].shape == (9,)
    assert np.isnan(grid["losses"][0])
    assert np.isfinite(grid["losses"][1:]).all()


def test_missing_column_is_named(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("alpha,value\n0.0,1.0\n")
    with pytest.raises(SchemaError, match="missing column 'loss'"):
        read_grid(bad)
    scoreless = tmp_path / "scoreless.csv"
    scoreless.write_text("parameter,layer,index\nw,0,0\n")
    with pytest.raises(SchemaError, match="missing column 'score'"):
        read_scores(scoreless)
    with pytest.raises(SchemaError, match="missing column 'regularizer'"):
        read_sweep(bad)


def test_read_scores(scores_csv):
    scores = read_scores(scores_csv)
    assert scores.shape == (6,)
    assert scores.max() == 1.0 and scores.min() == 0.0


def test_read_sweep_groups_and_drops_failed_runs(sweep_csv):
    table = read_sweep(sweep_csv)
    assert set(table) == {("guided", 1.0), ("guided", 0.25),
                          ("standard", 1.0), ("standard", 0.25)}
    assert table[("guided", 1.0)] == [0.9, 0.8, 0.85]
    assert len(table[("standard", 0.25)]) == 2  # restart 2 failed
    assert table[("standard", 1.0)] == [0.7, 0.75, 0.6]
