import json

import numpy as np
import pytest

from ppreg import (CovariateStack, DataError, PointPattern, RasterGrid,
                   Window, build_scheme)
from ppreg.io import (dump_scheme_csv, load_covariate_dir, load_pattern_csv,
                      read_ascii_grid, save_pattern_csv, write_ascii_grid)


def test_pattern_round_trip_identical(tmp_path):
    win = Window(0, 100, 0, 50)
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(0, 100, 40), rng.uniform(0, 50, 40)])
    pat = PointPattern(pts, win)
    f = tmp_path / "pts.csv"
    save_pattern_csv(pat, f)
    loaded = load_pattern_csv(f, win)
    assert np.array_equal(loaded.points, pat.points)
    # and once more through the file
    f2 = tmp_path / "pts2.csv"
    save_pattern_csv(loaded, f2)
    assert np.array_equal(load_pattern_csv(f2, win).points, pat.points)


def test_pattern_missing_file_names_path(tmp_path):
    with pytest.raises(DataError, match="nope.csv"):
        load_pattern_csv(tmp_path / "nope.csv", Window(0, 1, 0, 1))


def test_pattern_bad_header(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("a,b\n1,2\n")
    with pytest.raises(DataError, match="header"):
        load_pattern_csv(f, Window(0, 10, 0, 10))


def test_ascii_grid_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    g = RasterGrid(6, 4, Window(0, 12, 0, 8), rng.standard_normal((4, 6)), "g")
    f = tmp_path / "g.asc"
    write_ascii_grid(g, f, fmt="%.17g")
    back = read_ascii_grid(f)
    assert back.n_cols == 6 and back.n_rows == 4
    assert back.window == g.window
    assert np.array_equal(back.values, g.values)
    assert back.name == "g"


def test_ascii_grid_non_square_cells(tmp_path):
    # 201 x 101 over [0,1000] x [0,500] has dx != dy
    g = RasterGrid(201, 101, Window(0, 1000, 0, 500),
                   np.arange(201 * 101, dtype=float).reshape(101, 201), "big")
    f = tmp_path / "big.asc"
    write_ascii_grid(g, f, fmt="%.17g")
    text = f.read_text()
    assert "dx " in text and "dy " in text and "cellsize" not in text
    back = read_ascii_grid(f)
    assert back.window == g.window
    assert np.array_equal(back.values, g.values)


def test_ascii_grid_top_row_first(tmp_path):
    f = tmp_path / "t.asc"
    f.write_text("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
                 "3 4\n1 2\n")
    g = read_ascii_grid(f)
    # file top row (3 4) is the north row -> internal row index 1
    assert g.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_nodata_rejected_then_imputed(tmp_path):
    f = tmp_path / "m.asc"
    f.write_text("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n"
                 "NODATA_value -9999\n4 -9999\n")
    with pytest.raises(DataError, match="missing"):
        read_ascii_grid(f)
    g = read_ascii_grid(f, impute_missing=True)
    assert g.values.tolist() == [[4.0, 4.0]]


def test_covariate_dir_sorted_and_csv_sidecar(tmp_path):
    win = Window(0, 4, 0, 2)
    for name, fill in [("b", 2.0), ("a", 1.0)]:
        write_ascii_grid(RasterGrid(4, 2, win, np.full((2, 4), fill), name),
                         tmp_path / f"{name}.asc")
    np.savetxt(tmp_path / "c.csv", np.full((2, 4), 3.0), delimiter=",")
    (tmp_path / "c.json").write_text(json.dumps(
        {"x_min": 0, "x_max": 4, "y_min": 0, "y_max": 2, "name": "c"}))
    stack = load_covariate_dir(tmp_path)
    assert stack.names == ["a", "b", "c"]
    assert stack.evaluate(1.0, 1.0).tolist() == [[1.0, 2.0, 3.0]]


def test_covariate_dir_empty(tmp_path):
    with pytest.raises(DataError, match="no covariate grids"):
        load_covariate_dir(tmp_path)


def test_scheme_dump_columns(tmp_path):
    win = Window(0, 10, 0, 10)
    g = RasterGrid(5, 5, win, np.random.default_rng(0).random((5, 5)), "z")
    stack = CovariateStack((g,), includes_intercept=True)
    pat = PointPattern(np.array([[1.0, 1.0], [9.0, 9.0]]), win)
    scheme = build_scheme(pat, stack, 5, 5)
    f = tmp_path / "scheme.csv"
    dump_scheme_csv(scheme, f)
    lines = f.read_text().strip().splitlines()
    assert lines[0] == "x,y,is_data,weight,response,z1"
    assert len(lines) == 1 + scheme.n_points
    first = lines[1].split(",")
    assert first[2] == "1"  # data point rows come first
