"""File formats: point-pattern CSV, ESRI-style ASCII grids, covariate
directories, and quadrature-scheme dumps.

Point patterns travel as CSV with header ``x,y``.  Rasters use the ESRI
ASCII grid layout (``ncols``/``nrows``/``xllcorner``/``yllcorner``/
``cellsize``/optional ``NODATA_value`` header, then ``nrows`` lines of
values with the TOP row first).  Non-square cells are written with ``dx``
and ``dy`` header lines instead of ``cellsize`` (the GDAL extension);
both forms are accepted on read.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .domain import CovariateStack, PointPattern, RasterGrid, Window
from .errors import DataError

__all__ = [
    "load_pattern_csv",
    "save_pattern_csv",
    "read_ascii_grid",
    "write_ascii_grid",
    "load_covariate_dir",
    "dump_scheme_csv",
]

_HEADER_KEYS = {"ncols", "nrows", "xllcorner", "yllcorner",
                "cellsize", "dx", "dy", "nodata_value"}


def load_pattern_csv(path, window: Window) -> PointPattern:
    path = Path(path)
    if not path.exists():
        raise DataError(f"point file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["x", "y"]:
            raise DataError(f"{path}: expected CSV header 'x,y'")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: malformed point row {row!r}") from exc
    pts = np.array(rows, dtype=float).reshape(-1, 2)
    return PointPattern(pts, window)


def save_pattern_csv(pattern: PointPattern, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in pattern.points:
            writer.writerow([repr(float(x)), repr(float(y))])


def read_ascii_grid(path, name: str | None = None,
                    impute_missing: bool = False) -> RasterGrid:
    """Parse an ESRI ASCII grid.

    Cells marked with ``NODATA_value`` become the grid mean when
    ``impute_missing`` is set and are rejected otherwise.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"grid file not found: {path}")
    header: dict[str, float] = {}
    data_lines: list[str] = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            key = parts[0].lower()
            if not data_lines and key in _HEADER_KEYS and len(parts) == 2:
                header[key] = float(parts[1])
            else:
                data_lines.append(line)
    for req in ("ncols", "nrows", "xllcorner", "yllcorner"):
        if req not in header:
            raise DataError(f"{path}: missing ASCII grid header '{req}'")
    n_cols = int(header["ncols"])
    n_rows = int(header["nrows"])
    if "cellsize" in header:
        dx = dy = header["cellsize"]
    elif "dx" in header and "dy" in header:
        dx, dy = header["dx"], header["dy"]
    else:
        raise DataError(f"{path}: need either 'cellsize' or 'dx'+'dy'")
    values = np.fromstring(" ".join(data_lines), sep=" ")
    if values.size != n_cols * n_rows:
        raise DataError(
            f"{path}: expected {n_cols * n_rows} values, found {values.size}"
        )
    # file stores the top row first; flip to row 0 = south
    values = values.reshape(n_rows, n_cols)[::-1].copy()
    if "nodata_value" in header:
        values[values == header["nodata_value"]] = np.nan
    if np.any(np.isnan(values)):
        if not impute_missing:
            raise DataError(
                f"{path}: grid contains missing cells; pass impute_missing=True "
                "to replace them with the grid mean"
            )
        values[np.isnan(values)] = np.nanmean(values)
    # snap reconstructed extents so `xll + n*dx` round-trips to the intended
    # window (dx is stored with finitely many digits)
    def snap(v: float) -> float:
        return float("%.12g" % v)

    window = Window(
        header["xllcorner"], snap(header["xllcorner"] + n_cols * dx),
        header["yllcorner"], snap(header["yllcorner"] + n_rows * dy),
    )
    return RasterGrid(n_cols, n_rows, window, values,
                      name=name if name is not None else path.stem)


def write_ascii_grid(grid: RasterGrid, path, fmt: str = "%.10g") -> None:
    dx, dy = grid.cell_dx, grid.cell_dy
    with open(path, "w") as fh:
        fh.write(f"ncols {grid.n_cols}\n")
        fh.write(f"nrows {grid.n_rows}\n")
        fh.write(f"xllcorner {grid.window.x_min:.17g}\n")
        fh.write(f"yllcorner {grid.window.y_min:.17g}\n")
        if math.isclose(dx, dy, rel_tol=1e-12):
            fh.write(f"cellsize {dx:.17g}\n")
        else:
            fh.write(f"dx {dx:.17g}\n")
            fh.write(f"dy {dy:.17g}\n")
        for row in grid.values[::-1]:
            fh.write(" ".join(fmt % v for v in row) + "\n")


def _read_csv_matrix(path, meta_path, name, impute_missing):
    """CSV matrix (top row first) with a JSON sidecar giving the window."""
    with open(meta_path) as fh:
        meta = json.load(fh)
    try:
        window = Window(*[float(meta[k]) for k in ("x_min", "x_max", "y_min", "y_max")])
    except KeyError as exc:
        raise DataError(f"{meta_path}: sidecar must define x_min/x_max/y_min/y_max") from exc
    values = np.loadtxt(path, delimiter=",", ndmin=2)[::-1].copy()
    if np.any(np.isnan(values)):
        if not impute_missing:
            raise DataError(f"{path}: matrix contains missing cells")
        values[np.isnan(values)] = np.nanmean(values)
    n_rows, n_cols = values.shape
    return RasterGrid(n_cols, n_rows, window, values,
                      name=name or meta.get("name", Path(path).stem))


def load_covariate_dir(directory, impute_missing: bool = False) -> CovariateStack:
    """Load every ``*.asc`` grid (or ``*.csv`` + ``.json`` sidecar pair) in a
    directory, sorted by file name, into one covariate stack."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"covariate directory not found: {directory}")
    grids = []
    for path in sorted(directory.glob("*.asc")):
        grids.append(read_ascii_grid(path, impute_missing=impute_missing))
    for path in sorted(directory.glob("*.csv")):
        meta = path.with_suffix(".json")
        if not meta.exists():
            raise DataError(f"{path}: CSV covariate needs a {meta.name} sidecar")
        grids.append(_read_csv_matrix(path, meta, None, impute_missing))
    if not grids:
        raise DataError(f"no covariate grids (*.asc or *.csv) found in {directory}")
    return CovariateStack(tuple(grids))


def dump_scheme_csv(scheme, path) -> None:
    """Write a quadrature scheme for external cross-validation.

    Columns: ``x,y,is_data,weight,response,z1..zp`` (the response column is
    1/weight for data points and 0 for dummies; the intercept column, when
    present, is omitted since it is identically 1).
    """
    z = scheme.Z[:, 1:] if scheme.has_intercept else scheme.Z
    names = [f"z{k + 1}" for k in range(z.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "is_data", "weight", "response"] + names)
        for i in range(scheme.n_points):
            writer.writerow(
                [repr(float(scheme.points[i, 0])), repr(float(scheme.points[i, 1])),
                 int(scheme.is_data[i]), repr(float(scheme.weights[i])),
                 repr(float(scheme.y[i]))]
                + [repr(float(v)) for v in z[i]]
            )
