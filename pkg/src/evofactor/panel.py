"""Panel container, CSV ingestion, and elementary transforms.

A panel is an n x p matrix of observations: rows are time points, columns are
cross-sectional series.  Row i (1-based) carries the normalized time index
t_i = i/n, which is the clock every estimator in this package runs on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["PanelSeries", "load_csv", "save_csv", "write_matrix_csv", "difference", "center"]


@dataclass(frozen=True)
class PanelSeries:
    """Immutable n x p panel with finite entries, n >= 2 and p >= 2."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"panel must be 2-dimensional, got ndim={arr.ndim}")
        n, p = arr.shape
        if n < 2 or p < 2:
            raise ValueError(f"panel needs n >= 2 and p >= 2, got n={n}, p={p}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise ValueError(
                f"non-finite entry at row {bad[0] + 1}, column {bad[1] + 1}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        """Normalized time grid (1/n, 2/n, ..., 1)."""
        return np.arange(1, self.n + 1) / self.n


def load_csv(path, has_header: bool = False) -> PanelSeries:
    """Read a comma-separated numeric panel from ``path``.

    Every row must have the same number of fields and every field must parse
    to a finite float.  Errors name the offending data row (1-based, header
    excluded) and column.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        for raw in reader:
            if has_header and reader.line_num == 1:
                continue
            r = len(rows) + 1
            if not raw:
                raise ValueError(f"empty row at data row {r}")
            if width is None:
                width = len(raw)
            elif len(raw) != width:
                raise ValueError(
                    f"ragged row at data row {r}: expected {width} fields, got {len(raw)}"
                )
            parsed = []
            for c, field in enumerate(raw, start=1):
                try:
                    x = float(field)
                except ValueError:
                    raise ValueError(
                        f"non-numeric field at row {r}, column {c}: {field!r}"
                    ) from None
                if not np.isfinite(x):
                    raise ValueError(f"non-finite field at row {r}, column {c}: {field!r}")
                parsed.append(x)
            rows.append(parsed)
    if not rows:
        raise ValueError(f"no data rows in {path}")
    return PanelSeries(np.asarray(rows, dtype=float))


def save_csv(panel: PanelSeries, path, header=None) -> None:
    """Write a panel as CSV with '\\n' newlines and 17-significant-digit floats.

    17 significant digits round-trip IEEE doubles exactly, so
    ``load_csv(save_csv(X)) == X`` bit for bit.
    """
    with open(path, "w", newline="\n") as fh:
        if header is not None:
            if len(header) != panel.p:
                raise ValueError("header length must match panel width")
            fh.write(",".join(str(h) for h in header) + "\n")
        for row in panel.values:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def write_matrix_csv(matrix, path) -> None:
    """Dump any 2-d array row-major with the package's CSV conventions."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("expected a 2-d array")
    with open(path, "w", newline="\n") as fh:
        for row in matrix:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def difference(panel: PanelSeries) -> PanelSeries:
    """First differences X_i - X_{i-1}; the result has n-1 rows."""
    if panel.n < 3:
        raise ValueError("differencing needs n >= 3 so the result keeps n >= 2")
    return PanelSeries(panel.values[1:] - panel.values[:-1])


def center(panel: PanelSeries) -> PanelSeries:
    """Subtract each column's sample mean."""
    return PanelSeries(panel.values - panel.values.mean(axis=0, keepdims=True))
