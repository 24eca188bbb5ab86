"""Curve tables on disk, resampling protocols and the Tecator / Phoneme data.

File layouts
------------
``grid-header`` CSV (the native format, written by :func:`write_curves_csv`)::

    label,850.0,852.0,...,1050.0
    1,2.617,2.618,...,3.0
    2,2.834,2.838,...,3.3

Header cells other than the label column must parse as floats; they form
the shared observation grid.  The label column is optional.

``tecator``: the raw StatLib file.  Every line made only of numbers is data;
the tokens form records of 125 values (100 absorbances at 850-1050 nm, 22
principal components, moisture, fat, protein).  Text lines are ignored.

``phoneme``: whitespace-separated rows of 150 log-periodogram values
followed by an integer class code (the npfda layout).

Neither real dataset ships with the package.  Put the files in the directory
named by ``FMAHAL_DATA_DIR`` (default ``./data``) or pass explicit paths.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .basis import BasisSystem, build_bspline_basis, derivative_basis, derivative_coeffs, smooth_curves
from .errors import DataFormatError, DataParseError, FdaError, InvalidConfigurationError, InvalidSplitError
from .fpca import LabeledSample
from .harness import STANDARD_METHODS, ExperimentResult, ReplicationRecord, evaluate_split, parse_method
from .tuning import TuningGrid

DATA_DIR_ENV = "FMAHAL_DATA_DIR"

TECATOR_RECORD = 125
TECATOR_CHANNELS = 100
TECATOR_FAT_INDEX = 123
TECATOR_FAT_THRESHOLD = 20.0
HIGH_FAT, LOW_FAT = 1, 2

PHONEME_LENGTH = 150
# npfda class codes for "aa" and "ao"
PHONEME_CODES = (4, 5)


@dataclass(frozen=True, eq=False)
class CurveTable:
    """Curves observed on one shared grid."""

    grid: np.ndarray
    values: np.ndarray
    labels: np.ndarray | None = None
    source: str = ""
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=float, ndmin=2)
        if np.any(np.diff(grid) <= 0):
            raise DataFormatError("grid must be strictly increasing")
        if values.shape[1] != grid.size:
            raise DataFormatError(f"rows have {values.shape[1]} values but the grid has {grid.size}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.size != values.shape[0]:
                raise DataFormatError(f"{labels.size} labels for {values.shape[0]} curves")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.values.shape[0]

    @property
    def unit_grid(self) -> np.ndarray:
        """The grid mapped affinely onto [0, 1]."""
        g = self.grid
        return (g - g[0]) / (g[-1] - g[0])

    def class_counts(self) -> dict:
        labs, counts = np.unique(self.labels, return_counts=True)
        return {int(k): int(c) for k, c in zip(labs, counts)}


def _float(cell: str, row: int, col: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise DataParseError(f"non-numeric cell {cell!r} at row {row}, column {col}") from None
    if not np.isfinite(v):
        raise DataParseError(f"non-finite cell {cell!r} at row {row}, column {col}")
    return v


def _read_grid_header(path: Path, label_column: str | None) -> CurveTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    label_idx = None
    grid, grid_cols = [], []
    for j, h in enumerate(header):
        if label_column is not None and h == label_column:
            label_idx = j
            continue
        grid.append(_float(h, 1, j + 1))
        grid_cols.append(j)
    values, labels = [], []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataFormatError(f"{path}: row {i} has {len(row)} cells, header has {len(header)}")
        values.append([_float(row[j], i, j + 1) for j in grid_cols])
        if label_idx is not None:
            labels.append(_float(row[label_idx], i, label_idx + 1))
    labels = np.asarray(labels) if label_idx is not None else None
    if labels is not None and np.all(labels == np.round(labels)):
        labels = labels.astype(int)
    return CurveTable(np.asarray(grid), np.asarray(values).reshape(-1, len(grid)), labels, str(path))


def tecator_labels(fat) -> np.ndarray:
    """High fat (> 20 %) is class 1, everything else class 2."""
    return np.where(np.asarray(fat, dtype=float) > TECATOR_FAT_THRESHOLD, HIGH_FAT, LOW_FAT)


def _read_tecator(path: Path) -> CurveTable:
    tokens = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            try:
                nums = [float(p) for p in parts]
            except ValueError:
                continue  # descriptive text
            tokens.extend(nums)
    if not tokens or len(tokens) % TECATOR_RECORD:
        raise DataFormatError(
            f"{path}: {len(tokens)} numbers is not a whole number of {TECATOR_RECORD}-value records"
        )
    rec = np.asarray(tokens).reshape(-1, TECATOR_RECORD)
    grid = np.linspace(850.0, 1050.0, TECATOR_CHANNELS)
    fat = rec[:, TECATOR_FAT_INDEX]
    return CurveTable(
        grid,
        rec[:, :TECATOR_CHANNELS],
        tecator_labels(fat),
        str(path),
        {"fat": fat, "moisture": rec[:, 122], "protein": rec[:, 124]},
    )


def _read_phoneme(path: Path, codes=PHONEME_CODES) -> CurveTable:
    values, labels = [], []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            parts = line.replace(",", " ").split()
            if not parts:
                continue
            if len(parts) != PHONEME_LENGTH + 1:
                raise DataFormatError(f"{path}: row {i} has {len(parts)} fields, expected {PHONEME_LENGTH + 1}")
            row = [_float(p, i, j + 1) for j, p in enumerate(parts)]
            code = int(row[-1])
            if code in codes:
                values.append(row[:-1])
                labels.append(codes.index(code) + 1)
    if not values:
        raise DataFormatError(f"{path}: no rows with class codes {codes}")
    grid = np.arange(1.0, PHONEME_LENGTH + 1.0)
    return CurveTable(grid, np.asarray(values), np.asarray(labels), str(path))


def load_curves_csv(path, layout: str = "grid-header", label_column: str | None = "label", **kw) -> CurveTable:
    """Read a curve table.

    Parameters
    ----------
    layout : {"grid-header", "tecator", "phoneme"}
    label_column : str or None
        Header name of the label column (``grid-header`` only).
    """
    path = Path(path)
    if layout == "grid-header":
        return _read_grid_header(path, label_column)
    if layout == "tecator":
        return _read_tecator(path)
    if layout == "phoneme":
        return _read_phoneme(path, **kw)
    raise InvalidConfigurationError(f"unknown layout {layout!r}")


def write_curves_csv(table: CurveTable, path, label_column: str = "label") -> None:
    """Write the ``grid-header`` layout; floats are written with ``repr`` so they round-trip."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = [repr(float(g)) for g in table.grid]
        w.writerow(([label_column] if table.labels is not None else []) + head)
        for i, row in enumerate(table.values):
            cells = [repr(float(v)) for v in row]
            if table.labels is not None:
                lab = table.labels[i]
                cells.insert(0, str(int(lab)) if float(lab).is_integer() else repr(float(lab)))
            w.writerow(cells)


def data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "data"))


def find_dataset(name: str) -> tuple[Path, str] | None:
    """Locate ``tecator`` or ``phoneme`` under :func:`data_dir`; ``None`` if absent."""
    candidates = {
        "tecator": [("tecator.csv", "grid-header"), ("tecator", "tecator"), ("tecator.txt", "tecator")],
        "phoneme": [("phoneme.csv", "grid-header"), ("npfda-phoneme.dat", "phoneme"), ("phoneme.dat", "phoneme")],
    }[name]
    for fname, layout in candidates:
        p = data_dir() / fname
        if p.is_file():
            return p, layout
    return None


def load_dataset(name: str) -> CurveTable:
    found = find_dataset(name)
    if found is None:
        raise FileNotFoundError(f"{name} data not found in {data_dir()} (set {DATA_DIR_ENV})")
    return load_curves_csv(*found)


# --- splitting --------------------------------------------------------------


def split_once(labels, train_counts, seed, replication: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Class-stratified draw without replacement; the rest is the test set.

    ``train_counts[g - 1]`` curves of class ``g`` go to training.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(replication)]))
    train = []
    for g, n0 in enumerate(train_counts, start=1):
        idx = np.flatnonzero(labels == g)
        if n0 > idx.size or n0 < 0:
            raise InvalidSplitError(f"cannot draw {n0} training curves from {idx.size} of class {g}")
        train.append(rng.choice(idx, size=n0, replace=False))
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(labels.size), train)
    return train, test


def resample_split(table: CurveTable, train_counts, replications: int, seed) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(train_idx, test_idx)`` for each replication."""
    for g, n0 in enumerate(train_counts, start=1):
        have = int(np.sum(table.labels == g))
        if n0 > have:
            raise InvalidSplitError(f"cannot draw {n0} training curves from {have} of class {g}")
    for r in range(replications):
        yield split_once(table.labels, train_counts, seed, r)


# --- smoothing --------------------------------------------------------------


def smooth_table(table: CurveTable, basis: BasisSystem) -> np.ndarray:
    """Coefficients of every row, fitted on the [0, 1]-normalized grid."""
    return smooth_curves(basis, table.unit_grid, table.values)


def second_derivative_transform(table: CurveTable, basis: BasisSystem) -> tuple[BasisSystem, np.ndarray]:
    """Smooth every row in ``basis`` and differentiate twice.

    Returns the derivative basis and the ``(n, M - 2)`` coefficient matrix.
    Derivatives are with respect to the normalized grid variable.
    """
    dbasis = derivative_basis(basis, 2)
    return dbasis, derivative_coeffs(basis, smooth_table(table, basis), 2)


@dataclass(frozen=True)
class RealDataProtocol:
    name: str
    train_counts: tuple[int, ...]
    num_basis: int = 20
    order: int = 6
    derivative: int = 0

    def represent(self, table: CurveTable) -> LabeledSample:
        basis = build_bspline_basis((0.0, 1.0), self.order, self.num_basis)
        if self.derivative:
            basis, C = derivative_basis(basis, self.derivative), derivative_coeffs(
                basis, smooth_table(table, basis), self.derivative
            )
        else:
            C = smooth_table(table, basis)
        return LabeledSample(basis, C, np.asarray(table.labels, dtype=int), len(self.train_counts))


TECATOR = RealDataProtocol("tecator", (58, 104), num_basis=20)
TECATOR_D2 = RealDataProtocol("tecator-d2", (58, 104), num_basis=40, derivative=2)
PHONEME = RealDataProtocol("phoneme", (300, 300), num_basis=40)
PROTOCOLS = {p.name: p for p in (TECATOR, TECATOR_D2, PHONEME)}


def run_resampling(
    table: CurveTable,
    protocol: RealDataProtocol,
    methods=STANDARD_METHODS,
    replications: int = 100,
    seed: int = 0,
    grid: TuningGrid | None = None,
) -> ExperimentResult:
    """Repeated random train/test evaluation of ``methods`` on a real dataset."""
    methods = tuple(methods)
    for m in methods:
        parse_method(m)
    grid = grid or TuningGrid()
    sample = protocol.represent(table)
    records = []
    for r, (tr, te) in enumerate(resample_split(table, protocol.train_counts, replications, seed)):
        cv_seed = np.random.SeedSequence([int(seed), int(r), 1])
        try:
            out = evaluate_split(sample.subset(tr), sample.subset(te), methods, grid, cv_seed)
            records.append(ReplicationRecord(r, 1, out))
        except FdaError as exc:
            records.append(ReplicationRecord(r, 1, None, f"{type(exc).__name__}: {exc}"))
    return ExperimentResult(methods, records)
