"""Shared machinery for repeated train/test experiments.

A *method label* is ``"knn:FM_C"``, ``"centroid:DH"``, ``"flbcr"`` and so
on.  :func:`evaluate_split` tunes and scores a list of labels on one
train/test split, sharing the fold assignment between all of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classifiers import TrainedClassifier, check_method, prepare, uses_truncation
from .distances import KINDS
from .fpca import LabeledSample
from .tuning import TuningGrid, cross_validate

STANDARD_METHODS = (
    *(f"knn:{k}" for k in KINDS if k != "DH"),
    *(f"centroid:{k}" for k in KINDS),
    "flbcr",
    "fqbcr",
    "lbcr_coef",
    "qbcr_coef",
)


def parse_method(label: str) -> tuple[str, str | None]:
    method, _, kind = label.partition(":")
    method = method.strip().lower()
    kind = kind.strip() or None
    check_method(method, kind)
    return method, kind


@dataclass
class SplitOutcome:
    accuracy: float
    truncation: int | None
    k_neighbors: int | None


def evaluate_split(
    train: LabeledSample,
    test: LabeledSample,
    methods,
    grid: TuningGrid,
    cv_seed,
) -> dict[str, SplitOutcome]:
    """Tune every method on ``train`` and report accuracy on ``test``."""
    out = {}
    for label in methods:
        method, kind = parse_method(label)
        needs_cv = method == "knn" or uses_truncation(method, kind)
        if needs_cv:
            cv = cross_validate(train, method, kind, grid, seed=np.random.default_rng(cv_seed))
            K, k = cv.truncation, cv.k_neighbors
        else:
            K = k = None
        clf = TrainedClassifier(prepare(train, method, kind), K, k)
        pred = clf.predict(test.coeffs)
        out[label] = SplitOutcome(float(np.mean(pred == test.labels)), K, k)
    return out


def _mean_sd(values) -> tuple[float, float]:
    vals = [float(v) for v in values]
    if not vals:
        return math.nan, math.nan
    mean = math.fsum(vals) / len(vals)
    if len(vals) < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
    return mean, math.sqrt(var)


@dataclass
class ReplicationRecord:
    replication: int
    attempts: int
    outcomes: dict[str, SplitOutcome] | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.outcomes is not None


@dataclass
class SummaryRow:
    method: str
    n_ok: int
    acc_mean: float
    acc_sd: float
    trunc_mean: float
    trunc_sd: float
    k_mean: float
    k_sd: float


@dataclass
class ExperimentResult:
    """Per-replication records plus summaries in method order."""

    methods: tuple[str, ...]
    records: list[ReplicationRecord] = field(default_factory=list)

    @property
    def failures(self) -> list[ReplicationRecord]:
        return [r for r in self.records if not r.ok]

    def accuracies(self, method: str) -> np.ndarray:
        return np.array([r.outcomes[method].accuracy for r in self.records if r.ok])

    def truncations(self, method: str) -> list:
        return [r.outcomes[method].truncation for r in self.records if r.ok]

    def mean_accuracy(self, method: str) -> float:
        return _mean_sd(self.accuracies(method))[0]

    def summary(self) -> list[SummaryRow]:
        rows = []
        for m in self.methods:
            ok = [r.outcomes[m] for r in self.records if r.ok]
            am, asd = _mean_sd(o.accuracy for o in ok)
            Ks = [o.truncation for o in ok if o.truncation is not None]
            ks = [o.k_neighbors for o in ok if o.k_neighbors is not None]
            tm, tsd = _mean_sd(Ks)
            km, ksd = _mean_sd(ks)
            rows.append(SummaryRow(m, len(ok), am, asd, tm, tsd, km, ksd))
        return rows
