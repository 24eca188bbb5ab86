"""Cross-validated choice of truncation and neighbour count."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .classifiers import LP_ORDER, check_method, knn_vote, prepare, uses_truncation
from .distances import L_KINDS, lp_features, pairwise_lp
from .errors import FdaError, FoldDegenerateError, InvalidConfigurationError
from .fpca import LabeledSample

log = logging.getLogger(__name__)

LEAVE_ONE_OUT = "loo"


@dataclass(frozen=True)
class TuningGrid:
    """Candidate truncations ``1..max_components`` and neighbour counts."""

    max_components: int = 15
    neighbor_values: tuple[int, ...] = tuple(range(1, 10))
    folds: int | str = 10

    def __post_init__(self):
        if self.max_components < 1:
            raise InvalidConfigurationError("max_components must be >= 1")
        vals = tuple(int(k) for k in self.neighbor_values)
        if not vals or min(vals) < 1:
            raise InvalidConfigurationError("neighbor values must be positive")
        if list(vals) != sorted(set(vals)):
            raise InvalidConfigurationError("neighbor values must be strictly increasing")
        object.__setattr__(self, "neighbor_values", vals)
        if self.folds != LEAVE_ONE_OUT and (not isinstance(self.folds, int) or self.folds < 2):
            raise InvalidConfigurationError(f"folds must be an int >= 2 or {LEAVE_ONE_OUT!r}")


@dataclass(frozen=True)
class CVResult:
    """Outcome of :func:`cross_validate`.

    ``table`` has one row ``(truncation, k_neighbors, cv_accuracy)`` per grid
    point, with ``None`` for hyperparameters the method does not use.
    """

    truncation: int | None
    k_neighbors: int | None
    cv_accuracy: float
    table: list = field(repr=False, default_factory=list)
    fold_accuracies: np.ndarray | None = field(repr=False, default=None)

    @property
    def params(self) -> dict:
        return {"truncation": self.truncation, "k_neighbors": self.k_neighbors}


def stratified_folds(labels, n_folds, rng: np.random.Generator) -> np.ndarray:
    """Fold id for every curve.

    Each class is shuffled and dealt round-robin, so every fold receives
    ``floor`` or ``ceil`` of ``n_g / n_folds`` curves of class ``g``, and
    classes of equal size are split identically.
    """
    labels = np.asarray(labels)
    if n_folds == LEAVE_ONE_OUT:
        return np.arange(labels.size)
    fold = np.empty(labels.size, dtype=int)
    for g in np.unique(labels):
        idx = np.flatnonzero(labels == g)
        fold[rng.permutation(idx)] = np.arange(idx.size) % n_folds
    return fold


def _fold_splits(sample: LabeledSample, grid: TuningGrid, rng):
    fold = stratified_folds(sample.labels, grid.folds, rng)
    splits = []
    for f in np.unique(fold):
        test = np.flatnonzero(fold == f)
        train = np.flatnonzero(fold != f)
        if np.any(np.bincount(sample.labels[train], minlength=sample.n_classes + 1)[1:] == 0):
            raise FoldDegenerateError(f"fold {f} leaves a class without training curves")
        splits.append((train, test))
    return splits


def cross_validate(
    train: LabeledSample,
    method: str,
    distance_kind: str | None = None,
    grid: TuningGrid | None = None,
    seed=None,
    priors=None,
) -> CVResult:
    """Pick hyperparameters by stratified cross-validation.

    Models are re-estimated on every fold's training part.  The truncation
    grid is clamped to the smallest retained rank seen across folds.  Ties
    go to the smallest truncation, then the smallest ``k``.

    Parameters
    ----------
    seed : int, sequence of int or numpy Generator
        Drives the fold assignment only.
    """
    check_method(method, distance_kind)
    grid = grid or TuningGrid()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    splits = _fold_splits(train, grid, rng)

    knn = method == "knn"
    tune_k = uses_truncation(method, distance_kind)
    if knn:
        kvals = [k for k in grid.neighbor_values if k <= min(len(tr) for tr, _ in splits)]
        if not kvals:
            raise FoldDegenerateError("no neighbour count fits inside the fold training sizes")
    else:
        kvals = [None]

    full_D = None
    if knn and distance_kind in L_KINDS:
        # L-distances do not depend on the fold, so compute them once
        p = LP_ORDER[distance_kind]
        F = lp_features(train.basis, train.coeffs, p)
        full_D = pairwise_lp(train.basis, F, F, p)

    fold_models = []
    for tr, _ in splits:
        if full_D is not None:
            fold_models.append(None)
            continue
        try:
            fold_models.append(prepare(train.subset(tr), method, distance_kind, priors))
        except FdaError as exc:
            raise FoldDegenerateError(f"cannot fit fold models: {exc}") from exc

    if tune_k:
        cap = min(m.max_truncation for m in fold_models)
        K_max = min(grid.max_components, cap)
        if K_max < grid.max_components:
            log.debug("truncation grid clamped from %d to %d", grid.max_components, K_max)
        if K_max < 1:
            raise FoldDegenerateError("a fold model retained no components")
        Kvals = list(range(1, K_max + 1))
    else:
        Kvals = [None]

    acc = np.zeros((len(splits), len(Kvals), len(kvals)))
    for f, ((tr, te), models) in enumerate(zip(splits, fold_models)):
        truth = train.labels[te]
        if full_D is not None:
            stack = full_D[np.ix_(te, tr)][None]
        else:
            stack = models.criteria(train.coeffs[te], Kvals[-1] if tune_k else None)
        for i in range(len(Kvals)):
            if knn:
                preds = knn_vote(stack[i], train.labels[tr], kvals[-1], train.n_classes)
                acc[f, i] = (preds[:, np.array(kvals) - 1] == truth[:, None]).mean(axis=0)
            else:
                acc[f, i, 0] = np.mean(np.argmin(stack[i], axis=1) + 1 == truth)

    mean_acc = acc.mean(axis=0)
    best = int(np.argmax(mean_acc))  # row-major: smallest K first, then smallest k
    bi, bj = np.unravel_index(best, mean_acc.shape)
    table = [(K, k, float(mean_acc[i, j])) for i, K in enumerate(Kvals) for j, k in enumerate(kvals)]
    return CVResult(
        truncation=Kvals[bi],
        k_neighbors=kvals[bj],
        cv_accuracy=float(mean_acc[bi, bj]),
        table=table,
        fold_accuracies=acc[:, bi, bj],
    )
