"""Functional principal components in basis coordinates.

With Gram matrix ``W`` and coefficient covariance ``S``, the sample
covariance operator acting on coefficient vectors is ``S W``.  We
diagonalize the symmetric similar matrix ``W^{1/2} S W^{1/2}`` and map unit
eigenvectors back with ``W^{-1/2}``, which yields L2-orthonormal
eigenfunctions.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .basis import BasisSystem, FunctionalDatum
from .errors import (
    BasisDegenerateError,
    BasisMismatchError,
    EmptySampleError,
    InsufficientDataError,
    InvalidConfigurationError,
    KOutOfRangeError,
)

Mode = Literal["global", "pooled", "per_class"]
GLOBAL = "global"

EIG_REL_FLOOR = 1e-10
EIG_ABS_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """Curves with class labels ``1..G`` stored as a coefficient matrix."""

    basis: BasisSystem
    coeffs: np.ndarray
    labels: np.ndarray
    n_classes: int | None = None

    def __post_init__(self):
        C = np.array(self.coeffs, dtype=float, ndmin=2)
        y = np.asarray(self.labels, dtype=int).reshape(-1)
        if C.shape[0] != y.size:
            raise InvalidConfigurationError(f"{C.shape[0]} curves but {y.size} labels")
        if C.shape[1] != self.basis.num_basis:
            raise BasisMismatchError(
                f"coefficient width {C.shape[1]} != num_basis {self.basis.num_basis}"
            )
        G = int(self.n_classes) if self.n_classes is not None else int(y.max(initial=0))
        if y.size and (y.min() < 1 or y.max() > G):
            raise InvalidConfigurationError(f"labels must lie in 1..{G}")
        if np.any(np.bincount(y, minlength=G + 1)[1:] == 0):
            raise InvalidConfigurationError("every class needs at least one curve")
        C.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "coeffs", C)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "n_classes", G)

    @classmethod
    def from_data(cls, data: Sequence[FunctionalDatum], labels, n_classes=None):
        if not data:
            raise EmptySampleError("no curves")
        basis = data[0].basis
        for f in data[1:]:
            if not basis.compatible(f.basis):
                raise BasisMismatchError("curves live in different bases")
        return cls(basis, np.vstack([f.coeffs for f in data]), labels, n_classes)

    def __len__(self):
        return self.labels.size

    @property
    def data(self) -> list[FunctionalDatum]:
        return [FunctionalDatum(self.basis, c) for c in self.coeffs]

    @property
    def counts(self) -> np.ndarray:
        """``n_g`` for ``g = 1..G``."""
        return np.bincount(self.labels, minlength=self.n_classes + 1)[1:]

    @property
    def classes(self) -> range:
        return range(1, self.n_classes + 1)

    def class_coeffs(self, g: int) -> np.ndarray:
        return self.coeffs[self.labels == g]

    def class_means(self) -> np.ndarray:
        """``(G, M)`` matrix of class mean coefficients."""
        return np.vstack([self.class_coeffs(g).mean(axis=0) for g in self.classes])

    def subset(self, idx) -> "LabeledSample":
        return LabeledSample(self.basis, self.coeffs[idx], self.labels[idx], self.n_classes)


@functools.lru_cache(maxsize=64)
def gram_roots(basis: BasisSystem) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric ``W^{1/2}`` and ``W^{-1/2}``."""
    e, Q = np.linalg.eigh(basis.gram)
    if e.min() <= 1e-10 * e.max():
        raise BasisDegenerateError(f"Gram matrix not positive definite (min eigenvalue {e.min():.3g})")
    half = (Q * np.sqrt(e)) @ Q.T
    inv_half = (Q / np.sqrt(e)) @ Q.T
    return half, inv_half


@dataclass(frozen=True, eq=False)
class FpcaModel:
    """Mean function(s) and leading eigenpairs of a sample covariance operator.

    ``means`` maps a centering key to mean coefficients: ``"global"`` for a
    global model, class labels otherwise.
    """

    basis: BasisSystem
    mode: str
    means: dict
    eigenfunction_coeffs: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    n_samples: int = 0

    @property
    def retained_count(self) -> int:
        return self.eigenvalues.size

    @functools.cached_property
    def projection(self) -> np.ndarray:
        """``W C``: maps centered coefficients to scores by right-multiplication."""
        return self.basis.gram @ self.eigenfunction_coeffs

    def eigenfunction(self, k: int) -> FunctionalDatum:
        """The ``k``-th eigenfunction (1-based)."""
        self._check_k(k)
        return FunctionalDatum(self.basis, self.eigenfunction_coeffs[:, k - 1])

    def mean(self, center=None) -> FunctionalDatum:
        return FunctionalDatum(self.basis, self._center(center))

    def _center(self, center):
        if center is None:
            if len(self.means) != 1:
                raise InvalidConfigurationError(
                    f"{self.mode} model has {len(self.means)} means; pass a class as center"
                )
            return next(iter(self.means.values()))
        try:
            return self.means[center]
        except KeyError:
            raise InvalidConfigurationError(
                f"center {center!r} not available; choose one of {list(self.means)}"
            ) from None

    def _check_k(self, K):
        if not 1 <= K <= self.retained_count:
            raise KOutOfRangeError(f"K={K} outside 1..{self.retained_count}")

    def score_matrix(self, C, center=None, K=None) -> np.ndarray:
        """Raw scores of the rows of ``C`` (shape ``(n, K)``)."""
        if K is None:
            K = self.retained_count
        else:
            self._check_k(K)
        C = np.asarray(C, dtype=float)
        return (C - self._center(center)) @ self.projection[:, :K]

    def standardized_score_matrix(self, C, center=None, K=None) -> np.ndarray:
        K = self.retained_count if K is None else K
        return self.score_matrix(C, center, K) / np.sqrt(self.eigenvalues[:K])


def sample_mean(sample: Sequence[FunctionalDatum]) -> FunctionalDatum:
    if len(sample) == 0:
        raise EmptySampleError("cannot average an empty sample")
    basis = sample[0].basis
    for f in sample[1:]:
        if not basis.compatible(f.basis):
            raise BasisMismatchError("curves live in different bases")
    return FunctionalDatum(basis, np.mean([f.coeffs for f in sample], axis=0))


def _eigen(basis: BasisSystem, centered: np.ndarray, max_rank: int):
    half, inv_half = gram_roots(basis)
    n = centered.shape[0]
    S = centered.T @ centered / n
    A = half @ S @ half
    vals, vecs = np.linalg.eigh(0.5 * (A + A.T))
    vals, vecs = vals[::-1], vecs[:, ::-1]
    floor = max(EIG_REL_FLOOR * vals[0], EIG_ABS_FLOOR) if vals.size else EIG_ABS_FLOOR
    keep = min(int(np.sum(vals >= floor)), max(max_rank, 0))
    vals, vecs = vals[:keep].copy(), vecs[:, :keep]
    coeffs = inv_half @ vecs
    if keep:
        pivot = np.argmax(np.abs(coeffs), axis=0)
        signs = np.sign(coeffs[pivot, np.arange(keep)])
        coeffs = coeffs * signs
    vals.setflags(write=False)
    coeffs.setflags(write=False)
    return coeffs, vals


def fit_fpca(sample: LabeledSample, mode: Mode = "global"):
    """Estimate the covariance eigenstructure of a labeled sample.

    Parameters
    ----------
    sample : LabeledSample
    mode : {"global", "pooled", "per_class"}
        ``global`` centers every curve at the overall mean; ``pooled`` centers
        each curve at its class mean and shares one operator across classes;
        ``per_class`` estimates one operator per class.  All use divisor
        ``n`` (or ``n_g``).

    Returns
    -------
    FpcaModel, or dict mapping class label to FpcaModel for ``per_class``.
    """
    n, M = sample.coeffs.shape
    counts = sample.counts
    G = sample.n_classes
    if mode == "global":
        if n < 2:
            raise InsufficientDataError(f"global FPCA needs n >= 2, got {n}")
        mu = sample.coeffs.mean(axis=0)
        coeffs, vals = _eigen(sample.basis, sample.coeffs - mu, min(M, n - 1))
        return FpcaModel(sample.basis, "global", {GLOBAL: mu}, coeffs, vals, n)
    if mode == "pooled":
        if n < G + 1:
            raise InsufficientDataError(f"pooled FPCA needs n >= G + 1 = {G + 1}, got {n}")
        means = sample.class_means()
        centered = sample.coeffs - means[sample.labels - 1]
        coeffs, vals = _eigen(sample.basis, centered, min(M, n - G))
        return FpcaModel(
            sample.basis, "pooled", {g: means[g - 1] for g in sample.classes}, coeffs, vals, n
        )
    if mode == "per_class":
        if counts.min() < 2:
            raise InsufficientDataError(f"per-class FPCA needs n_g >= 2, got counts {counts.tolist()}")
        models = {}
        for g in sample.classes:
            Cg = sample.class_coeffs(g)
            mu = Cg.mean(axis=0)
            coeffs, vals = _eigen(sample.basis, Cg - mu, min(M, Cg.shape[0] - 1))
            models[g] = FpcaModel(sample.basis, "per_class", {g: mu}, coeffs, vals, Cg.shape[0])
        return models
    raise InvalidConfigurationError(f"unknown FPCA mode {mode!r}")


def scores(model: FpcaModel, f: FunctionalDatum, center=None, K: int | None = None) -> np.ndarray:
    """Scores ``<f - mean_center, psi_k>`` for ``k = 1..K``."""
    if not model.basis.compatible(f.basis):
        raise BasisMismatchError("curve and model live in different bases")
    return model.score_matrix(f.coeffs[None, :], center, K)[0]


def standardized_scores(model: FpcaModel, f: FunctionalDatum, center=None, K: int | None = None) -> np.ndarray:
    """Scores divided by the square roots of their eigenvalues."""
    if not model.basis.compatible(f.basis):
        raise BasisMismatchError("curve and model live in different bases")
    return model.standardized_score_matrix(f.coeffs[None, :], center, K)[0]
