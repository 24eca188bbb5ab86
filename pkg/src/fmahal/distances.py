"""Distances and semi-distances between curves.

Single-pair functions (:func:`d_lp`, :func:`d_fm`, :func:`d_fpc`,
:func:`d_dh`) follow the textbook definitions.  The ``*_stack`` helpers
compute the same quantities for whole batches and for every truncation
``1..K`` at once; the classifiers and cross-validation use those.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.spatial.distance import cdist

from .basis import BasisSystem, FunctionalDatum
from .errors import (
    BasisMismatchError,
    InvalidConfigurationError,
    KOutOfRangeError,
    TwoClassOnlyError,
)
from .fpca import FpcaModel, gram_roots

L_KINDS = ("L1", "L2", "Linf")
COMMON_KINDS = ("FPC_C", "FM_C", "DH")
PER_CLASS_KINDS = ("FPC_D", "FM_D")
KINDS = L_KINDS + ("FPC_C", "FPC_D", "FM_C", "FM_D", "DH")
STANDARDIZED = ("FM_C", "FM_D", "DH")

# uniform grid for L1 / L-infinity
LP_GRID_SIZE = 2001


@dataclass(frozen=True, eq=False)
class DistanceSpec:
    """Which distance to use, its truncation, and the fitted model(s).

    ``model`` is a pooled (or global) :class:`FpcaModel` for ``FPC_C``,
    ``FM_C`` and ``DH``, a dict ``{class: FpcaModel}`` for ``FPC_D`` and
    ``FM_D``, and ``None`` for the L-kinds.
    """

    kind: str
    truncation: int = 1
    model: Any = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConfigurationError(f"unknown distance kind {self.kind!r}")
        if self.kind in L_KINDS:
            return
        if self.kind in PER_CLASS_KINDS:
            if not isinstance(self.model, dict) or not self.model:
                raise InvalidConfigurationError(f"{self.kind} needs one model per class")
            models = list(self.model.values())
        else:
            if not isinstance(self.model, FpcaModel) or self.model.mode == "per_class":
                raise InvalidConfigurationError(f"{self.kind} needs a pooled or global model")
            models = [self.model]
        cap = min(m.retained_count for m in models)
        if not 1 <= self.truncation <= cap:
            raise KOutOfRangeError(f"truncation {self.truncation} outside 1..{cap}")

    def class_model(self, g) -> FpcaModel:
        if self.kind in PER_CLASS_KINDS:
            return self.model[g]
        return self.model


def _check_pair(f: FunctionalDatum, g: FunctionalDatum):
    if not f.basis.compatible(g.basis):
        raise BasisMismatchError("curves live in different bases")


@functools.lru_cache(maxsize=32)
def lp_grid(basis: BasisSystem) -> tuple[np.ndarray, np.ndarray]:
    """Evaluation grid and composite-trapezoid weights."""
    a, b = basis.domain
    t = np.linspace(a, b, LP_GRID_SIZE)
    w = np.full(LP_GRID_SIZE, (b - a) / (LP_GRID_SIZE - 1))
    w[[0, -1]] *= 0.5
    return t, w


@functools.lru_cache(maxsize=32)
def _lp_design(basis: BasisSystem) -> np.ndarray:
    B = basis.basis_matrix(lp_grid(basis)[0])
    B.setflags(write=False)
    return B


def d_lp(f: FunctionalDatum, g: FunctionalDatum, p=2) -> float:
    """L1, L2 or L-infinity distance (``p`` in ``{1, 2, inf}``)."""
    _check_pair(f, g)
    diff = f.coeffs - g.coeffs
    if p == 2:
        return float(np.sqrt(max(diff @ f.basis.gram @ diff, 0.0)))
    _, w = lp_grid(f.basis)
    vals = np.abs(_lp_design(f.basis) @ diff)
    if p == 1:
        return float(vals @ w)
    if p == np.inf:
        return float(vals.max())
    raise InvalidConfigurationError(f"p must be 1, 2 or inf, got {p!r}")


def _score_diff(spec: DistanceSpec, f, g, cls, standardize: bool) -> np.ndarray:
    _check_pair(f, g)
    model = spec.class_model(cls)
    K = spec.truncation
    both = np.vstack([f.coeffs, g.coeffs])
    if standardize:
        s = model.standardized_score_matrix(both, cls if model.mode != "global" else None, K)
    else:
        s = model.score_matrix(both, cls if model.mode != "global" else None, K)
    return s[0] - s[1]


def d_fm(spec: DistanceSpec, f: FunctionalDatum, g: FunctionalDatum, cls=1) -> float:
    """Functional Mahalanobis semi-distance with both curves centered at class ``cls``."""
    if spec.kind not in ("FM_C", "FM_D"):
        raise InvalidConfigurationError(f"d_fm needs an FM kind, got {spec.kind}")
    return float(np.linalg.norm(_score_diff(spec, f, g, cls, True)))


def d_fpc(spec: DistanceSpec, f: FunctionalDatum, g: FunctionalDatum, cls=1) -> float:
    """Principal-component semi-distance (raw, unstandardized scores)."""
    if spec.kind not in ("FPC_C", "FPC_D"):
        raise InvalidConfigurationError(f"d_fpc needs an FPC kind, got {spec.kind}")
    return float(np.linalg.norm(_score_diff(spec, f, g, cls, False)))


def d_dh(spec: DistanceSpec, f: FunctionalDatum, cls: int) -> float:
    """Projected centroid distance from ``f`` to the mean of class ``cls``."""
    if spec.kind != "DH":
        raise InvalidConfigurationError(f"d_dh needs kind DH, got {spec.kind}")
    model = spec.model
    if set(model.means) != {1, 2}:
        raise TwoClassOnlyError("the DH distance is defined for two classes only")
    return float(dh_stack(model, f.coeffs[None, :], spec.truncation)[spec.truncation - 1, 0, cls - 1])


def distance(spec: DistanceSpec, f: FunctionalDatum, g: FunctionalDatum, cls=1) -> float:
    """Dispatch on ``spec.kind`` (not DH, which is a curve-to-centroid distance)."""
    if spec.kind == "L1":
        return d_lp(f, g, 1)
    if spec.kind == "L2":
        return d_lp(f, g, 2)
    if spec.kind == "Linf":
        return d_lp(f, g, np.inf)
    if spec.kind in ("FM_C", "FM_D"):
        return d_fm(spec, f, g, cls)
    if spec.kind in ("FPC_C", "FPC_D"):
        return d_fpc(spec, f, g, cls)
    raise InvalidConfigurationError("DH is only defined between a curve and a class mean")


# --- batched versions -------------------------------------------------------


def lp_features(basis: BasisSystem, C, p) -> np.ndarray:
    """Coordinates in which the Lp distance is computed row-to-row.

    For p=2 these are ``C W^{1/2}``, in which Euclidean distance is the L2
    distance; otherwise values on the quadrature grid.
    """
    C = np.asarray(C, dtype=float)
    if p == 2:
        half, _ = gram_roots(basis)
        return C @ half
    return C @ _lp_design(basis).T


def pairwise_lp(basis: BasisSystem, F0, F1, p, chunk: int = 64) -> np.ndarray:
    """Distances between rows of feature matrices from :func:`lp_features`."""
    if p == 2:
        return cdist(F0, F1)
    _, w = lp_grid(basis)
    out = np.empty((F0.shape[0], F1.shape[0]))
    for i in range(0, F0.shape[0], chunk):
        diff = np.abs(F0[i:i + chunk, None, :] - F1[None, :, :])
        out[i:i + chunk] = diff @ w if p == 1 else diff.max(axis=2)
    return out


def _cumulative_norm(A0, A1) -> np.ndarray:
    """``(K, n0, n1)`` array of ``||A0_i[:k] - A1_j[:k]||`` for every k."""
    d2 = np.cumsum((A0[:, None, :] - A1[None, :, :]) ** 2, axis=2)
    return np.sqrt(np.moveaxis(d2, 2, 0))


def score_stack(model: FpcaModel, C0, C1, K: int, standardize: bool) -> np.ndarray:
    """Common-operator FPC/FM distances between rows of ``C0`` and ``C1``.

    Class centering cancels in a score difference, so no center is needed.
    """
    if K > model.retained_count:
        raise KOutOfRangeError(f"K={K} exceeds retained count {model.retained_count}")
    P = model.projection[:, :K]
    A0, A1 = np.asarray(C0) @ P, np.asarray(C1) @ P
    if standardize:
        s = np.sqrt(model.eigenvalues[:K])
        A0, A1 = A0 / s, A1 / s
    return _cumulative_norm(A0, A1)


def per_class_score_stack(models: dict, C0, C1, labels1, K: int, standardize: bool) -> np.ndarray:
    """Like :func:`score_stack`, but column ``j`` uses the model of class ``labels1[j]``."""
    labels1 = np.asarray(labels1)
    out = np.empty((K, np.shape(C0)[0], labels1.size))
    for g, model in models.items():
        cols = labels1 == g
        if cols.any():
            out[:, :, cols] = score_stack(model, C0, np.asarray(C1)[cols], K, standardize)
    return out


def dh_stack(model: FpcaModel, C0, K: int) -> np.ndarray:
    """``(K, n0, 2)`` DH distances to the two class means, every truncation."""
    if set(model.means) != {1, 2}:
        raise TwoClassOnlyError("the DH distance is defined for two classes only")
    if K > model.retained_count:
        raise KOutOfRangeError(f"K={K} exceeds retained count {model.retained_count}")
    P = model.projection[:, :K]
    s = np.sqrt(model.eigenvalues[:K])
    delta = (model.means[2] - model.means[1]) @ P / s
    out = np.empty((K, np.shape(C0)[0], 2))
    for g in (1, 2):
        omega = (np.asarray(C0) - model.means[g]) @ P / s
        out[:, :, g - 1] = np.abs(np.cumsum(omega * delta, axis=1)).T
    return out
