"""kNN, centroid and Bayes classification rules for functional data.

Every rule is reduced to a *criterion stack*: an array of shape
``(n_truncations, n_queries, n_candidates)``.  For kNN the candidates are the
training curves and the criterion is a distance; for the other rules the
candidates are the classes and the rule picks the smallest criterion.
Computing all truncations at once is what keeps cross-validation cheap.

Ties: centroid and Bayes rules resolve to the lowest class index.  kNN drops
to ``k - 1`` neighbours on a vote tie, and at ``k = 1`` equidistant
neighbours resolve to the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import FunctionalDatum
from .distances import (
    L_KINDS,
    PER_CLASS_KINDS,
    DistanceSpec,
    KINDS,
    dh_stack,
    lp_features,
    pairwise_lp,
    per_class_score_stack,
    score_stack,
)
from .errors import (
    BasisMismatchError,
    DegenerateCovarianceError,
    InvalidConfigurationError,
    InvalidKError,
    InvalidPriorsError,
    KOutOfRangeError,
    TwoClassOnlyError,
)
from .fpca import FpcaModel, LabeledSample, fit_fpca

METHODS = ("knn", "centroid", "flbcr", "fqbcr", "lbcr_coef", "qbcr_coef")
LP_ORDER = {"L1": 1, "L2": 2, "Linf": np.inf}

# ridge added to coefficient covariances, relative to trace / M
COEF_RIDGE = 1e-8


def uses_truncation(method: str, kind: str | None = None) -> bool:
    if method in ("flbcr", "fqbcr"):
        return True
    if method in ("knn", "centroid"):
        return kind not in L_KINDS
    return False


def check_method(method: str, kind: str | None) -> None:
    if method not in METHODS:
        raise InvalidConfigurationError(f"unknown method {method!r}; choose from {METHODS}")
    if method in ("knn", "centroid"):
        if kind not in KINDS:
            raise InvalidConfigurationError(f"{method} needs a distance kind from {KINDS}, got {kind!r}")
        if method == "knn" and kind == "DH":
            raise InvalidConfigurationError("DH is a centroid distance; it cannot drive kNN")
    elif kind is not None:
        raise InvalidConfigurationError(f"{method} takes no distance kind")


def default_priors(sample: LabeledSample) -> np.ndarray:
    return sample.counts / len(sample)


def _validate_priors(priors, G) -> np.ndarray:
    p = np.asarray(priors, dtype=float).reshape(-1)
    if p.size != G:
        raise InvalidPriorsError(f"expected {G} priors, got {p.size}")
    if np.any(p <= 0):
        raise InvalidPriorsError("priors must be strictly positive")
    if abs(p.sum() - 1.0) > 1e-12:
        raise InvalidPriorsError(f"priors must sum to 1, got {p.sum()!r}")
    return p


def _gaussian_params(sample: LabeledSample, pooled: bool):
    """Class means, Cholesky factors and log-determinants in coefficient space."""
    means = sample.class_means()
    M = means.shape[1]
    resid = sample.coeffs - means[sample.labels - 1]
    if pooled:
        covs = [resid.T @ resid / len(sample)]
    else:
        covs = []
        for g in sample.classes:
            R = resid[sample.labels == g]
            covs.append(R.T @ R / R.shape[0])
    factors, logdets = [], []
    for C in covs:
        ridge = COEF_RIDGE * np.trace(C) / M
        if not ridge > 0:
            raise DegenerateCovarianceError("coefficient covariance is zero")
        try:
            cf = cho_factor(C + ridge * np.eye(M), lower=True)
        except np.linalg.LinAlgError as exc:
            raise DegenerateCovarianceError(str(exc)) from None
        factors.append(cf)
        logdets.append(2.0 * np.log(np.diag(cf[0])).sum())
    if pooled:
        factors *= sample.n_classes
        logdets *= sample.n_classes
    return means, factors, np.array(logdets)


@dataclass(frozen=True, eq=False)
class PreparedModels:
    """Everything a rule estimates from its training sample, minus hyperparameters."""

    method: str
    kind: str | None
    training: LabeledSample
    priors: np.ndarray
    pooled: FpcaModel | None = None
    per_class: dict | None = None
    gaussian: tuple | None = field(default=None, repr=False)
    features: np.ndarray | None = field(default=None, repr=False)

    @property
    def max_truncation(self) -> int:
        if self.pooled is not None:
            return self.pooled.retained_count
        if self.per_class is not None:
            return min(m.retained_count for m in self.per_class.values())
        return 0

    def distance_spec(self, truncation: int = 1) -> DistanceSpec:
        if self.kind in L_KINDS:
            return DistanceSpec(self.kind)
        model = self.per_class if self.kind in PER_CLASS_KINDS else self.pooled
        return DistanceSpec(self.kind, truncation, model)

    def criteria(self, C0, K: int | None = None) -> np.ndarray:
        """Criterion stack for queries ``C0`` and truncations ``1..K``."""
        C0 = np.atleast_2d(np.asarray(C0, dtype=float))
        method, kind, train = self.method, self.kind, self.training
        if method in ("lbcr_coef", "qbcr_coef"):
            return self._coef_criteria(C0)[None]
        if method in ("knn", "centroid") and kind in L_KINDS:
            p = LP_ORDER[kind]
            F0 = lp_features(train.basis, C0, p)
            return pairwise_lp(train.basis, F0, self.features, p)[None]
        K = self.max_truncation if K is None else K
        if not 1 <= K <= self.max_truncation:
            raise KOutOfRangeError(f"truncation {K} outside 1..{self.max_truncation}")
        standardize = kind not in ("FPC_C", "FPC_D")
        if method == "knn":
            if kind in PER_CLASS_KINDS:
                return per_class_score_stack(self.per_class, C0, train.coeffs, train.labels, K, standardize)
            return score_stack(self.pooled, C0, train.coeffs, K, standardize)
        log_prior = 2.0 * np.log(self.priors)
        if method == "centroid":
            if kind == "DH":
                return dh_stack(self.pooled, C0, K)
            if kind in PER_CLASS_KINDS:
                means = np.vstack([m.means[g] for g, m in self.per_class.items()])
                return per_class_score_stack(self.per_class, C0, means, list(self.per_class), K, standardize)
            means = np.vstack([self.pooled.means[g] for g in train.classes])
            return score_stack(self.pooled, C0, means, K, standardize)
        if method == "flbcr":
            means = np.vstack([self.pooled.means[g] for g in train.classes])
            d = score_stack(self.pooled, C0, means, K, True)
            return d ** 2 - log_prior
        # fqbcr
        means = np.vstack([m.means[g] for g, m in self.per_class.items()])
        d = per_class_score_stack(self.per_class, C0, means, list(self.per_class), K, True)
        logdet = np.stack([np.cumsum(np.log(m.eigenvalues[:K])) for m in self.per_class.values()], axis=1)
        return d ** 2 + logdet[:, None, :] - log_prior

    def _coef_criteria(self, C0) -> np.ndarray:
        means, factors, logdets = self.gaussian
        out = np.empty((C0.shape[0], means.shape[0]))
        for g, (mu, cf) in enumerate(zip(means, factors)):
            R = C0 - mu
            out[:, g] = np.einsum("ij,ji->i", R, cho_solve(cf, R.T))
        if self.method == "qbcr_coef":
            out += logdets
        return out - 2.0 * np.log(self.priors)


def prepare(sample: LabeledSample, method: str, kind: str | None = None, priors=None) -> PreparedModels:
    """Estimate the models a rule needs from its training sample."""
    check_method(method, kind)
    G = sample.n_classes
    pri = default_priors(sample) if priors is None else _validate_priors(priors, G)
    if method in ("knn", "centroid") and kind in L_KINDS:
        p = LP_ORDER[kind]
        targets = sample.coeffs if method == "knn" else sample.class_means()
        return PreparedModels(method, kind, sample, pri, features=lp_features(sample.basis, targets, p))
    if method in ("lbcr_coef", "qbcr_coef"):
        gauss = _gaussian_params(sample, pooled=method == "lbcr_coef")
        return PreparedModels(method, kind, sample, pri, gaussian=gauss)
    if kind == "DH" and G != 2:
        raise TwoClassOnlyError(f"the DH distance needs exactly 2 classes, got {G}")
    if method == "fqbcr" or kind in PER_CLASS_KINDS:
        return PreparedModels(method, kind, sample, pri, per_class=fit_fpca(sample, "per_class"))
    return PreparedModels(method, kind, sample, pri, pooled=fit_fpca(sample, "pooled"))


def knn_vote(D, labels, k_max: int, n_classes: int) -> np.ndarray:
    """Majority-vote labels for every ``k = 1..k_max``.

    Parameters
    ----------
    D : ndarray, shape (n0, n)
        Distances from each query to each training curve.
    labels : ndarray, shape (n,)
        Training labels in ``1..G``.

    Returns
    -------
    ndarray, shape (n0, k_max)
        Column ``k - 1`` holds the prediction with ``k`` neighbours.
    """
    D = np.asarray(D)
    labels = np.asarray(labels)
    if not 1 <= k_max <= D.shape[1]:
        raise InvalidKError(f"k={k_max} must lie in 1..{D.shape[1]}")
    order = np.lexsort((np.broadcast_to(labels, D.shape), D), axis=-1)[:, :k_max]
    neigh = labels[order]
    onehot = neigh[:, :, None] == np.arange(1, n_classes + 1)
    counts = np.cumsum(onehot, axis=1)
    preds = np.empty(neigh.shape, dtype=int)
    preds[:, 0] = neigh[:, 0]
    for j in range(1, k_max):
        c = counts[:, j]
        top = c.max(axis=1, keepdims=True)
        unique = (c == top).sum(axis=1) == 1
        preds[:, j] = np.where(unique, c.argmax(axis=1) + 1, preds[:, j - 1])
    return preds


@dataclass(frozen=True, eq=False)
class TrainedClassifier:
    """A rule with its models and chosen hyperparameters."""

    models: PreparedModels
    truncation: int | None = None
    k_neighbors: int | None = None

    def __post_init__(self):
        m = self.models
        if uses_truncation(m.method, m.kind):
            if self.truncation is None or not 1 <= self.truncation <= m.max_truncation:
                raise KOutOfRangeError(f"truncation {self.truncation} outside 1..{m.max_truncation}")
        if m.method == "knn":
            if self.k_neighbors is None or not 1 <= self.k_neighbors <= len(m.training):
                raise InvalidKError(f"k={self.k_neighbors} must lie in 1..{len(m.training)}")

    @property
    def method(self) -> str:
        return self.models.method

    @property
    def kind(self) -> str | None:
        return self.models.kind

    @property
    def training(self) -> LabeledSample:
        return self.models.training

    @property
    def priors(self) -> np.ndarray:
        return self.models.priors

    @property
    def distance(self) -> DistanceSpec | None:
        if self.kind is None:
            return None
        return self.models.distance_spec(self.truncation or 1)

    def criteria(self, C0) -> np.ndarray:
        K = self.truncation if uses_truncation(self.method, self.kind) else None
        stack = self.models.criteria(C0, K)
        return stack[-1]

    def predict(self, C0) -> np.ndarray:
        """Predicted labels for the rows of the coefficient matrix ``C0``."""
        crit = self.criteria(C0)
        if self.method == "knn":
            tr = self.training
            return knn_vote(crit, tr.labels, self.k_neighbors, tr.n_classes)[:, -1]
        return np.argmin(crit, axis=1) + 1

    def classify(self, f0: FunctionalDatum) -> int:
        if not self.training.basis.compatible(f0.basis):
            raise BasisMismatchError("query curve lives in a different basis")
        return int(self.predict(f0.coeffs[None, :])[0])


def train(
    sample: LabeledSample,
    method: str,
    kind: str | None = None,
    truncation: int | None = None,
    k_neighbors: int | None = None,
    priors=None,
) -> TrainedClassifier:
    """Fit a classification rule.

    Examples
    --------
    >>> clf = train(sample, "knn", "FM_C", truncation=5, k_neighbors=3)  # doctest: +SKIP
    >>> clf.predict(test_coeffs)  # doctest: +SKIP
    """
    return TrainedClassifier(prepare(sample, method, kind, priors), truncation, k_neighbors)


def _expect(c: TrainedClassifier, *methods):
    if c.method not in methods:
        raise InvalidConfigurationError(f"expected a {'/'.join(methods)} classifier, got {c.method}")


def knn_classify(c: TrainedClassifier, f0: FunctionalDatum) -> int:
    _expect(c, "knn")
    return c.classify(f0)


def centroid_classify(c: TrainedClassifier, f0: FunctionalDatum) -> int:
    _expect(c, "centroid")
    return c.classify(f0)


def flbcr_classify(c: TrainedClassifier, f0: FunctionalDatum) -> int:
    _expect(c, "flbcr")
    return c.classify(f0)


def fqbcr_classify(c: TrainedClassifier, f0: FunctionalDatum) -> int:
    _expect(c, "fqbcr")
    return c.classify(f0)


def coef_bayes_classify(c: TrainedClassifier, f0: FunctionalDatum) -> int:
    _expect(c, "lbcr_coef", "qbcr_coef")
    return c.classify(f0)
