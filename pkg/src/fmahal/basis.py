"""B-spline function systems and the coefficient representation of curves.

A curve is stored as the coefficient vector of its expansion in a
:class:`BasisSystem`.  All L2 quantities are computed exactly through the
Gram matrix of the basis, so nothing downstream needs a quadrature grid
except the L1 / L-infinity distances.
"""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from .errors import (
    BasisMismatchError,
    DerivativeOrderError,
    InvalidConfigurationError,
    InvalidDomainError,
    OutOfDomainError,
    RankDeficientFitError,
)

# relative to the largest singular value of the design matrix
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BasisSystem:
    """B-spline basis of a given order on a closed interval.

    Parameters
    ----------
    domain : tuple of float
        Interval ``(a, b)`` with ``a < b``.
    order : int
        Spline order (degree + 1).
    knots : ndarray
        Full knot vector, ``num_basis + order`` entries.
    gram : ndarray
        ``(M, M)`` matrix of L2 inner products between basis functions.
    """

    domain: tuple[float, float]
    order: int
    knots: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)

    @property
    def num_basis(self) -> int:
        return len(self.knots) - self.order

    @property
    def basis_id(self) -> str:
        return _basis_token(self.domain, self.order, self.knots)

    def basis_matrix(self, t) -> np.ndarray:
        """Evaluate every basis function at ``t``; shape ``(len(t), M)``.

        Points outside the domain evaluate to zero.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        a, b = self.domain
        out = np.zeros((t.size, self.num_basis))
        inside = (t >= a) & (t <= b)
        if inside.any():
            dm = BSpline.design_matrix(t[inside], self.knots, self.order - 1)
            out[inside] = dm.toarray()
        return out

    def compatible(self, other: "BasisSystem") -> bool:
        return self is other or self.basis_id == other.basis_id


@functools.lru_cache(maxsize=256)
def _token_cached(key: bytes) -> str:
    return hashlib.sha1(key).hexdigest()[:16]


def _basis_token(domain, order, knots) -> str:
    key = np.asarray([*domain, order], dtype=float).tobytes() + np.asarray(knots, dtype=float).tobytes()
    return _token_cached(key)


def _gram_matrix(domain, order, knots) -> np.ndarray:
    # Gauss-Legendre with `order` nodes is exact up to degree 2*order - 1,
    # and the integrand phi_m * phi_l has degree 2*(order - 1) on each span.
    nodes, weights = np.polynomial.legendre.leggauss(order)
    breaks = np.unique(knots)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    t = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
    w = half[:, None] * weights[None, :]
    B = BSpline.design_matrix(t.ravel(), knots, order - 1).toarray()
    gram = (B * w.ravel()[:, None]).T @ B
    return 0.5 * (gram + gram.T)


def build_bspline_basis(domain=(0.0, 1.0), order: int = 6, num_basis: int = 20) -> BasisSystem:
    """Uniform-knot B-spline basis with ``order``-fold boundary knots.

    Examples
    --------
    >>> basis = build_bspline_basis((0.0, 1.0), order=6, num_basis=20)
    >>> basis.num_basis, len(basis.knots)
    (20, 26)
    """
    a, b = (float(x) for x in domain)
    if not a < b:
        raise InvalidDomainError(f"domain must satisfy a < b, got [{a}, {b}]")
    if order < 1:
        raise InvalidConfigurationError(f"order must be >= 1, got {order}")
    if num_basis < order:
        raise InvalidConfigurationError(f"num_basis ({num_basis}) must be >= order ({order})")
    interior = np.linspace(a, b, num_basis - order + 2)[1:-1]
    knots = np.concatenate([np.full(order, a), interior, np.full(order, b)])
    return _make_basis((a, b), order, knots)


def _make_basis(domain, order, knots) -> BasisSystem:
    knots = np.asarray(knots, dtype=float)
    knots.setflags(write=False)
    gram = _gram_matrix(domain, order, knots)
    gram.setflags(write=False)
    return BasisSystem(domain=tuple(domain), order=order, knots=knots, gram=gram)


@dataclass(frozen=True, eq=False)
class FunctionalDatum:
    """A single curve: coefficients in a :class:`BasisSystem`."""

    basis: BasisSystem
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size != self.basis.num_basis:
            raise InvalidConfigurationError(
                f"expected {self.basis.num_basis} coefficients, got {c.size}"
            )
        if not np.all(np.isfinite(c)):
            raise InvalidConfigurationError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def basis_id(self) -> str:
        return self.basis.basis_id

    def _check(self, other):
        if not isinstance(other, FunctionalDatum):
            return NotImplemented
        if not self.basis.compatible(other.basis):
            raise BasisMismatchError("curves live in different bases")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return FunctionalDatum(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return FunctionalDatum(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return FunctionalDatum(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return FunctionalDatum(self.basis, -self.coeffs)

    def __call__(self, t):
        return evaluate(self, t)


def zero(basis: BasisSystem) -> FunctionalDatum:
    return FunctionalDatum(basis, np.zeros(basis.num_basis))


def unit(basis: BasisSystem, m: int) -> FunctionalDatum:
    """The basis function ``phi_m`` itself (0-based index)."""
    c = np.zeros(basis.num_basis)
    c[m] = 1.0
    return FunctionalDatum(basis, c)


def _check_in_domain(basis: BasisSystem, t: np.ndarray) -> None:
    a, b = basis.domain
    slack = 1e-12 * (b - a)
    bad = (t < a - slack) | (t > b + slack)
    if bad.any():
        raise OutOfDomainError(
            f"{int(bad.sum())} point(s) outside [{a}, {b}], e.g. {t[bad][0]!r}"
        )


def _design(basis: BasisSystem, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _check_in_domain(basis, t)
    a, b = basis.domain
    return basis.basis_matrix(np.clip(t, a, b))


def smooth_curves(basis: BasisSystem, t, Y) -> np.ndarray:
    """Least-squares coefficients for curves sharing one observation grid.

    Parameters
    ----------
    basis : BasisSystem
    t : array_like, shape (J,)
        Observation points.
    Y : array_like, shape (n, J) or (J,)
        Observed values, one curve per row.

    Returns
    -------
    ndarray, shape (n, M) or (M,)
    """
    Y = np.asarray(Y, dtype=float)
    B = _design(basis, t)
    if B.shape[0] < basis.num_basis:
        raise RankDeficientFitError(
            f"{B.shape[0]} points cannot determine {basis.num_basis} coefficients",
            effective_rank=int(np.linalg.matrix_rank(B)) if B.size else 0,
        )
    coef, _, rank, _ = np.linalg.lstsq(B, Y.T, rcond=RANK_TOL)
    if rank < basis.num_basis:
        raise RankDeficientFitError(
            f"design matrix has rank {rank} < {basis.num_basis}", effective_rank=int(rank)
        )
    return coef.T


def smooth_curve(basis: BasisSystem, t, y) -> FunctionalDatum:
    """Fit one curve from its discrete observations ``(t_j, y_j)``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if np.shape(t) != y.shape:
        raise InvalidConfigurationError("t and y must have the same length")
    return FunctionalDatum(basis, smooth_curves(basis, t, y))


def evaluate(f: FunctionalDatum, grid) -> np.ndarray:
    return _design(f.basis, grid) @ f.coeffs


def evaluate_many(basis: BasisSystem, C, grid) -> np.ndarray:
    """Evaluate a coefficient matrix ``(n, M)`` on ``grid``; shape ``(n, len(grid))``."""
    return np.asarray(C, dtype=float) @ _design(basis, grid).T


def inner_product(f: FunctionalDatum, g: FunctionalDatum) -> float:
    """L2 inner product ``b_f' W b_g``."""
    if not f.basis.compatible(g.basis):
        raise BasisMismatchError("curves live in different bases")
    return float(f.coeffs @ f.basis.gram @ g.coeffs)


@functools.lru_cache(maxsize=64)
def derivative_basis(basis: BasisSystem, d: int) -> BasisSystem:
    """Order ``order - d`` basis on the same breakpoints."""
    if d < 1:
        raise InvalidConfigurationError(f"derivative order must be >= 1, got {d}")
    if d >= basis.order:
        raise DerivativeOrderError(
            f"derivative of order {d} needs a basis of order > {d}, got {basis.order}"
        )
    return _make_basis(basis.domain, basis.order - d, basis.knots[d:len(basis.knots) - d])


def derivative_coeffs(basis: BasisSystem, C, d: int) -> np.ndarray:
    """Coefficients of the ``d``-th derivative in :func:`derivative_basis`."""
    derivative_basis(basis, d)  # validates d
    C = np.asarray(C, dtype=float)
    t = basis.knots
    for j in range(d):
        p = basis.order - 1 - j
        tt = t[j:len(t) - j]
        denom = tt[p + 1:-1] - tt[1:len(tt) - p - 1]
        scale = np.divide(p, denom, out=np.zeros_like(denom), where=denom > 0)
        C = (C[..., 1:] - C[..., :-1]) * scale
    return C


def derivative(f: FunctionalDatum, d: int) -> FunctionalDatum:
    """Exact ``d``-th derivative of ``f``."""
    dbasis = derivative_basis(f.basis, d)
    return FunctionalDatum(dbasis, derivative_coeffs(f.basis, f.coeffs, d))
