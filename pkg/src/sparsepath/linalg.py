"""Dense linear-algebra kernel for residual projections and restricted least squares.

Everything here is a pure function of its inputs.  Supports are grown one
column at a time through an explicit orthonormal basis (modified
Gram-Schmidt with one reorthogonalization pass), which stays stable in the
ill-conditioned p >> n regimes the rest of the library targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import DegenerateColumn, RankDeficient

# Relative tolerances, calibrated for double precision.
COLUMN_NORM_RTOL = 1e-8     # instance invariant: | ||X_j||^2/n - 1 | below this
RANK_RTOL = 1e-10           # smallest/largest singular value ratio for rank checks
DEGENERATE_RTOL = 1e-10     # projected-column norm relative to raw column norm


@dataclass(frozen=True)
class SupportSet:
    """Ordered set of distinct column indices.

    Order records how the support was built (useful when reading greedy
    paths); equality and hashing ignore it so that index-set comparisons
    behave the way selection tests expect.
    """

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(j) for j in self.indices)
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate indices in support: {idx}")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, j: int) -> bool:
        return j in self.as_set()

    def as_set(self) -> frozenset[int]:
        return frozenset(self.indices)

    def sorted(self) -> tuple[int, ...]:
        return tuple(sorted(self.indices))

    def union(self, j: int) -> "SupportSet":
        return SupportSet(self.indices + (int(j),))

    def remove(self, j: int) -> "SupportSet":
        return SupportSet(tuple(i for i in self.indices if i != j))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SupportSet):
            return NotImplemented
        return self.as_set() == other.as_set()

    def __hash__(self) -> int:
        return hash(self.as_set())


@dataclass(frozen=True)
class Truth:
    """Ground truth attached to synthetic instances."""

    beta_star: np.ndarray
    support_star: SupportSet
    sigma2: float

    def __post_init__(self):
        beta = np.asarray(self.beta_star, dtype=float)
        object.__setattr__(self, "beta_star", beta)
        nz = SupportSet(tuple(np.flatnonzero(beta)))
        if nz != self.support_star:
            raise ValueError("support_star must equal the nonzero indices of beta_star")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")


@dataclass(frozen=True)
class ProblemInstance:
    """A regression problem: column-normalized design X (n x p) and response y.

    Columns must already satisfy ||X_j||^2 / n = 1 to relative tolerance
    1e-8; use :func:`sparsepath.datagen.normalize_columns` on raw data.
    Arrays are treated as immutable once wrapped.
    """

    X: np.ndarray
    y: np.ndarray
    truth: Optional[Truth] = None

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"X must be a nonempty 2-d matrix, got shape {self.X.shape}")
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"y has {y.shape[0]} entries, expected {X.shape[0]}")
        n = X.shape[0]
        sq = np.einsum("ij,ij->j", X, X) / n
        worst = np.max(np.abs(sq - 1.0))
        if worst > COLUMN_NORM_RTOL:
            raise ValueError(
                f"columns are not normalized to ||X_j||^2 = n (worst deviation {worst:.3e}); "
                "normalize with datagen.normalize_columns"
            )
        if self.truth is not None and self.truth.beta_star.shape[0] != X.shape[1]:
            raise ValueError("truth.beta_star length must equal p")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def max_support(self) -> int:
        return min(self.n, self.p)


@dataclass(frozen=True)
class FactorState:
    """Support plus an orthonormal basis of span(X_S) and the projected residual.

    `basis` is n x |S| with orthonormal columns spanning the support columns;
    `residual` equals y minus its projection onto that span, so
    ||residual||^2 is the least-squares loss of the support.
    """

    support: SupportSet
    basis: np.ndarray
    residual: np.ndarray

    @classmethod
    def empty(cls, inst: ProblemInstance) -> "FactorState":
        return cls(SupportSet(), np.zeros((inst.n, 0)), inst.y.copy())

    @property
    def loss(self) -> float:
        return float(self.residual @ self.residual)


def _solve_restricted(X_S: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least squares on the restricted design via SVD with an explicit rank check."""
    if X_S.shape[1] == 0:
        return np.zeros(0), y.copy()
    U, s, Vt = np.linalg.svd(X_S, full_matrices=False)
    if s[-1] < RANK_RTOL * s[0]:
        raise RankDeficient(
            f"restricted design is numerically rank deficient "
            f"(singular value ratio {s[-1] / s[0]:.3e})"
        )
    coef = Vt.T @ ((U.T @ y) / s)
    return coef, y - X_S @ coef


def loss(support: SupportSet, inst: ProblemInstance) -> float:
    """Least-squares loss of a support: min over alpha of ||y - X_S alpha||^2.

    Equivalently the squared norm of the residual after projecting y off
    span(X_S).

    Parameters
    ----------
    support : SupportSet
        Column indices; their columns must be linearly independent.
    inst : ProblemInstance

    Returns
    -------
    float
        Nonnegative loss value; ||y||^2 for the empty support.

    Raises
    ------
    RankDeficient
        If the restricted design has numerically deficient rank.
    """
    _, resid = _solve_restricted(inst.X[:, support.indices], inst.y)
    return float(resid @ resid)


def restricted_ls(support: SupportSet, inst: ProblemInstance) -> np.ndarray:
    """Length-p least-squares coefficients on the support, zeros elsewhere.

    Raises
    ------
    RankDeficient
        If the restricted design has numerically deficient rank.
    """
    beta = np.zeros(inst.p)
    if len(support) == 0:
        return beta
    coef, _ = _solve_restricted(inst.X[:, support.indices], inst.y)
    beta[list(support.indices)] = coef
    return beta


def extend(state: FactorState, j: int, inst: ProblemInstance) -> FactorState:
    """Grow a factorization by one column, updating basis and residual.

    Gram-Schmidt against the current basis with one reorthogonalization
    pass; O(n |S|) per call, with the residual update itself O(n).

    Raises
    ------
    DegenerateColumn
        If column j is numerically in the span of the current support.
    """
    if j in state.support:
        raise ValueError(f"column {j} already in support")
    x = inst.X[:, j]
    Q = state.basis
    q = x - Q @ (Q.T @ x)
    q -= Q @ (Q.T @ q)  # second pass keeps orthogonality near machine precision
    nrm = np.linalg.norm(q)
    if nrm < DEGENERATE_RTOL * np.linalg.norm(x):
        raise DegenerateColumn(
            f"column {j} is numerically in span of the support "
            f"(projected norm ratio {nrm / np.linalg.norm(x):.3e})"
        )
    q = q / nrm
    residual = state.residual - q * (q @ state.residual)
    return FactorState(state.support.union(j), np.column_stack([Q, q]), residual)


def factor_for(support: SupportSet, inst: ProblemInstance) -> FactorState:
    """Build a FactorState for an arbitrary support by successive extensions."""
    state = FactorState.empty(inst)
    for j in support:
        state = extend(state, j, inst)
    return state


def correlations(state: FactorState, inst: ProblemInstance) -> np.ndarray:
    """Inner products of every column with the current residual (length p).

    Entries for columns inside the support are zero up to rounding.
    """
    return inst.X.T @ state.residual
