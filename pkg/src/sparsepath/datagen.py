"""Seeded synthetic instances and ingestion of raw design matrices.

All randomness comes from numpy's Generator seeded with PCG64, so every
instance is reproducible from its integer seed on any platform.  Draw
order inside :func:`generate` is fixed: design matrix, support indices,
coefficient magnitudes, signs, then noise.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np

from .errors import InvalidConfig, ZeroColumn
from .linalg import ProblemInstance, SupportSet, Truth


@dataclass(frozen=True)
class EquiCorrelated:
    """Row covariance (1-a)*I + a*ones: every pair of variables shares correlation a."""

    a: float

    def __post_init__(self):
        if not 0.0 <= self.a < 1.0:
            raise InvalidConfig(f"equicorrelation a must be in [0, 1), got {self.a}")


Covariance = Union[Literal["identity"], EquiCorrelated]


@dataclass(frozen=True)
class GenConfig:
    """Recipe for one synthetic problem instance."""

    p: int
    n: int
    k: int
    sigma: float
    seed: int
    covariance: Covariance = "identity"
    beta_range: tuple[float, float] = (1.0, 2.0)
    signs: Literal["positive", "random"] = "random"

    def __post_init__(self):
        lo, hi = self.beta_range
        if self.p < 1 or self.n < 1 or self.k < 0:
            raise InvalidConfig("p, n must be >= 1 and k >= 0")
        if self.k > min(self.n, self.p):
            raise InvalidConfig(f"k={self.k} exceeds min(n, p)={min(self.n, self.p)}")
        if self.sigma < 0:
            raise InvalidConfig("sigma must be nonnegative")
        if not (0 < lo <= hi):
            raise InvalidConfig(f"beta_range must satisfy 0 < lo <= hi, got {self.beta_range}")
        if self.signs not in ("positive", "random"):
            raise InvalidConfig(f"signs must be 'positive' or 'random', got {self.signs!r}")
        if not (isinstance(self.covariance, EquiCorrelated) or self.covariance == "identity"):
            raise InvalidConfig(f"unknown covariance {self.covariance!r}")


def normalize_columns(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rescale each column to ||X_j||^2 = n; returns (normalized, scales).

    `scales[j]` maps coefficients back to raw units: a coefficient b on the
    normalized column equals b / scales[j] on the raw column, and
    raw == normalized * diag(scales).

    Raises
    ------
    ZeroColumn
        If any column norm is below 1e-12.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-d")
    n = X.shape[0]
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms < 1e-12):
        bad = int(np.argmin(norms))
        raise ZeroColumn(f"column {bad} has norm {norms[bad]:.3e}")
    scales = norms / np.sqrt(n)
    return X / scales, scales


def generate(config: GenConfig) -> ProblemInstance:
    """Draw a synthetic instance: y = X beta + w with k-sparse beta.

    Rows of the raw design are i.i.d. Gaussian with the configured
    covariance (sampled as sqrt(a)*g*ones + sqrt(1-a)*z for the
    equicorrelated case); columns are rescaled to ||X_j||^2 = n afterwards,
    and y is formed with the normalized design so the stored ground truth
    is exact for the stored matrix.
    """
    rng = np.random.default_rng(config.seed)
    n, p, k = config.n, config.p, config.k

    Z = rng.standard_normal((n, p))
    if isinstance(config.covariance, EquiCorrelated):
        a = config.covariance.a
        g = rng.standard_normal((n, 1))
        X = np.sqrt(a) * g + np.sqrt(1.0 - a) * Z
    else:
        X = Z
    X, _ = normalize_columns(X)

    support = np.sort(rng.permutation(p)[:k])
    lo, hi = config.beta_range
    mags = rng.uniform(lo, hi, size=k)
    if config.signs == "random":
        mags = mags * rng.choice(np.array([-1.0, 1.0]), size=k)
    beta = np.zeros(p)
    beta[support] = mags

    w = config.sigma * rng.standard_normal(n)
    y = X @ beta + w

    truth = Truth(beta, SupportSet(tuple(support)), config.sigma**2)
    return ProblemInstance(X, y, truth)


def _read_rows(path: str) -> list[list[str]]:
    with open(path, "r", newline="") as fh:
        text = fh.read()
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def _is_header(row: list[str]) -> bool:
    for cell in row:
        try:
            float(cell)
        except ValueError:
            return True
    return False


def load_matrix_csv(path: str) -> np.ndarray:
    """Read a design matrix: one row per observation, optional single header line."""
    rows = _read_rows(path)
    if _is_header(rows[0]):
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: header but no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {i + 1} has {len(row)} fields, expected {width}")
        try:
            out[i] = [float(c) for c in row]
        except ValueError as exc:
            raise ValueError(f"{path}: row {i + 1}: {exc}") from None
    return out


def load_vector_csv(path: str) -> np.ndarray:
    """Read a single-column response vector, optional single header line."""
    mat = load_matrix_csv(path)
    if mat.shape[1] != 1:
        raise ValueError(f"{path}: expected a single column, got {mat.shape[1]}")
    return mat[:, 0]


def instance_from_raw(
    X: np.ndarray, y: np.ndarray, truth: Optional[Truth] = None
) -> tuple[ProblemInstance, np.ndarray]:
    """Normalize a raw design and wrap it; returns (instance, column scales)."""
    Xn, scales = normalize_columns(X)
    return ProblemInstance(Xn, np.asarray(y, dtype=float), truth), scales
