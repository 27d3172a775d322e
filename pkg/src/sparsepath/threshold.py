"""Stopping rule over solution paths: walk sparsity levels, stop when the best
remaining single-column improvement drops below 2 * c * sigma2_hat * log(p).

The walk turns any size-indexed regressor into a selector that needs no
noise-level input: the threshold calibrates itself from the running
residual, and the constant c is the only knob (performance is flat in c
over roughly [0.5, 1.5] at realistic sizes, and asymptotically independent
of any c > 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoCandidates
from .linalg import DEGENERATE_RTOL, ProblemInstance, SupportSet
from .regressors import LazyPath, PathEntry, RegressorSpec, SolutionPath

THRESHOLD_MET = "threshold_met"
PATH_EXHAUSTED = "path_exhausted"

# loss at or below this fraction of ||y||^2 counts as an exact interpolation
ZERO_LOSS_RTOL = 1e-12


@dataclass(frozen=True)
class PathConfig:
    """Stopping-rule settings.

    delta_mode 'ratio' scores candidates by the exact loss decrease
    |X_j'r|^2 / ||proj_perp(X_j)||^2; 'correlation' replaces the
    denominator by its upper bound n, which avoids projections entirely
    (one pass over X'r) at the price of a conservative score.
    sigma_denominator 'n-s' divides the loss by n - s instead of n.
    """

    c: float = 1.0
    delta_mode: str = "ratio"
    sigma_denominator: str = "n"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.delta_mode not in ("ratio", "correlation"):
            raise ValueError(f"delta_mode must be 'ratio' or 'correlation', got {self.delta_mode!r}")
        if self.sigma_denominator not in ("n", "n-s"):
            raise ValueError(f"sigma_denominator must be 'n' or 'n-s', got {self.sigma_denominator!r}")


@dataclass(frozen=True, eq=False)
class PathSelection:
    """The chosen support plus the stop diagnostics that produced it."""

    support: SupportSet
    stop_s: int
    c: float
    delta_at_stop: float
    threshold_at_stop: float
    stop_reason: str

    def _key(self):
        # NaN-safe: replay equality must hold when delta was uncomputable
        return (self.support, self.stop_s, self.c,
                np.float64(self.delta_at_stop).tobytes(),
                np.float64(self.threshold_at_stop).tobytes(), self.stop_reason)

    def __eq__(self, other):
        if not isinstance(other, PathSelection):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


def delta(entry: PathEntry, inst: ProblemInstance, mode: str = "ratio") -> float:
    """Best single-column improvement available from a path entry.

    In 'ratio' mode this is exactly the maximum decrease in least-squares
    loss over all single-column extensions of the entry's support.  In
    'correlation' mode the projected-column norm in the denominator is
    replaced by its bound n, giving a lower bound on the exact value at
    O(np) cost.

    Raises
    ------
    NoCandidates
        If every column outside the support is numerically in its span
        (detected in ratio mode; correlation mode only raises when the
        support already covers all columns).
    """
    X, y = inst.X, inst.y
    n = inst.n
    mask = np.ones(inst.p, dtype=bool)
    mask[list(entry.support.indices)] = False
    if not mask.any():
        raise NoCandidates("support already covers every column")
    r = y - X @ entry.coefficients
    corr = X.T @ r
    if mode == "correlation":
        return float(np.max(corr[mask] ** 2)) / n

    colsq = np.einsum("ij,ij->j", X, X)
    if len(entry.support) == 0:
        perp_sq = colsq
    else:
        # explicit projected columns (with one reorthogonalization) rather than
        # a norm subtraction, which would drown near-zero values in cancellation
        Q, _ = np.linalg.qr(X[:, list(entry.support.indices)])
        PX = X - Q @ (Q.T @ X)
        PX -= Q @ (Q.T @ PX)
        perp_sq = np.einsum("ij,ij->j", PX, PX)
    valid = mask & (perp_sq > (DEGENERATE_RTOL**2) * colsq)
    if not valid.any():
        raise NoCandidates("every remaining column is numerically in the support's span")
    return float(np.max(corr[valid] ** 2 / perp_sq[valid]))


def _sigma2(entry: PathEntry, inst: ProblemInstance, cfg: PathConfig) -> float:
    if cfg.sigma_denominator == "n":
        return entry.loss / inst.n
    return entry.loss / max(inst.n - entry.s, 1)


class _Walk:
    """Shared lazy walk: entries and delta values cached per level."""

    def __init__(self, spec: RegressorSpec, inst: ProblemInstance, cfg: PathConfig):
        self.inst = inst
        self.cfg = cfg
        self.path = LazyPath(spec, inst)
        self._deltas: dict[int, Optional[float]] = {}  # None marks NoCandidates
        self._ysq = float(inst.y @ inst.y)
        self._logp = math.log(inst.p)

    def delta_at(self, s: int) -> Optional[float]:
        if s not in self._deltas:
            try:
                self._deltas[s] = delta(self.path.entry(s), self.inst, self.cfg.delta_mode)
            except NoCandidates:
                self._deltas[s] = None
        return self._deltas[s]

    def select(self, c: float) -> PathSelection:
        s = 0
        consumed = []
        while True:
            entry = self.path.entry(s)
            consumed.append(s)
            sig2 = _sigma2(entry, self.inst, self.cfg)
            thr = 2.0 * c * sig2 * self._logp
            if entry.loss <= ZERO_LOSS_RTOL * self._ysq:
                # exact interpolation: the noise estimate is zero, nothing to threshold
                return PathSelection(entry.support, s, c, 0.0, thr, PATH_EXHAUSTED)
            if entry.s >= self.inst.max_support:
                return PathSelection(entry.support, s, c, math.nan, thr, PATH_EXHAUSTED)
            d = self.delta_at(s)
            if d is None:
                return PathSelection(entry.support, s, c, math.nan, thr, PATH_EXHAUSTED)
            if d < thr:
                return PathSelection(entry.support, s, c, d, thr, THRESHOLD_MET)
            nxt = self.path.next_level(s)
            if nxt is None:
                return PathSelection(entry.support, s, c, d, thr, PATH_EXHAUSTED)
            s = nxt

    def consumed_path(self, upto: int) -> SolutionPath:
        entries = []
        s = 0
        while s is not None and s <= upto:
            entries.append(self.path.entry(s))
            s = self.path.next_level(s)
        return SolutionPath(tuple(entries), truncated=self.path.truncated)


def run_path(spec: RegressorSpec, inst: ProblemInstance,
             cfg: Optional[PathConfig] = None) -> tuple[PathSelection, SolutionPath]:
    """Walk the regressor's path and stop at the first level where the best
    single-column improvement falls (strictly) below 2 * c * sigma2_hat * log p.

    Returns the selection plus the portion of the path that was examined.
    If no level meets the rule the last available entry is returned with
    stop_reason 'path_exhausted'; the same reason marks exact-interpolation
    stops (zero residual) and degenerate truncations.
    """
    cfg = cfg or PathConfig()
    walk = _Walk(spec, inst, cfg)
    selection = walk.select(cfg.c)
    return selection, walk.consumed_path(selection.stop_s)


def run_path_for_c_grid(
    spec: RegressorSpec,
    inst: ProblemInstance,
    c_values: list[float],
    cfg: Optional[PathConfig] = None,
) -> tuple[list[PathSelection], list[SupportSet]]:
    """Replay the stopping rule for many c over one shared path computation.

    Returns one selection per c (in input order) plus the distinct selected
    supports in first-appearance order.
    """
    if not c_values:
        raise ValueError("c_values must be nonempty")
    cfg = cfg or PathConfig()
    walk = _Walk(spec, inst, cfg)
    selections = [walk.select(float(c)) for c in c_values]
    distinct: list[SupportSet] = []
    for sel in selections:
        if sel.support not in distinct:
            distinct.append(sel.support)
    return selections, distinct
