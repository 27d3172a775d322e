"""Solution-path regressors behind a common contract: give me a support of size s.

Four algorithms are provided: forward greedy selection (omp), greedy with
backward deletion (foba), marginal screening (marginal), and an L1 path
solved by pathwise coordinate descent and mapped to sparsity levels
(lasso).  Paths are computed lazily so that callers that stop early (the
path-thresholding walk) never pay for deep levels they do not visit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .errors import Infeasible, InvalidConfig, NonConverged, RankDeficient
from .linalg import (
    DEGENERATE_RTOL,
    ProblemInstance,
    SupportSet,
    _solve_restricted,
)

CD_UPDATE_TOL = 1e-9      # convergence: max coefficient update < tol * max(1, ||beta||_inf)
CD_MAX_SWEEPS = 100_000   # per penalty value


# ---------------------------------------------------------------------------
# coordinate descent kernel (residual-based, numba-compiled)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _cd_sweep(XT, r, beta, lam, n, active_only):
    """One pass over coordinates; returns (max update, ||beta||_inf after)."""
    p = XT.shape[0]
    max_d = 0.0
    for j in range(p):
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        dot = 0.0
        for i in range(n):
            dot += XT[j, i] * r[i]
        z = bj + dot / n
        if z > lam:
            nb = z - lam
        elif z < -lam:
            nb = z + lam
        else:
            nb = 0.0
        d = nb - bj
        if d != 0.0:
            beta[j] = nb
            for i in range(n):
                r[i] -= d * XT[j, i]
        ad = abs(d)
        if ad > max_d:
            max_d = ad
    binf = 0.0
    for j in range(p):
        ab = abs(beta[j])
        if ab > binf:
            binf = ab
    return max_d, binf


@njit(cache=True)
def _cd_solve(XT, r, beta, lam, tol, max_sweeps):
    """Full sweeps with active-set refinement in between; in-place on (r, beta)."""
    n = XT.shape[1]
    total = 0
    while total < max_sweeps:
        total += 1
        max_d, binf = _cd_sweep(XT, r, beta, lam, n, False)
        if max_d < tol * max(1.0, binf):
            return total, True
        while total < max_sweeps:
            total += 1
            max_d, binf = _cd_sweep(XT, r, beta, lam, n, True)
            if max_d < tol * max(1.0, binf):
                break
    return total, False


# closed-form acceleration: only affordable when the Gram matrix fits comfortably
GRAM_JUMP_MAX_P = 4000
_FIRST_CHUNK = 150
_CHUNK = 100


class _CDSolver:
    """Coordinate descent with an active-set jump for the slow small-penalty regime.

    Sweeps run in chunks; after a stalled chunk the solver solves the
    stationarity system on the current active set and accepts the result
    only under a full optimality certificate (matching signs, inactive
    subgradients within the penalty, objective not increased).  The final
    chunk always re-certifies the sweep-update convergence criterion, so
    accepted jumps change nothing but the iteration count.
    """

    def __init__(self, inst: ProblemInstance):
        self.inst = inst
        self.XT = np.ascontiguousarray(inst.X.T)
        self.Xty = inst.X.T @ inst.y
        self.gram = inst.X.T @ inst.X if inst.p <= GRAM_JUMP_MAX_P else None

    def _objective(self, lam: float, beta: np.ndarray) -> float:
        r = self.inst.y - self.inst.X @ beta
        return float(r @ r) / (2.0 * self.inst.n) + lam * float(np.sum(np.abs(beta)))

    def _try_jump(self, lam: float, beta: np.ndarray, r: np.ndarray) -> bool:
        if self.gram is None:
            return False
        active = np.flatnonzero(beta)
        n = self.inst.n
        if active.size == 0 or active.size > n:
            return False
        signs = np.sign(beta[active])
        GA = self.gram[np.ix_(active, active)]
        try:
            cand = np.linalg.solve(GA, self.Xty[active] - n * lam * signs)
        except np.linalg.LinAlgError:
            return False
        if np.any(np.sign(cand) != signs):
            return False
        grad = (self.Xty - self.gram[:, active] @ cand) / n
        inactive = np.ones(self.inst.p, dtype=bool)
        inactive[active] = False
        if inactive.any() and np.max(np.abs(grad[inactive])) > lam * (1 + 1e-10) + 1e-14:
            return False
        full = np.zeros(self.inst.p)
        full[active] = cand
        if self._objective(lam, full) > self._objective(lam, beta) + 1e-12:
            return False
        beta[:] = full
        r[:] = self.inst.y - self.inst.X @ beta
        return True

    def solve(self, lam: float, beta: np.ndarray,
              max_sweeps: int = CD_MAX_SWEEPS) -> tuple[int, bool]:
        """Minimize at one penalty value, warm-starting from beta (in place)."""
        r = self.inst.y - self.inst.X @ beta
        total = 0
        chunk = _FIRST_CHUNK
        while total < max_sweeps:
            s, ok = _cd_solve(self.XT, r, beta, float(lam), CD_UPDATE_TOL,
                              min(chunk, max_sweeps - total))
            total += s
            if ok:
                return total, True
            self._try_jump(float(lam), beta, r)
            chunk = _CHUNK
        return total, False


def cd_lasso(inst: ProblemInstance, lam: float, beta0: Optional[np.ndarray] = None,
             solver: Optional[_CDSolver] = None) -> np.ndarray:
    """Solve min ||y - X b||^2 / (2n) + lam * ||b||_1 by coordinate descent.

    Requires the instance's normalized columns (unit diagonal of X'X/n).
    Warm-startable through `beta0`; pass a prebuilt solver when calling
    repeatedly on the same instance.
    """
    if solver is None:
        solver = _CDSolver(inst)
    beta = np.zeros(inst.p) if beta0 is None else beta0.astype(float).copy()
    sweeps, ok = solver.solve(float(lam), beta)
    if not ok:
        raise NonConverged(f"coordinate descent hit the {CD_MAX_SWEEPS}-sweep cap at lam={lam}")
    return beta


def lambda_max(inst: ProblemInstance) -> float:
    """Smallest penalty with an all-zero solution: ||X'y||_inf / n."""
    return float(np.max(np.abs(inst.X.T @ inst.y))) / inst.n


# ---------------------------------------------------------------------------
# specs and path containers
# ---------------------------------------------------------------------------

def _default_decay(num_points: int) -> float:
    # spans lam_max down to 1e-3 * lam_max over the grid
    return 10.0 ** (-3.0 / max(num_points - 1, 1))


@dataclass(frozen=True)
class LassoGrid:
    """Geometric penalty grid lam_max * decay**t for t = 0..num_points-1."""

    num_points: int = 100
    decay: Optional[float] = None

    def __post_init__(self):
        if self.num_points < 1:
            raise InvalidConfig("num_points must be positive")
        decay = self.decay if self.decay is not None else _default_decay(self.num_points)
        if not 0.0 < decay < 1.0:
            raise InvalidConfig(f"decay must be in (0, 1), got {decay}")
        object.__setattr__(self, "decay", float(decay))


@dataclass(frozen=True)
class RegressorSpec:
    """Which base algorithm to run, plus its internal settings."""

    kind: str
    foba_backward_ratio: Optional[float] = None
    lasso_grid: Optional[LassoGrid] = None

    def __post_init__(self):
        if self.kind not in ("omp", "foba", "marginal", "lasso"):
            raise InvalidConfig(f"unknown regressor kind {self.kind!r}")
        if self.kind == "foba":
            ratio = 0.5 if self.foba_backward_ratio is None else float(self.foba_backward_ratio)
            if not 0.0 < ratio < 1.0:
                raise InvalidConfig(f"foba_backward_ratio must be in (0, 1), got {ratio}")
            object.__setattr__(self, "foba_backward_ratio", ratio)
        elif self.foba_backward_ratio is not None:
            raise InvalidConfig("foba_backward_ratio is only valid for kind='foba'")
        if self.kind == "lasso":
            grid = self.lasso_grid if self.lasso_grid is not None else LassoGrid()
            object.__setattr__(self, "lasso_grid", grid)
        elif self.lasso_grid is not None:
            raise InvalidConfig("lasso_grid is only valid for kind='lasso'")

    @classmethod
    def omp(cls) -> "RegressorSpec":
        return cls("omp")

    @classmethod
    def foba(cls, backward_ratio: float = 0.5) -> "RegressorSpec":
        return cls("foba", foba_backward_ratio=backward_ratio)

    @classmethod
    def marginal(cls) -> "RegressorSpec":
        return cls("marginal")

    @classmethod
    def lasso(cls, num_points: int = 100, decay: Optional[float] = None) -> "RegressorSpec":
        return cls("lasso", lasso_grid=LassoGrid(num_points, decay))


@dataclass(frozen=True, eq=False)
class PathEntry:
    """One point of a solution path: support of size s with its refit."""

    s: int
    support: SupportSet
    loss: float
    sigma2_hat: float
    coefficients: np.ndarray


@dataclass(frozen=True, eq=False)
class SolutionPath:
    """Path entries in increasing sparsity; levels may be sparse for lasso."""

    entries: tuple[PathEntry, ...]
    truncated: bool = False

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(e.s for e in self.entries)

    def entry_at(self, s: int) -> PathEntry:
        for e in self.entries:
            if e.s == s:
                return e
        raise KeyError(f"no path entry at sparsity level {s}")

    @property
    def final(self) -> PathEntry:
        return self.entries[-1]

    def has_strictly_decreasing_loss(self) -> bool:
        losses = [e.loss for e in self.entries]
        return all(b < a for a, b in zip(losses, losses[1:]))


def entry_for_support(inst: ProblemInstance, support: SupportSet) -> PathEntry:
    """Materialize the path entry for an arbitrary support (restricted refit)."""
    coef = np.zeros(inst.p)
    idx = list(support.indices)
    if idx:
        c, resid = _solve_restricted(inst.X[:, idx], inst.y)
        coef[idx] = c
        loss = float(resid @ resid)
    else:
        loss = float(inst.y @ inst.y)
    return PathEntry(len(support), support, loss, loss / inst.n, coef)


# ---------------------------------------------------------------------------
# path cores: lazy level -> support maps
# ---------------------------------------------------------------------------

class _GreedyCore:
    """Forward-selection walk, optionally with backward deletions (foba).

    The walk advances only as far as requested.  Each size records the best
    (lowest-loss) support seen by the time the walk first reaches that
    size; later backward improvements update sizes that have not been
    handed out yet.
    """

    def __init__(self, inst: ProblemInstance, backward_ratio: Optional[float] = None):
        self.inst = inst
        self.ratio = backward_ratio
        self.truncated = False
        self._X = inst.X
        self._y = inst.y
        self._n, self._p = inst.n, inst.p
        self._cap = inst.max_support
        self._colsq = np.einsum("ij,ij->j", self._X, self._X)
        self._Q = np.zeros((self._n, 0))
        self._residual = self._y.copy()
        self._support: list[int] = []
        self._in_support = np.zeros(self._p, dtype=bool)
        self._perp_sq = self._colsq.copy()
        self._loss = float(self._y @ self._y)
        self._best: dict[int, tuple[float, tuple[int, ...]]] = {0: (self._loss, ())}
        self._frontier = 0
        self._finished = self._cap == 0
        self._steps = 0
        self._budget = max(1000, 50 * self._cap)
        self._last_gain = 0.0

    # -- walk mechanics -----------------------------------------------------

    def _record(self):
        s = len(self._support)
        best = self._best.get(s)
        if best is None or self._loss < best[0]:
            self._best[s] = (self._loss, tuple(self._support))

    def _rebuild(self, support: list[int]):
        Q = np.zeros((self._n, 0))
        for j in support:
            x = self._X[:, j]
            q = x - Q @ (Q.T @ x)
            q -= Q @ (Q.T @ q)
            Q = np.column_stack([Q, q / np.linalg.norm(q)])
        self._Q = Q
        self._support = list(support)
        self._in_support[:] = False
        self._in_support[support] = True
        self._residual = self._y - Q @ (Q.T @ self._y)
        QtX = Q.T @ self._X
        self._perp_sq = np.maximum(self._colsq - np.einsum("ij,ij->j", QtX, QtX), 0.0)
        self._loss = float(self._residual @ self._residual)

    def _forward(self) -> bool:
        while True:
            valid = (~self._in_support) & (self._perp_sq > (DEGENERATE_RTOL**2) * self._colsq)
            if not valid.any():
                return False
            scores = np.full(self._p, -np.inf)
            scores[valid] = (self._X[:, valid].T @ self._residual) ** 2 / self._perp_sq[valid]
            j = int(np.argmax(scores))  # ties resolve to the lowest index
            x = self._X[:, j]
            q = x - self._Q @ (self._Q.T @ x)
            q -= self._Q @ (self._Q.T @ q)
            nrm = np.linalg.norm(q)
            if nrm < DEGENERATE_RTOL * np.sqrt(self._colsq[j]):
                self._perp_sq[j] = 0.0  # squared-norm screen passed but the column is degenerate
                continue
            q = q / nrm
            self._Q = np.column_stack([self._Q, q])
            self._residual = self._residual - q * (q @ self._residual)
            self._support.append(j)
            self._in_support[j] = True
            self._perp_sq = np.maximum(self._perp_sq - (self._X.T @ q) ** 2, 0.0)
            gain = self._loss
            self._loss = float(self._residual @ self._residual)
            self._last_gain = gain - self._loss
            return True

    def _backward(self):
        # deletions pay off while cheaper than a fixed fraction of the last forward gain
        while len(self._support) >= 1 and self._steps < self._budget:
            S = np.array(self._support)
            XS = self._X[:, S]
            G = XS.T @ XS
            try:
                Minv = np.linalg.inv(G)
            except np.linalg.LinAlgError:
                return
            beta = Minv @ (XS.T @ self._y)
            incr = beta**2 / np.diag(Minv)
            pos = int(np.lexsort((S, incr))[0])  # smallest increase, ties to lowest column
            if incr[pos] >= self.ratio * self._last_gain:
                return
            self._steps += 1
            keep = [j for j in self._support if j != S[pos]]
            self._rebuild(keep)
            self._record()

    def _step(self):
        if not self._forward():
            self.truncated = self._frontier < self._cap
            self._finished = True
            return
        self._steps += 1
        self._record()
        self._frontier = max(self._frontier, len(self._support))
        if self._frontier >= self._cap:
            self._finished = True
            return
        if self.ratio is not None:
            self._backward()
        if self._steps >= self._budget:
            self.truncated = True
            self._finished = True

    # -- level interface ----------------------------------------------------

    def ensure(self, s: int):
        while not self._finished and self._frontier < s:
            self._step()

    def has_level(self, s: int) -> bool:
        self.ensure(s)
        return s in self._best

    def support_at(self, s: int) -> tuple[int, ...]:
        self.ensure(s)
        return self._best[s][1]

    def next_level(self, s: int) -> Optional[int]:
        self.ensure(s + 1)
        return s + 1 if (s + 1) in self._best else None

    def last_level(self) -> int:
        self.ensure(self._cap)
        return self._frontier


class _MarginalCore:
    """Levels are prefixes of columns ordered by |X'y| (descending)."""

    def __init__(self, inst: ProblemInstance):
        self.inst = inst
        self.truncated = False
        scores = np.abs(inst.X.T @ inst.y)
        self._order = np.argsort(-scores, kind="stable")  # ties resolve to the lowest index
        self._cap = inst.max_support

    def ensure(self, s: int):
        pass

    def has_level(self, s: int) -> bool:
        return 0 <= s <= self._cap

    def support_at(self, s: int) -> tuple[int, ...]:
        return tuple(int(j) for j in self._order[:s])

    def next_level(self, s: int) -> Optional[int]:
        return s + 1 if s + 1 <= self._cap else None

    def last_level(self) -> int:
        return self._cap


class _LassoCore:
    """Grid solutions mapped to sparsity levels, lowest projection loss per level."""

    def __init__(self, inst: ProblemInstance, grid: LassoGrid):
        if grid.num_points < 2:
            raise InvalidConfig("lasso grid needs at least 2 points")
        self.inst = inst
        self.truncated = False
        lam_max = lambda_max(inst)
        lambdas = lam_max * grid.decay ** np.arange(grid.num_points)
        solver = _CDSolver(inst)
        betas = np.zeros((grid.num_points, inst.p))
        sweeps = np.zeros(grid.num_points, dtype=np.int64)
        beta = np.zeros(inst.p)
        for t, lam in enumerate(lambdas):
            sweeps[t], ok = solver.solve(lam, beta)
            if not ok:
                raise NonConverged(f"coordinate descent hit the sweep cap at lam={lam:.6g}")
            betas[t] = beta
        self.lambdas = lambdas
        self.grid_betas = betas
        self.sweeps = sweeps
        # candidate supports per level, in grid order, without duplicates
        cap = inst.max_support
        self._candidates: dict[int, list[tuple[int, ...]]] = {0: [()]}
        seen = {()}
        for t in range(grid.num_points):
            supp = tuple(int(j) for j in np.flatnonzero(betas[t]))
            if supp in seen or len(supp) > cap:
                continue
            seen.add(supp)
            self._candidates.setdefault(len(supp), []).append(supp)
        self._chosen: dict[int, tuple[int, ...]] = {}
        self._levels = sorted(self._candidates)

    def _choose(self, s: int) -> Optional[tuple[int, ...]]:
        if s in self._chosen:
            return self._chosen[s]
        best = None
        best_loss = np.inf
        for supp in self._candidates[s]:
            try:
                _, resid = _solve_restricted(self.inst.X[:, list(supp)], self.inst.y)
            except RankDeficient:
                continue  # not representable as a valid path entry
            loss = float(resid @ resid)
            if loss < best_loss:
                best, best_loss = supp, loss
        if best is None:
            self._levels.remove(s)
            del self._candidates[s]
            return None
        self._chosen[s] = best
        return best

    def ensure(self, s: int):
        pass

    def has_level(self, s: int) -> bool:
        return s in self._candidates and self._choose(s) is not None

    def support_at(self, s: int) -> tuple[int, ...]:
        supp = self._choose(s)
        if supp is None:
            raise KeyError(s)
        return supp

    def next_level(self, s: int) -> Optional[int]:
        for lvl in list(self._levels):  # _choose may prune unrepresentable levels
            if lvl > s and self.has_level(lvl):
                return lvl
        return None

    def last_level(self) -> int:
        for lvl in reversed(list(self._levels)):
            if self.has_level(lvl):
                return lvl
        return 0


def _make_core(spec: RegressorSpec, inst: ProblemInstance):
    if spec.kind == "omp":
        return _GreedyCore(inst)
    if spec.kind == "foba":
        return _GreedyCore(inst, backward_ratio=spec.foba_backward_ratio)
    if spec.kind == "marginal":
        return _MarginalCore(inst)
    return _LassoCore(inst, spec.lasso_grid)


class LazyPath:
    """Cursor over a path core with cached entry materialization."""

    def __init__(self, spec: RegressorSpec, inst: ProblemInstance):
        self.inst = inst
        self.spec = spec
        self.core = _make_core(spec, inst)
        self._entries: dict[int, PathEntry] = {}

    @property
    def truncated(self) -> bool:
        return self.core.truncated

    def has_level(self, s: int) -> bool:
        return self.core.has_level(s)

    def next_level(self, s: int) -> Optional[int]:
        return self.core.next_level(s)

    def entry(self, s: int) -> PathEntry:
        if s not in self._entries:
            if not self.core.has_level(s):
                raise Infeasible(f"path has no entry at sparsity level {s}")
            self._entries[s] = entry_for_support(
                self.inst, SupportSet(self.core.support_at(s))
            )
        return self._entries[s]

    def materialize(self, s_max: Optional[int] = None) -> SolutionPath:
        if s_max is None:
            s_max = self.core.last_level()
        else:
            self.core.ensure(s_max)
        entries = []
        s = 0
        while s is not None and s <= s_max:
            if self.core.has_level(s):
                entries.append(self.entry(s))
            nxt = self.core.next_level(s)
            s = nxt
        return SolutionPath(tuple(entries), truncated=self.core.truncated)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def run_alg(spec: RegressorSpec, inst: ProblemInstance, s: int) -> SupportSet:
    """Support of exactly size s: the s-th entry of the algorithm's path.

    Deterministic for fixed inputs.  Raises Infeasible when degeneracy (or a
    missing lasso level) prevents reaching size s.
    """
    if not 0 <= s <= inst.max_support:
        raise ValueError(f"s must be in [0, {inst.max_support}], got {s}")
    path = LazyPath(spec, inst)
    if not path.has_level(s):
        raise Infeasible(f"{spec.kind} path cannot reach sparsity level {s}")
    return path.entry(s).support


def solution_path(spec: RegressorSpec, inst: ProblemInstance,
                  s_max: Optional[int] = None) -> SolutionPath:
    """Materialize the full path of a regressor up to s_max (default: path end)."""
    if s_max is not None and s_max > inst.max_support:
        raise ValueError(f"s_max must be at most min(n, p) = {inst.max_support}")
    return LazyPath(spec, inst).materialize(s_max)


def omp_path(inst: ProblemInstance, s_max: Optional[int] = None) -> SolutionPath:
    """Forward greedy path: each entry adds the best single-column gain."""
    return solution_path(RegressorSpec.omp(), inst, s_max)


def foba_path(inst: ProblemInstance, s_max: Optional[int] = None,
              backward_ratio: float = 0.5) -> SolutionPath:
    """Greedy path with backward deletions cheaper than `backward_ratio` of the last gain."""
    return solution_path(RegressorSpec.foba(backward_ratio), inst, s_max)


def marginal_path(inst: ProblemInstance, s_max: Optional[int] = None) -> SolutionPath:
    """Nested path of the s largest |X_j'y| (ties to the lowest index)."""
    return solution_path(RegressorSpec.marginal(), inst, s_max)


def lasso_path(inst: ProblemInstance, grid: Optional[LassoGrid] = None) -> SolutionPath:
    """L1-penalty grid mapped to sparsity levels (lowest loss per level).

    Levels that never appear along the grid are absent from the result;
    downstream consumers skip them.
    """
    spec = RegressorSpec("lasso", lasso_grid=grid if grid is not None else LassoGrid())
    return solution_path(spec, inst)
