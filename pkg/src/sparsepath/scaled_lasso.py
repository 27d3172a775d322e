"""Joint estimation of sparse coefficients and the noise scale.

`scaled_lasso` alternates an L1 solve at penalty lambda0 * sigma with the
exact scale update sigma = ||y - X beta|| / sqrt(n); the pair jointly
minimizes

    ||y - X beta||^2 / (2 n sigma)  +  sigma / 2  +  lambda0 * ||beta||_1,

which is jointly convex, so the alternation descends monotonically.
`equilibrium_iteration` is the analogous fixed point over any solution
path: re-estimate the scale from the currently selected support, re-run
the stopping rule with it, repeat until the support stabilizes.  When the
path's losses are strictly decreasing this fixed point coincides exactly
with the plain path-thresholding selection started from sigma = ||y||/sqrt(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonConverged, ZeroResidual
from .linalg import ProblemInstance, SupportSet
from .regressors import CD_MAX_SWEEPS, RegressorSpec, _CDSolver
from .threshold import PathConfig, _Walk

SIGMA_RTOL = 1e-8          # relative change in sigma that counts as converged
SIGMA_FLOOR = 1e-12        # below this the fit interpolates the data
MAX_ALTERNATIONS = 100
MAX_EQUILIBRIUM_ROUNDS = 50


@dataclass(frozen=True, eq=False)
class ScaledLassoResult:
    beta_hat: np.ndarray
    sigma_hat: float
    lam: float               # final effective penalty, lambda0 * sigma_hat
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    support: SupportSet
    sigma_trace: list[float]
    converged: bool


def lambda0_from_c(c: float, n: int, p: int) -> float:
    """Base penalty sqrt(2 c log(p) / n), the usual noise-free calibration."""
    return math.sqrt(2.0 * c * math.log(p) / n)


def objective(inst: ProblemInstance, beta: np.ndarray, sigma: float, lambda0: float) -> float:
    """Joint objective value at (beta, sigma)."""
    r = inst.y - inst.X @ beta
    return float(r @ r) / (2.0 * inst.n * sigma) + sigma / 2.0 + lambda0 * float(
        np.sum(np.abs(beta))
    )


def scaled_lasso(inst: ProblemInstance, lambda0: float) -> ScaledLassoResult:
    """Alternating minimization of the joint objective.

    Starts at sigma = ||y||/sqrt(n), solves the L1 problem at penalty
    lambda0 * sigma (warm-started), updates sigma from the residual, and
    stops when sigma changes by less than 1e-8 relative.  The objective is
    checked to be non-increasing at every step.

    Raises
    ------
    ZeroResidual
        If sigma underflows 1e-12 (the solution interpolates the data).
    """
    if lambda0 <= 0:
        raise ValueError(f"lambda0 must be positive, got {lambda0}")
    n = inst.n
    sigma = float(np.linalg.norm(inst.y)) / math.sqrt(n)
    if sigma == 0.0:
        raise ValueError("y must be nonzero")
    solver = _CDSolver(inst)
    beta = np.zeros(inst.p)
    prev_obj = objective(inst, beta, sigma, lambda0)
    converged = False
    iterations = 0
    for iterations in range(1, MAX_ALTERNATIONS + 1):
        _, ok = solver.solve(lambda0 * sigma, beta)
        if not ok:
            raise NonConverged(
                f"coordinate descent hit the {CD_MAX_SWEEPS}-sweep cap "
                f"at lam={lambda0 * sigma:.6g}"
            )
        sigma_new = float(np.linalg.norm(inst.y - inst.X @ beta)) / math.sqrt(n)
        if sigma_new < SIGMA_FLOOR:
            raise ZeroResidual(
                f"noise-scale estimate underflowed ({sigma_new:.3e}); "
                "the solution interpolates the data"
            )
        obj = objective(inst, beta, sigma_new, lambda0)
        if obj > prev_obj + 1e-12:
            raise RuntimeError(
                f"alternating step increased the objective ({prev_obj!r} -> {obj!r})"
            )
        prev_obj = obj
        if abs(sigma_new - sigma) < SIGMA_RTOL * sigma:
            sigma = sigma_new
            converged = True
            break
        sigma = sigma_new
    return ScaledLassoResult(beta, sigma, lambda0 * sigma, iterations, converged)


def equilibrium_iteration(
    spec: RegressorSpec,
    inst: ProblemInstance,
    c: float,
    sigma0: Optional[float] = None,
    cfg: Optional[PathConfig] = None,
) -> EquilibriumResult:
    """Fixed point of (threshold with sigma, select support, re-estimate sigma).

    Each round finds the first path level whose best single-column
    improvement is below 2 * c * sigma^2 * log p (sigma held fixed during
    the scan; the path's end is used when no level qualifies), then resets
    sigma to the selected entry's residual scale.  Convergence is detected
    by support equality between rounds (sigma is a function of the support,
    so float comparisons would only add fragility); an exact sigma match
    also counts, which makes a fixed-point start converge in one round.
    """
    cfg = cfg or PathConfig(c=c)
    if sigma0 is None:
        sigma0 = float(np.linalg.norm(inst.y)) / math.sqrt(inst.n)
    if not sigma0 > 0:
        raise ValueError(f"sigma0 must be positive, got {sigma0}")

    walk = _Walk(spec, inst, cfg)
    logp = math.log(inst.p)

    def first_level_below(sig: float) -> int:
        thr = 2.0 * c * sig * sig * logp
        s = 0
        while True:
            d = walk.delta_at(s)
            if d is not None and d < thr:
                return s
            nxt = walk.path.next_level(s)
            if nxt is None:
                return s  # no level qualifies: use the path's end
            s = nxt

    sigma = float(sigma0)
    trace = [sigma]
    support: Optional[SupportSet] = None
    converged = False
    for _ in range(MAX_EQUILIBRIUM_ROUNDS):
        t = first_level_below(sigma)
        entry = walk.path.entry(t)
        sigma_new = math.sqrt(entry.loss / inst.n)
        trace.append(sigma_new)
        if (support is not None and entry.support == support) or sigma_new == sigma:
            support = entry.support
            converged = True
            break
        support = entry.support
        sigma = sigma_new
    return EquilibriumResult(support, trace, converged)
