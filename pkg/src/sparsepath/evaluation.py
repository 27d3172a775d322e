"""Support-recovery metrics and coverage diagnostics for the recovery guarantee."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EpsilonInfeasible, TooLarge
from .linalg import ProblemInstance, SupportSet


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    err: float


@dataclass(frozen=True)
class TheoremDiagnostics:
    """Inputs and outcome of the sample-size sufficiency check."""

    beta_min: float
    rho_2k: float
    epsilon: float
    n_required: float
    condition_holds: bool


def support_metrics(estimated: SupportSet, truth: SupportSet) -> tuple[float, float, float]:
    """(precision, recall, f1) of an estimated support against the truth.

    Precision of an empty estimate is defined as 0; f1 is the harmonic mean
    2PR/(P+R), or 0 when either factor is 0.
    """
    if len(truth) == 0:
        raise ValueError("truth support must be nonempty")
    overlap = len(estimated.as_set() & truth.as_set())
    precision = overlap / len(estimated) if len(estimated) > 0 else 0.0
    recall = overlap / len(truth)
    f1 = 2.0 * precision * recall / (precision + recall) if precision > 0 and recall > 0 else 0.0
    return precision, recall, f1


def estimation_error(beta_hat: np.ndarray, beta_star: np.ndarray) -> float:
    """Euclidean distance between coefficient vectors."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    if beta_hat.shape != beta_star.shape:
        raise ValueError(f"shape mismatch: {beta_hat.shape} vs {beta_star.shape}")
    return float(np.linalg.norm(beta_hat - beta_star))


def compute_metrics(estimated: SupportSet, beta_hat: np.ndarray,
                    inst: ProblemInstance) -> Metrics:
    """Bundle support metrics and estimation error against the instance truth."""
    if inst.truth is None:
        raise ValueError("instance carries no ground truth")
    p, r, f1 = support_metrics(estimated, inst.truth.support_star)
    return Metrics(p, r, f1, estimation_error(beta_hat, inst.truth.beta_star))


ENUMERATION_GUARD = 10**6


def restricted_eigenvalue(inst: ProblemInstance, truth_support: SupportSet, k: int) -> float:
    """Smallest eigenvalue of X_A'X_A / n over all size-2k supersets A of the truth.

    Exhaustive by construction, so it is a desk-scale diagnostic only: the
    number of supersets C(p-k, k) must not exceed 10^6.
    """
    if len(truth_support) != k:
        raise ValueError(f"truth support has {len(truth_support)} indices, expected k={k}")
    if 2 * k > inst.max_support:
        raise ValueError(f"2k={2 * k} exceeds min(n, p)={inst.max_support}")
    count = math.comb(inst.p - k, k)
    if count > ENUMERATION_GUARD:
        raise TooLarge(f"{count} supersets exceed the enumeration guard ({ENUMERATION_GUARD})")
    base = list(truth_support.sorted())
    others = [j for j in range(inst.p) if j not in truth_support]
    n = inst.n
    smallest = np.inf
    for extra in itertools.combinations(others, k):
        A = base + list(extra)
        G = inst.X[:, A].T @ inst.X[:, A] / n
        lam = float(np.linalg.eigvalsh(G)[0])
        if lam < smallest:
            smallest = lam
    return smallest


def sample_condition(n: int, k: int, p: int, c: float, sigma: float,
                     beta_min: float, rho_2k: float) -> TheoremDiagnostics:
    """Check the sample-size sufficiency bound for reliable recovery.

    n_required = 2ck log(p)/rho + 8 sigma c sqrt(k) log(p)/(beta_min rho^2)
                 + 8 sigma^2 c log(p)/(beta_min^2 rho^2),
    with the margin epsilon = k/n + sqrt(1/k) (the minimal admissible
    choice) and the additional requirement c > 1/(1 - epsilon).

    Raises
    ------
    EpsilonInfeasible
        If k/n + sqrt(1/k) >= 1, so no margin below one exists.
    """
    if min(n, k, p) <= 0 or c <= 0 or sigma < 0 or beta_min <= 0 or rho_2k <= 0:
        raise ValueError("n, k, p, c, beta_min, rho_2k must be positive and sigma nonnegative")
    logp = math.log(p)
    n_required = (
        2.0 * c * k * logp / rho_2k
        + 8.0 * sigma * c * math.sqrt(k) * logp / (beta_min * rho_2k**2)
        + 8.0 * sigma**2 * c * logp / (beta_min**2 * rho_2k**2)
    )
    epsilon = k / n + math.sqrt(1.0 / k)
    if epsilon >= 1.0:
        raise EpsilonInfeasible(f"k/n + sqrt(1/k) = {epsilon:.4f} leaves no margin below 1")
    holds = (n >= n_required) and (c > 1.0 / (1.0 - epsilon))
    return TheoremDiagnostics(beta_min, rho_2k, epsilon, n_required, holds)
