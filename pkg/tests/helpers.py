"""Shared test utilities: instance builders and independent oracles.

The oracles here are deliberately naive (normal equations, exhaustive
enumeration) so they stay independent of the library's incremental code
paths.
"""

import itertools

import numpy as np

from sparsepath import ProblemInstance
from sparsepath.datagen import normalize_columns


def plain_instance(seed: int, n: int, p: int) -> ProblemInstance:
    """Normalized Gaussian design with an unrelated Gaussian response."""
    rng = np.random.default_rng(seed)
    X, _ = normalize_columns(rng.standard_normal((n, p)))
    y = rng.standard_normal(n)
    return ProblemInstance(X, y)


def planted_instance(seed: int, n: int, p: int, k: int, sigma: float,
                     beta_lo: float = 1.0, beta_hi: float = 2.0) -> ProblemInstance:
    """Instance with known support; signs alternate, magnitudes in [lo, hi]."""
    from sparsepath import GenConfig, generate

    return generate(GenConfig(p=p, n=n, k=k, sigma=sigma, seed=seed,
                              beta_range=(beta_lo, beta_hi)))


def ls_oracle(X_S: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Normal-equations least squares; returns (coefficients, loss)."""
    if X_S.shape[1] == 0:
        return np.zeros(0), float(y @ y)
    beta = np.linalg.solve(X_S.T @ X_S, X_S.T @ y)
    r = y - X_S @ beta
    return beta, float(r @ r)


def loss_oracle(inst: ProblemInstance, indices) -> float:
    """Loss of a support via the normal-equations oracle."""
    return ls_oracle(inst.X[:, list(indices)], inst.y)[1]


def best_subset_oracle(inst: ProblemInstance, size: int) -> tuple[tuple[int, ...], float]:
    """Exhaustive search over all supports of the given size (tiny p only)."""
    best, best_loss = None, np.inf
    for combo in itertools.combinations(range(inst.p), size):
        val = loss_oracle(inst, combo)
        if val < best_loss:
            best, best_loss = combo, val
    return best, best_loss


def brute_force_best_gain(inst: ProblemInstance, support) -> float:
    """Max loss decrease over all single-column extensions, via batch solves."""
    base = loss_oracle(inst, support)
    taken = set(support)
    best = -np.inf
    for j in range(inst.p):
        if j in taken:
            continue
        try:
            gain = base - loss_oracle(inst, list(support) + [j])
        except np.linalg.LinAlgError:
            continue
        if gain > best:
            best = gain
    return best


def smallest_eig_bisection(M: np.ndarray, tol: float = 1e-13) -> float:
    """Smallest eigenvalue of a symmetric matrix by Cholesky bisection.

    M - t*I is positive definite exactly when t < lambda_min, so bisect on
    Cholesky success.  Independent of any eigensolver.
    """
    d = M.shape[0]
    lo = min(M[i, i] - np.sum(np.abs(M[i])) + np.abs(M[i, i]) for i in range(d)) - 1.0
    hi = float(np.min(np.diag(M)))  # lambda_min never exceeds the smallest diagonal

    def is_pd(t: float) -> bool:
        try:
            np.linalg.cholesky(M - t * np.eye(d))
            return True
        except np.linalg.LinAlgError:
            return False

    if not is_pd(lo):
        lo = min(lo, -np.sum(np.abs(M)))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if is_pd(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def restricted_eigenvalue_oracle(inst: ProblemInstance, support, k: int) -> float:
    """Superset enumeration with the bisection eigensolver."""
    base = sorted(support)
    others = [j for j in range(inst.p) if j not in set(base)]
    best = np.inf
    for extra in itertools.combinations(others, k):
        A = base + list(extra)
        G = inst.X[:, A].T @ inst.X[:, A] / inst.n
        best = min(best, smallest_eig_bisection(G))
    return best


def lasso_objective(inst: ProblemInstance, beta: np.ndarray, lam: float) -> float:
    r = inst.y - inst.X @ beta
    return float(r @ r) / (2 * inst.n) + lam * float(np.sum(np.abs(beta)))


def scaled_objective(inst: ProblemInstance, beta: np.ndarray, sigma: float,
                     lambda0: float) -> float:
    r = inst.y - inst.X @ beta
    return float(r @ r) / (2 * inst.n * sigma) + sigma / 2 + lambda0 * float(np.sum(np.abs(beta)))


def scaled_lasso_grid_oracle(inst: ProblemInstance, lambda0: float,
                             stages: int = 3, points: int = 80) -> float:
    """Grid search over sigma, sign-enumeration lasso at each grid point.

    Three zooming stages push the grid resolution far below the 1e-6
    comparison tolerance.  Returns the minimal joint objective found.
    """
    sigma_y = float(np.linalg.norm(inst.y)) / np.sqrt(inst.n)
    lo, hi = 1e-3 * sigma_y, 1.05 * sigma_y
    best_sigma, best_obj = None, np.inf
    for _ in range(stages):
        grid = np.linspace(lo, hi, points)
        for sigma in grid:
            beta, _ = lasso_sign_enumeration_oracle(inst, lambda0 * sigma)
            obj = scaled_objective(inst, beta, sigma, lambda0)
            if obj < best_obj:
                best_sigma, best_obj = sigma, obj
        step = (hi - lo) / (points - 1)
        lo = max(best_sigma - step, 1e-6 * sigma_y)
        hi = best_sigma + step
    return best_obj


def _sign_pattern_table(inst: ProblemInstance, include_empty=True):
    """Per (active set, sign vector) pieces of the lasso solution as a function
    of the penalty: beta_A(lam) = u - lam*v, residual = r0 + lam*r1, and the
    penalty interval [lo, hi] on which the pattern satisfies all optimality
    conditions.  Enables exact lasso minima for many penalties at once."""
    n, p = inst.n, inst.p
    X, y = inst.X, inst.y
    rows = []
    if include_empty:
        lam_lo = float(np.max(np.abs(X.T @ y))) / n if p else 0.0
        rows.append((lam_lo, np.inf, float(y @ y), 0.0, 0.0, 0.0, 0.0))
    for r in range(1, p + 1):
        for active in itertools.combinations(range(p), r):
            XA = X[:, list(active)]
            G = XA.T @ XA / n
            try:
                Ginv = np.linalg.inv(G)
            except np.linalg.LinAlgError:
                continue
            u_base = Ginv @ (XA.T @ y / n)
            inactive = [j for j in range(p) if j not in active]
            XI = X[:, inactive]
            for signs in itertools.product((-1.0, 1.0), repeat=r):
                z = np.array(signs)
                v = Ginv @ z
                # validity interval: sign consistency plus inactive subgradient bound
                lo, hi = 0.0, np.inf
                for uj, vj, zj in zip(u_base, v, z):
                    # zj * (uj - lam * vj) > 0
                    zv, zu = zj * vj, zj * uj
                    if zv > 0:
                        hi = min(hi, zu / zv)
                    elif zv < 0:
                        lo = max(lo, zu / zv)
                    elif zu <= 0:
                        lo, hi = 1.0, 0.0  # never valid
                r0 = y - XA @ u_base
                r1 = XA @ v
                if inactive:
                    g0 = XI.T @ r0 / n
                    g1 = XI.T @ r1 / n
                    for a0, a1 in zip(g0, g1):
                        # |a0 + lam*a1| <= lam  <=>  two linear constraints
                        # a0 + lam*a1 <= lam  and  -(a0 + lam*a1) <= lam
                        for s in (1.0, -1.0):
                            coef = s * a1 - 1.0
                            const = -s * a0
                            # coef * lam <= const
                            if coef > 0:
                                hi = min(hi, const / coef)
                            elif coef < 0:
                                lo = max(lo, const / coef)
                            elif const < 0:
                                lo, hi = 1.0, 0.0
                if lo > hi:
                    continue
                a = float(r0 @ r0)
                b = float(r0 @ r1)
                c2 = float(r1 @ r1)
                e = float(z @ u_base)
                f = float(z @ v)
                rows.append((lo, hi, a, b, c2, e, f))
    return np.array(rows)


def fast_scaled_lasso_oracle(inst: ProblemInstance, lambda0: float,
                             stages: int = 3, points: int = 80) -> float:
    """Same sigma-grid search as scaled_lasso_grid_oracle, with the per-sigma
    lasso minimum evaluated exactly from the precomputed sign-pattern table."""
    table = _sign_pattern_table(inst)
    lo_i, hi_i = table[:, 0], table[:, 1]
    a, b, c2, e, f = table[:, 2], table[:, 3], table[:, 4], table[:, 5], table[:, 6]
    n = inst.n

    def value(sigma: float) -> float:
        lam = lambda0 * sigma
        valid = (lo_i <= lam * (1 + 1e-12)) & (lam <= hi_i * (1 + 1e-12))
        if not valid.any():
            return np.inf
        rss = a[valid] + 2 * b[valid] * lam + c2[valid] * lam**2
        l1 = e[valid] - lam * f[valid]
        objs = rss / (2 * n * sigma) + sigma / 2 + lambda0 * l1
        return float(np.min(objs))

    sigma_y = float(np.linalg.norm(inst.y)) / np.sqrt(inst.n)
    lo, hi = 1e-3 * sigma_y, 1.05 * sigma_y
    best_sigma, best_obj = None, np.inf
    for _ in range(stages):
        grid = np.linspace(lo, hi, points)
        for sigma in grid:
            obj = value(sigma)
            if obj < best_obj:
                best_sigma, best_obj = sigma, obj
        step = (hi - lo) / (points - 1)
        lo = max(best_sigma - step, 1e-6 * sigma_y)
        hi = best_sigma + step
    return best_obj


def lasso_sign_enumeration_oracle(inst: ProblemInstance, lam: float) -> tuple[np.ndarray, float]:
    """Exact lasso solution by enumerating sign patterns and checking KKT.

    Feasible for p <= 10.  For each candidate active set and sign vector,
    solve the stationarity system and keep solutions whose signs match and
    whose inactive coordinates satisfy the subgradient bound.
    """
    n, p = inst.n, inst.p
    X, y = inst.X, inst.y
    best_beta = np.zeros(p)
    best_obj = lasso_objective(inst, best_beta, lam)
    for r in range(1, p + 1):
        for active in itertools.combinations(range(p), r):
            XA = X[:, list(active)]
            G = XA.T @ XA / n
            rhs0 = XA.T @ y / n
            for signs in itertools.product((-1.0, 1.0), repeat=r):
                z = np.array(signs)
                try:
                    beta_a = np.linalg.solve(G, rhs0 - lam * z)
                except np.linalg.LinAlgError:
                    continue
                if np.any(np.sign(beta_a) != z):
                    continue
                beta = np.zeros(p)
                beta[list(active)] = beta_a
                resid = y - X @ beta
                grad = X.T @ resid / n
                inactive = [j for j in range(p) if j not in active]
                if inactive and np.max(np.abs(grad[inactive])) > lam + 1e-10:
                    continue
                obj = lasso_objective(inst, beta, lam)
                if obj < best_obj:
                    best_beta, best_obj = beta, obj
    return best_beta, best_obj
