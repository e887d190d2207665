"""Free-support barycenter solver with a fixed number of support atoms.

Alternates between (a) exact transport from every input distribution to the
current support and (b) per-atom support updates: weighted mean for p=2,
Weiszfeld's fixed point for p=1, and damped gradient descent with
backtracking for other exponents.  The per-column update problems are
convex, so each half-step can only decrease the objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CostReport,
    DiscreteDistribution,
    EmptyInput,
    InvalidSolution,
    Solution,
    ZeroWeight,
    make_distribution,
    pooled_atoms,
    solution_violations,
)
from .transport import cost_matrix, solve_ot


@dataclass(frozen=True)
class SolverOptions:
    support_size: int = 4
    p: float = 2.0
    max_outer_iters: int = 200
    rel_tol: float = 1e-7
    seed: int = 0
    inner_max_iters: int = 500
    inner_tol: float = 1e-9
    init: str = "sample"  # "sample" or "farthest"
    reestimate_weights: bool = False

    def __post_init__(self):
        if self.support_size < 1:
            raise EmptyInput("support_size must be >= 1")
        if self.rel_tol <= 0 or self.inner_tol <= 0:
            raise ValueError("tolerances must be positive")


def update_support_atom(points: np.ndarray, weights: np.ndarray, p: float,
                        tol: float = 1e-9, max_iters: int = 500) -> np.ndarray:
    """Minimize sum_i w_i ||x_i - y||^p over y.

    p=2 is the weighted mean in closed form; p=1 runs Weiszfeld iterations
    for the weighted geometric median; other p >= 1 use gradient descent
    with backtracking line search on the convex objective.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64).ravel()
    total = weights.sum()
    if total <= 0:
        raise ZeroWeight("support update needs positive total weight")
    if p == 2.0:
        return points.T @ weights / total

    y = points.T @ weights / total  # weighted mean start
    if p == 1.0:
        for _ in range(max_iters):
            diff = points - y
            dist = np.linalg.norm(diff, axis=1)
            at = dist < 1e-14
            if at.any():
                # candidate optimum at a data point: subgradient check
                j = int(np.argmax(at))
                rest = ~at
                if not rest.any():
                    return points[j]
                g = (weights[rest, None] * diff[rest] / dist[rest, None]).sum(axis=0)
                if np.linalg.norm(g) <= weights[at].sum() + 1e-12:
                    return points[j]
                dist = np.maximum(dist, 1e-14)
            inv = weights / dist
            y_next = points.T @ inv / inv.sum()
            if np.linalg.norm(y_next - y) <= tol * (1.0 + np.linalg.norm(y)):
                return y_next
            y = y_next
        return y

    def objective(z):
        return float(weights @ np.linalg.norm(points - z, axis=1) ** p)

    f = objective(y)
    step = 1.0
    for _ in range(max_iters):
        diff = y - points
        dist = np.maximum(np.linalg.norm(diff, axis=1), 1e-14)
        grad = (weights * p * dist ** (p - 2.0)) @ diff
        gnorm = np.linalg.norm(grad)
        scale = float(np.linalg.norm(points - y, axis=1).max()) + 1e-30
        if gnorm * scale <= tol * (1.0 + f):
            break
        step = min(step * 2.0, 1.0 / (weights.sum() * p * max(p - 1.0, 1.0)
                                      * scale ** max(p - 2.0, 0.0) + 1e-30))
        while True:
            y_try = y - step * grad
            f_try = objective(y_try)
            if f_try <= f - 0.25 * step * gnorm**2 or step < 1e-18:
                break
            step *= 0.5
        if f - f_try <= tol * (1.0 + f):
            y, f = y_try, f_try
            break
        y, f = y_try, f_try
    return y


def _column_points(sol: Solution, mus):
    points, _, _ = pooled_atoms(mus)
    stacked = np.concatenate([p for p in sol.plans], axis=0)  # (sum T_i, n)
    return points, stacked


def reconstruct_barycenter(sol: Solution, mus, p: float,
                           inner_tol: float = 1e-9,
                           inner_max_iters: int = 500) -> DiscreteDistribution:
    """Rebuild the barycenter in the ambient space of ``mus`` from the flows.

    Atom j solves the column-j support-update problem; a column carrying no
    mass degenerates to a zero-weight atom at the origin.
    """
    bad = solution_violations(sol, mus)
    if bad:
        raise InvalidSolution("; ".join(bad))
    points, stacked = _column_points(sol, mus)
    d = points.shape[1]
    atoms = np.zeros((sol.n_atoms, d))
    for j in range(sol.n_atoms):
        w = stacked[:, j]
        if w.sum() <= 0:
            continue  # degenerate: weight-0 atom stays at the origin
        atoms[j] = update_support_atom(points, w, p, inner_tol, inner_max_iters)
    return DiscreteDistribution(atoms, sol.barycenter_weights)


def solution_cost(sol: Solution, mus, p: float,
                  inner_tol: float = 1e-9) -> CostReport:
    """Objective value of a solution after rebuilding its barycenter."""
    nu = reconstruct_barycenter(sol, mus, p, inner_tol)
    points, stacked = _column_points(sol, mus)
    k = len(mus)
    per_atom = np.zeros(sol.n_atoms)
    for j in range(sol.n_atoms):
        dist = np.linalg.norm(points - nu.atoms[j], axis=1)
        per_atom[j] = (stacked[:, j] @ dist**p) / k
    return CostReport(float(per_atom.sum()), per_atom, 0, True)


def pairwise_cost_p2(sol: Solution, mus) -> float:
    """p=2 objective from pairwise squared distances only (no barycenter).

    Evaluates, per column j, the double sum of w(x) w(y) ||x - y||^2 over
    the column's weighted points, scaled by 1/(2 k b_j), then averages the
    columns.  Must agree with :func:`solution_cost` at p=2.
    """
    bad = solution_violations(sol, mus)
    if bad:
        raise InvalidSolution("; ".join(bad))
    b = sol.barycenter_weights
    if np.any(b <= 0):
        raise ZeroWeight("pairwise form requires every barycenter weight > 0")
    points, stacked = _column_points(sol, mus)
    sq = np.sum(points**2, axis=1)
    gram = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(gram, 0.0, out=gram)
    k = len(mus)
    total = 0.0
    for j in range(sol.n_atoms):
        w = stacked[:, j]
        total += (w @ gram @ w) / (2.0 * k * b[j])
    return total / k


def _init_support(mus, opts: SolverOptions, rng) -> np.ndarray:
    points, weights, _ = pooled_atoms(mus)
    n = opts.support_size
    prob = weights / weights.sum()
    if opts.init == "farthest":
        idx = [int(rng.choice(len(points), p=prob))]
        dist = np.linalg.norm(points - points[idx[0]], axis=1)
        while len(idx) < min(n, len(points)):
            far = int(np.argmax(dist))
            idx.append(far)
            dist = np.minimum(dist, np.linalg.norm(points - points[far], axis=1))
    else:
        take = min(n, len(points))
        idx = list(rng.choice(len(points), size=take, replace=False, p=prob))
    while len(idx) < n:  # more atoms requested than pooled points: duplicate
        idx.append(int(rng.choice(len(points), p=prob)))
    return points[idx].copy()


def solve_barycenter(mus, opts: SolverOptions):
    """Alternating minimization for the barycenter objective.

    Returns ``(nu, solution, report)`` where ``report.trace`` holds the
    objective after each transport step.  With the default fixed-uniform
    barycenter weights the trace is non-increasing and this is asserted;
    re-estimated weights change the feasible set between iterations, so no
    monotonicity is claimed for that mode.
    """
    if not mus:
        raise EmptyInput("need at least one input distribution")
    k = len(mus)
    n = opts.support_size
    p = opts.p
    rng = np.random.default_rng(opts.seed)
    support = _init_support(mus, opts, rng)
    b = np.full(n, 1.0 / n)
    points, pooled_w, _ = pooled_atoms(mus)
    if opts.reestimate_weights:
        # start from the mass each atom would attract, not from 1/n
        nearest = np.argmin(
            np.linalg.norm(points[:, None, :] - support[None, :, :], axis=2),
            axis=1)
        b = np.bincount(nearest, weights=pooled_w, minlength=n) / k

    best = None
    trace = []
    prev_obj = np.inf
    converged = False
    iters = 0
    for it in range(opts.max_outer_iters):
        iters = it + 1
        nu = DiscreteDistribution(support.copy(), b.copy())
        plans = [solve_ot(mu, nu, p) for mu in mus]
        obj = sum(pl.cost for pl in plans) / k
        trace.append(obj)
        if not opts.reestimate_weights:
            assert obj <= prev_obj + 1e-9 * (1.0 + abs(prev_obj)), (
                "alternation objective increased"
            )
        if best is None or obj < best[0]:
            best = (obj, support.copy(), b.copy(), [pl.flow.copy() for pl in plans])
        if prev_obj - obj <= opts.rel_tol * (1.0 + abs(obj)):
            converged = True
            break
        prev_obj = obj

        stacked = np.concatenate([pl.flow for pl in plans], axis=0)
        if opts.reestimate_weights:
            b = stacked.sum(axis=0) / k
            empty = b <= 0
            if empty.any():
                # restart heuristic: park empty atoms at the costliest point
                flat = np.concatenate(
                    [pl.flow * cost_matrix(mu, nu, p) for pl, mu in zip(plans, mus)]
                )
                worst = int(np.argmax(flat.sum(axis=1)))
                support[empty] = points[worst]
                b[empty] = 0.0
            b = b / b.sum()
        for j in range(n):
            w = stacked[:, j]
            if w.sum() > 0:
                support[j] = update_support_atom(
                    points, w, p, opts.inner_tol, opts.inner_max_iters
                )

    obj, support, b, flows = best
    nu = DiscreteDistribution(support, b)
    sol = Solution(tuple(flows), b)
    dist_stack = np.concatenate(
        [np.linalg.norm(mu.atoms[:, None, :] - support[None, :, :], axis=2)
         for mu in mus]
    )
    stacked = np.concatenate(flows, axis=0)
    per_atom = (stacked * dist_stack**p).sum(axis=0) / k
    report = CostReport(float(obj), per_atom, iters, converged, trace)
    return nu, sol, report
