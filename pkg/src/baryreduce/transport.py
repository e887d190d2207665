"""Exact discrete optimal transport under Euclidean costs raised to a power.

The solver is a transportation simplex: north-west-corner start, u-v (MODI)
pricing, and a leaving-variable ratio test on the unique basis cycle.  A
tiny deterministic cost perturbation plus first-index tie-breaking guards
against cycling; the reported cost always uses the unperturbed costs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.spatial.distance import cdist

from .core import (
    BadExponent,
    BadLambdas,
    DimensionMismatch,
    DiscreteDistribution,
    NumericalFailure,
    ShapeMismatch,
    TooLarge,
    ZERO_MASS,
)

#: reduced costs above this are treated as nonnegative
_PRICE_TOL = 1e-11
#: deterministic anti-cycling perturbation scale
_PERTURB = 1e-12


@dataclass(frozen=True)
class TransportPlan:
    """Optimal coupling between two distributions and its cost."""

    flow: np.ndarray
    cost: float


def _check_pair(mu: DiscreteDistribution, nu: DiscreteDistribution, p: float):
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"dimensions differ: {mu.dim} vs {nu.dim}")
    if not p >= 1.0:
        raise BadExponent(f"exponent p must be >= 1, got {p}")


def cost_matrix(mu: DiscreteDistribution, nu: DiscreteDistribution, p: float) -> np.ndarray:
    """C[s, t] = ||x_s - y_t||_2 ** p."""
    _check_pair(mu, nu, p)
    if p == 2.0:
        return cdist(mu.atoms, nu.atoms, "sqeuclidean")
    dist = cdist(mu.atoms, nu.atoms)
    return dist if p == 1.0 else dist**p


def _northwest_corner(a: np.ndarray, b: np.ndarray):
    """Initial basic feasible solution: m + n - 1 cells on a staircase path."""
    m, n = a.shape[0], b.shape[0]
    ra, rb = a.copy(), b.copy()
    i = j = 0
    cells, flows = [], []
    while True:
        q = min(ra[i], rb[j])
        cells.append((i, j))
        flows.append(q)
        ra[i] -= q
        rb[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if ra[i] <= rb[j] and i < m - 1:
            i += 1
        elif j < n - 1:
            j += 1
        else:
            i += 1
    return cells, flows


def _transportation_simplex(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> np.ndarray:
    m, n = C.shape
    if m == 1 or n == 1:
        return np.outer(a, b)  # unique coupling
    Cp = C + _PERTURB * np.arange(m * n, dtype=np.float64).reshape(m, n)
    cells, flows = _northwest_corner(a, b)
    max_iter = 10 * (m + n) ** 2
    u = np.empty(m)
    v = np.empty(n)
    for _ in range(max_iter):
        # adjacency over tree nodes: rows are 0..m-1, columns m..m+n-1
        adj = [[] for _ in range(m + n)]
        for idx, (i, j) in enumerate(cells):
            adj[i].append((m + j, idx))
            adj[m + j].append((i, idx))
        # u-v pricing by a single traversal from row 0
        u[0] = 0.0
        parent = [None] * (m + n)
        parent[0] = (0, -1)
        order = [0]
        stack = [0]
        while stack:
            node = stack.pop()
            for nxt, idx in adj[node]:
                if parent[nxt] is None:
                    parent[nxt] = (node, idx)
                    order.append(nxt)
                    stack.append(nxt)
                    i, j = cells[idx]
                    if nxt >= m:
                        v[nxt - m] = Cp[i, j] - u[i]
                    else:
                        u[nxt] = Cp[i, j] - v[j]
        if len(order) < m + n:
            raise NumericalFailure("basis tree became disconnected")
        reduced = Cp - u[:, None] - v[None, :]
        rows, colz = zip(*cells)
        reduced[rows, colz] = np.inf
        flat = int(np.argmin(reduced))
        ei, ej = divmod(flat, n)
        if reduced[ei, ej] >= -_PRICE_TOL:
            break
        # unique basis path from row ei up to column ej via tree parents
        depth = {node: 0 for node in range(m + n)}
        for node in order[1:]:
            depth[node] = depth[parent[node][0]] + 1
        pa, pb = ei, m + ej
        path_a, path_b = [], []
        while pa != pb:
            if depth[pa] >= depth[pb]:
                path_a.append(parent[pa][1])
                pa = parent[pa][0]
            else:
                path_b.append(parent[pb][1])
                pb = parent[pb][0]
        path = path_a + path_b[::-1]  # ordered from ei's side to ej's side
        # pivot: entering cell gets +theta, signs alternate around the cycle
        minus = path[::2]
        theta_idx = min(minus, key=lambda idx: (flows[idx], cells[idx]))
        theta = flows[theta_idx]
        for rank, idx in enumerate(path):
            flows[idx] += -theta if rank % 2 == 0 else theta
        cells[theta_idx] = (ei, ej)
        flows[theta_idx] = theta
    else:
        raise NumericalFailure("transportation simplex exceeded iteration cap")
    flow = np.zeros((m, n))
    for (i, j), f in zip(cells, flows):
        flow[i, j] += f
    return flow


def solve_ot(mu: DiscreteDistribution, nu: DiscreteDistribution, p: float) -> TransportPlan:
    """Minimum-cost coupling of mu and nu; cost is W_p(mu, nu)**p."""
    _check_pair(mu, nu, p)
    if mu.size == 1 and nu.size == 1:
        d = float(np.linalg.norm(mu.atoms[0] - nu.atoms[0]))
        return TransportPlan(np.array([[1.0]]), d**p)
    C = cost_matrix(mu, nu, p)
    rows = np.flatnonzero(mu.weights > ZERO_MASS)
    cols = np.flatnonzero(nu.weights > ZERO_MASS)
    a = mu.weights[rows] / mu.weights[rows].sum()
    b = nu.weights[cols] / nu.weights[cols].sum()
    sub = _transportation_simplex(a, b, C[np.ix_(rows, cols)])
    flow = np.zeros_like(C)
    flow[np.ix_(rows, cols)] = sub
    return TransportPlan(flow, float((flow * C).sum()))


@lru_cache(maxsize=64)
def _tree_bases(m: int, n: int):
    """All spanning-tree bases of the m x n transportation polytope.

    Returns the basis cells as an array (B, m+n-1) of flat indices together
    with the stacked inverses of the corresponding constraint submatrices
    (row-sum equations plus all but the last column-sum equation).
    """
    k = m + n - 1
    cand_cells = []
    cand_mats = []
    for cells in combinations(range(m * n), k):
        A = np.zeros((k, k))
        for col, flat in enumerate(cells):
            i, j = divmod(flat, n)
            A[i, col] = 1.0
            if j < n - 1:
                A[m + j, col] = 1.0
        cand_cells.append(cells)
        cand_mats.append(A)
    mats = np.array(cand_mats)
    dets = np.abs(np.linalg.det(mats))
    keep = dets > 0.5  # incidence determinants are 0 or +-1
    inv = np.linalg.inv(mats[keep])
    return np.array(cand_cells)[keep], inv


def solve_ot_oracle(mu: DiscreteDistribution, nu: DiscreteDistribution, p: float) -> TransportPlan:
    """Globally optimal plan by enumerating every basic feasible solution.

    Test oracle only; limited to supports with at most 16 cost-matrix cells.
    """
    _check_pair(mu, nu, p)
    m, n = mu.size, nu.size
    if m * n > 16:
        raise TooLarge(f"oracle limited to 16 cells, got {m}x{n}")
    C = cost_matrix(mu, nu, p)
    cells, inv = _tree_bases(m, n)
    rhs = np.concatenate([mu.weights, nu.weights[:-1]])
    flows = inv @ rhs  # (B, m+n-1)
    feasible = np.all(flows >= -1e-12, axis=1)
    basis_costs = C.ravel()[cells]  # (B, m+n-1)
    totals = np.where(feasible, (flows * basis_costs).sum(axis=1), np.inf)
    best = int(np.argmin(totals))
    flow = np.zeros(m * n)
    np.add.at(flow, cells[best], np.maximum(flows[best], 0.0))
    flow = flow.reshape(m, n)
    return TransportPlan(flow, float((flow * C).sum()))


def wasserstein_p(mu: DiscreteDistribution, nu: DiscreteDistribution, p: float) -> float:
    """The p-Wasserstein distance (p-th root of the optimal flow cost)."""
    return solve_ot(mu, nu, p).cost ** (1.0 / p)


def cost_of_plan(flow: np.ndarray, C: np.ndarray) -> float:
    flow = np.asarray(flow, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if flow.shape != C.shape:
        raise ShapeMismatch(f"flow {flow.shape} vs cost matrix {C.shape}")
    return float((flow * C).sum())


def barycenter_objective(nu: DiscreteDistribution, mus, p: float, lambdas=None) -> float:
    """The barycenter objective: weighted sum of W_p(mu_i, nu)**p."""
    k = len(mus)
    if lambdas is None:
        lam = np.full(k, 1.0 / k)
    else:
        lam = np.asarray(lambdas, dtype=np.float64)
        if lam.shape != (k,) or np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-9:
            raise BadLambdas("lambdas must be nonnegative and sum to 1")
    return float(sum(l * solve_ot(mu, nu, p).cost for l, mu in zip(lam, mus)))
