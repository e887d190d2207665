"""Randomized linear maps for dimensionality reduction of transport instances.

Two families: dense Gaussian matrices, and subsampled randomized Hadamard
transforms (sign flip, fast Walsh-Hadamard, then a uniform sample of
coordinates rescaled to keep distances unbiased).  The target dimension
comes from one of three policies trading the exponent's influence against
the number of pooled atoms.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import BadParams, DiscreteDistribution, DimensionMismatch, make_distribution
from .barycenter import (
    SolverOptions,
    reconstruct_barycenter,
    solution_cost,
    solve_barycenter,
)

#: multiplier applied to every dimension formula before rounding up
DEFAULT_C_JL = 1.0

_POLICIES = ("p2", "kirszbraun", "optimal")


def jl_dimension(n: int, eps: float, delta: float, p: float,
                 policy: str = "optimal", k: int | None = None,
                 c: float = DEFAULT_C_JL) -> int:
    """Target dimension for the chosen distortion policy.

    ``p2``          ln(nk/delta) / eps^2          (exponent 2 only)
    ``kirszbraun``  p^2 ln(nk/delta) / eps^2
    ``optimal``     p^4 ln(n/(eps delta)) / eps^2

    ``k`` (number of input distributions) is required for the first two.
    Returns ``ceil(c * f)`` and is always at least 1.
    """
    if policy not in _POLICIES:
        raise BadParams(f"unknown policy {policy!r}; expected one of {_POLICIES}")
    if not (0 < eps < 1) or not (0 < delta < 1):
        raise BadParams("eps and delta must lie in (0, 1)")
    if n < 2:
        raise BadParams("n must be at least 2")
    if p < 1:
        raise BadParams("exponent must be >= 1")
    if policy == "p2":
        if p != 2:
            raise BadParams("policy 'p2' only applies to exponent 2")
        if k is None:
            raise BadParams("policy 'p2' needs the number of distributions k")
        f = math.log(n * k / delta) / eps**2
    elif policy == "kirszbraun":
        if k is None:
            raise BadParams("policy 'kirszbraun' needs the number of distributions k")
        f = p**2 * math.log(n * k / delta) / eps**2
    else:
        f = p**4 * math.log(n / (eps * delta)) / eps**2
    return max(1, math.ceil(c * f))


def _fwht(x: np.ndarray) -> np.ndarray:
    """In-place fast Walsh-Hadamard transform along the last axis.

    Length must be a power of two.  Unnormalized; callers divide by
    sqrt(length) for the orthonormal version.
    """
    n = x.shape[-1]
    h = 1
    while h < n:
        x = x.reshape(-1, n // (2 * h), 2, h)
        a = x[:, :, 0, :].copy()
        x[:, :, 0, :] = a + x[:, :, 1, :]
        x[:, :, 1, :] = a - x[:, :, 1, :]
        x = x.reshape(-1, n)
        h *= 2
    return x


@dataclass(frozen=True)
class ProjectionMap:
    """A fixed linear map R^d -> R^m, applied row-wise to point arrays."""

    kind: str
    d: int
    m: int
    seed: int
    matrix: np.ndarray | None = None          # gaussian
    signs: np.ndarray | None = field(default=None, repr=False)   # srht
    indices: np.ndarray | None = field(default=None, repr=False)
    scale: float = 1.0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.shape[1] != self.d:
            raise DimensionMismatch(
                f"map expects dimension {self.d}, got {points.shape[1]}"
            )
        if self.kind == "identity":
            return points.copy()
        if self.kind == "gaussian":
            return points @ self.matrix.T
        d_pad = len(self.signs)
        padded = np.zeros((points.shape[0], d_pad))
        padded[:, : self.d] = points * self.signs[: self.d]
        out = _fwht(padded) / math.sqrt(d_pad)
        return out[:, self.indices] * self.scale


def make_gaussian_map(d: int, m: int, seed: int = 0) -> ProjectionMap:
    """Dense map with i.i.d. N(0, 1/m) entries."""
    if m < 1 or d < 1:
        raise BadParams("dimensions must be positive")
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((m, d)) / math.sqrt(m)
    return ProjectionMap("gaussian", d, m, seed, matrix=mat)


def make_srht_map(d: int, m: int, seed: int = 0) -> ProjectionMap:
    """Subsampled randomized Hadamard map with exactly ``m`` output coords.

    Pads to the next power of two, flips signs, applies the orthonormal
    Hadamard transform, keeps ``m`` distinct coordinates chosen uniformly
    and rescales by sqrt(d_pad / m) so squared norms are unbiased.
    """
    if m < 1 or d < 1:
        raise BadParams("dimensions must be positive")
    d_pad = 1 << (d - 1).bit_length()
    if m > d_pad:
        raise BadParams(f"m={m} exceeds padded dimension {d_pad}")
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=d_pad)
    idx = rng.choice(d_pad, size=m, replace=False)
    return ProjectionMap("srht", d, m, seed, signs=signs, indices=np.sort(idx),
                         scale=math.sqrt(d_pad / m))


def identity_map(d: int) -> ProjectionMap:
    return ProjectionMap("identity", d, d, 0)


def project_instance(mus, pmap: ProjectionMap):
    """Push every distribution through the map, keeping its weights."""
    out = []
    for mu in mus:
        out.append(make_distribution(pmap(mu.atoms), mu.weights.copy()))
    return out


@dataclass(frozen=True)
class ReductionResult:
    nu_low: DiscreteDistribution
    nu_high: DiscreteDistribution
    solution: object
    cost_low: float
    cost_high: float
    map_: ProjectionMap
    time_project: float
    time_solve: float
    time_reconstruct: float


def reduce_solve_reconstruct(mus, pmap: ProjectionMap,
                             opts: SolverOptions) -> ReductionResult:
    """Project, solve in the low dimension, lift the flows back.

    The reconstructed barycenter reuses the low-dimensional transport plans
    unchanged: each atom is re-fitted in the original space against the
    mass its column received.  ``cost_low`` is the solver's objective in
    R^m; ``cost_high`` re-prices the same plans in R^d.
    """
    t0 = time.perf_counter()
    low = project_instance(mus, pmap)
    t1 = time.perf_counter()
    nu_low, sol, rep = solve_barycenter(low, opts)
    t2 = time.perf_counter()
    nu_high = reconstruct_barycenter(sol, mus, opts.p)
    cost_high = solution_cost(sol, mus, opts.p).total_cost
    t3 = time.perf_counter()
    return ReductionResult(nu_low, nu_high, sol, rep.total_cost, cost_high,
                           pmap, t1 - t0, t2 - t1, t3 - t2)


MAP_MAKERS = {"gaussian": make_gaussian_map, "srht": make_srht_map}


def cost_ratio_sweep(mus, m_values, opts: SolverOptions, map_kind: str = "gaussian",
                     trials: int = 5, master_seed: int = 0,
                     reference_cost: float | None = None, jobs: int = 1):
    """Quality/runtime profile of the reduction over target dimensions.

    For each ``m`` runs ``trials`` independent maps (seeds mixed from the
    master seed so cells are reproducible in isolation) and records the
    ratio of the lifted cost to a full-dimensional reference.  Returns a
    list of per-``m`` dicts with the ratios, lifted costs and wall times.
    """
    if map_kind not in MAP_MAKERS:
        raise BadParams(f"unknown map kind {map_kind!r}")
    d = mus[0].dim
    if reference_cost is None:
        t0 = time.perf_counter()
        _, _, rep = solve_barycenter(mus, opts)
        reference_time = time.perf_counter() - t0
        reference_cost = rep.total_cost
    else:
        reference_time = None
    def run_cell(m, trial):
        seed = int(np.random.SeedSequence([master_seed, m, trial])
                   .generate_state(1)[0])
        pmap = MAP_MAKERS[map_kind](d, m, seed)
        return reduce_solve_reconstruct(mus, pmap, opts)

    rows = []
    for m in m_values:
        if jobs > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(lambda t: run_cell(m, t), range(trials)))
        else:
            results = [run_cell(m, t) for t in range(trials)]
        ratios = [r.cost_high / reference_cost for r in results]
        costs = [r.cost_high for r in results]
        times = [r.time_project + r.time_solve + r.time_reconstruct
                 for r in results]
        rows.append({
            "m": int(m),
            "ratios": ratios,
            "mean_ratio": float(np.mean(ratios)),
            "max_ratio": float(np.max(ratios)),
            "costs": costs,
            "mean_time": float(np.mean(times)),
        })
    return {"reference_cost": float(reference_cost),
            "reference_time": reference_time, "rows": rows}
