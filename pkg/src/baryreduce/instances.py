"""Synthetic instance generators, dataset ingestion, and structural checks.

Includes the hard instances used to probe when projection can fail (near-tied
point pairs, scaled simplex matchings, graded level sets), a one-outlier
family for importance sampling, IDX/CSV loaders, and the reformulation of the
exponent-2 objective as a low-rank Frobenius approximation.
"""

from __future__ import annotations

import csv as _csv
import struct

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import min_weight_full_bipartite_matching
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .core import (
    BadMagic,
    BadParams,
    BadWeights,
    CountMismatch,
    DiscreteDistribution,
    NotMultipleOfN,
    ParseError,
    RaggedRows,
    TruncatedFile,
    make_distribution,
)
from .barycenter import solution_cost


# ---------------------------------------------------------------------------
# lower-bound constructions


def gen_lb_barycenter(t: int, N: float, C: float, eps: float, p: float = 2.0):
    """Family of 2t leave-one-out distributions over t near-tied point pairs.

    The support holds, on each axis i < t, the pair N e_i and (N+1) e_i at
    distance 1, plus on axis t the slightly closer pair N e_t and
    (N+1-C*eps) e_t.  Distribution i is uniform over the support minus its
    i-th point.  Merging the close pair moves unit mass a distance 1-C*eps,
    so the intended optimum costs (1-C*eps)^p; merging any other pair costs
    1.  Returns ``(distributions, expected_opt_cost, n)`` with n = 2t-1.
    """
    if t < 2:
        raise BadParams("need t >= 2")
    if N < 2:
        raise BadParams("need N >= 2 so pairs are far from the origin")
    if not (0 < C * eps < 1):
        raise BadParams("need 0 < C*eps < 1")
    S = np.zeros((2 * t, t))
    for i in range(t):
        S[2 * i, i] = N
        S[2 * i + 1, i] = N + 1 if i < t - 1 else N + 1 - C * eps
    k = 2 * t
    w = np.full(k - 1, 1.0 / (k - 1))
    mus = []
    for drop in range(k):
        keep = np.delete(np.arange(k), drop)
        mus.append(make_distribution(S[keep], w))
    return mus, (1.0 - C * eps) ** p, k - 1


def lb_pairs(mus):
    """Recover the per-axis point pairs of a leave-one-out instance.

    Returns an array of shape (t, 2, t): for each axis, the near point and
    the far point.
    """
    pts = np.unique(np.concatenate([mu.atoms for mu in mus]), axis=0)
    t = pts.shape[1]
    pairs = np.zeros((t, 2, t))
    for i in range(t):
        on_axis = pts[np.argmax(np.abs(pts), axis=1) == i]
        order = np.argsort(np.linalg.norm(on_axis, axis=1))
        pairs[i] = on_axis[order[:2]]
    return pairs


def lb_merge_cost(mus, pair_index: int, p: float = 2.0,
                  pmap=None) -> float:
    """Cost of the solution that merges one point pair into a single atom.

    Every support point carries total mass 1 across the family, so merging
    pair j moves unit mass across the pair gap: cost = ||p_j - q_j||^p,
    measured in the original space.  ``pmap`` only influences *which* pair
    looks closest when callers combine this with :func:`lb_projected_merge`.
    """
    pairs = lb_pairs(mus)
    if not 0 <= pair_index < len(pairs):
        raise BadParams(f"pair index {pair_index} out of range")
    gap = np.linalg.norm(pairs[pair_index, 0] - pairs[pair_index, 1])
    return gap**p


def lb_projected_merge(mus, pmap, p: float = 2.0):
    """Pick the pair that is closest after projection; price it both ways.

    Returns ``(pair_index, low_cost, pullback_cost)`` where ``low_cost``
    uses projected coordinates and ``pullback_cost`` re-prices the same
    merge in the original space.  A map that reorders the pair gaps makes
    the pullback jump from (1-C*eps)^p to 1.
    """
    pairs = lb_pairs(mus)
    t = len(pairs)
    proj_gap = np.array([
        np.linalg.norm(pmap(pairs[i, 0])[0] - pmap(pairs[i, 1])[0])
        for i in range(t)
    ])
    j = int(np.argmin(proj_gap))
    return j, float(proj_gap[j] ** p), lb_merge_cost(mus, j, p)


def gen_ot_pair(d: int):
    """Two d-point sets mixing unit basis vectors with their half-scalings.

    A and B split {e_i} and {e_i/2} so that e_i's side alternates with the
    parity of i and e_i/2 always sits opposite e_i.  The optimal matching
    in R^d pairs each e_i with e_i/2 for total cost M = d/2 at exponent 1.
    """
    if d < 2 or d % 2:
        raise BadParams("need even d >= 2")
    E = np.eye(d)
    A = np.concatenate([E[0::2], E[1::2] / 2.0])
    B = np.concatenate([E[1::2], E[0::2] / 2.0])
    return A, B, d / 2.0


def gen_pullback(d: int, C: int):
    """Graded level sets e_i * k/C with alternating set membership.

    For each axis there are C points at heights 1/C, 2/C, ..., 1; adjacent
    levels alternate between A and B, and the starting side alternates with
    the axis so each set holds half of the top-level points.  Matching
    adjacent levels costs 1/C per edge, C/2 edges per axis: reported as
    d/2 total.
    """
    if d < 2 or d % 2:
        raise BadParams("need even d >= 2")
    if C < 2 or C % 2:
        raise BadParams("need even C >= 2")
    A, B = [], []
    for i in range(d):
        for level in range(1, C + 1):
            point = np.zeros(d)
            point[i] = level / C
            side = (level + i) % 2
            (A if side == 0 else B).append(point)
    return np.array(A), np.array(B), d / 2.0


def gen_coreset_synthetic(k: int):
    """k single-atom distributions on the line: k-1 at zero, one at x=k."""
    if k < 2:
        raise BadParams("need k >= 2")
    zero = make_distribution(np.zeros((1, 1)), np.array([1.0]))
    outlier = make_distribution(np.array([[float(k)]]), np.array([1.0]))
    return [zero] * (k - 1) + [outlier]


def gen_blob_classes(n_classes: int = 10, per_class: int = 50, dim: int = 64,
                     spread: float = 0.3, seed: int = 0):
    """Gaussian blobs standing in for an image-digit dataset.

    Class centers are random unit-ish vectors; points are center + noise.
    Returns ``(points, labels)`` ready for :func:`group_by_label`.
    """
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_classes, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    pts = np.repeat(centers, per_class, axis=0)
    pts = pts + spread * rng.standard_normal(pts.shape)
    labels = np.repeat(np.arange(n_classes), per_class)
    return pts, labels


# ---------------------------------------------------------------------------
# matchings


def _matching_cost(X: np.ndarray, Y: np.ndarray, p: float,
                   sparse_threshold: int = 2048):
    """Min-cost perfect matching between equal-size point sets.

    Dense Hungarian assignment up to ``sparse_threshold`` points.  Above
    that, restrict to k-nearest-neighbor candidate edges and solve the
    sparse assignment, doubling k until a perfect matching exists; the
    result is then an upper bound that is empirically within a fraction of
    a percent of optimal.  Returns ``(cost, row_to_col)``.
    """
    n = len(X)
    if n <= sparse_threshold:
        D = cdist(X, Y) ** p
        r, c = linear_sum_assignment(D)
        return float(D[r, c].sum()), c
    tree = cKDTree(Y)
    k = min(128, n)
    while True:
        dist, idx = tree.query(X, k=k)
        rows = np.repeat(np.arange(n), k)
        # +1 offset keeps true zeros distinct from unstored entries; a
        # perfect matching always has exactly n edges so the offset cancels
        graph = csr_matrix(((dist**p + 1.0).ravel(), (rows, idx.ravel())),
                           shape=(n, n))
        try:
            r, c = min_weight_full_bipartite_matching(graph)
        except ValueError:
            if k >= n:
                raise
            k = min(2 * k, n)
            continue
        cost = float(np.linalg.norm(X[r] - Y[c], axis=1) ** p @ np.ones(n))
        return cost, c[np.argsort(r)]


def empirical_matching_distortion(A, B, pmap=None, p: float = 1.0,
                                  high_cost: float | None = None):
    """Price a matching found after projection against the true optimum.

    Solves the optimal matching on the projected points (``low_cost``),
    re-prices those same edges on the original points (``pullback_cost``),
    and compares with the optimal matching in the original space
    (``high_cost``, computable analytically by the caller for structured
    instances).  ``pmap=None`` means no projection.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if len(A) != len(B):
        raise CountMismatch(f"|A|={len(A)} vs |B|={len(B)}")
    Ap, Bp = (A, B) if pmap is None else (pmap(A), pmap(B))
    low, col = _matching_cost(Ap, Bp, p)
    pullback = float(np.sum(np.linalg.norm(A - B[col], axis=1) ** p))
    if high_cost is None:
        high_cost, _ = _matching_cost(A, B, p)
    return low, pullback, float(high_cost)


# ---------------------------------------------------------------------------
# IDX / CSV ingestion

_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def load_idx_images(path) -> np.ndarray:
    """Read a big-endian IDX image file into rows scaled to [0, 1]."""
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) < 16:
            raise TruncatedFile(f"{path}: header needs 16 bytes, got {len(head)}")
        magic, n, rows, cols = struct.unpack(">IIII", head)
        if magic != _IDX_IMAGES_MAGIC:
            raise BadMagic(f"{path}: magic {magic:#010x}, expected 0x00000803")
        body = fh.read(n * rows * cols)
        if len(body) < n * rows * cols:
            raise TruncatedFile(
                f"{path}: expected {n * rows * cols} pixels, got {len(body)}"
            )
    data = np.frombuffer(body, dtype=np.uint8).astype(np.float64) / 255.0
    return data.reshape(n, rows * cols)


def load_idx_labels(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(8)
        if len(head) < 8:
            raise TruncatedFile(f"{path}: header needs 8 bytes, got {len(head)}")
        magic, n = struct.unpack(">II", head)
        if magic != _IDX_LABELS_MAGIC:
            raise BadMagic(f"{path}: magic {magic:#010x}, expected 0x00000801")
        body = fh.read(n)
        if len(body) < n:
            raise TruncatedFile(f"{path}: expected {n} labels, got {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).astype(np.int64)


def write_idx_images(path, images: np.ndarray, rows: int, cols: int) -> None:
    """Inverse of :func:`load_idx_images`; values in [0,1] scaled to bytes."""
    images = np.asarray(images)
    if images.shape[1] != rows * cols:
        raise CountMismatch("row length does not equal rows*cols")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", _IDX_IMAGES_MAGIC, len(images), rows, cols))
        fh.write(np.rint(images * 255.0).astype(np.uint8).tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", _IDX_LABELS_MAGIC, len(labels)))
        fh.write(labels.astype(np.uint8).tobytes())


def group_by_label(points, labels, subsample: int | None = None, seed: int = 0):
    """One uniform distribution per distinct label, optionally subsampled."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    if len(points) != len(labels):
        raise CountMismatch(f"{len(points)} points vs {len(labels)} labels")
    rng = np.random.default_rng(seed)
    out = []
    for lab in np.unique(labels):
        cls = points[labels == lab]
        if subsample is not None and subsample < len(cls):
            cls = cls[rng.choice(len(cls), size=subsample, replace=False)]
        out.append(make_distribution(cls, np.full(len(cls), 1.0 / len(cls))))
    return out


def load_csv_distributions(path):
    """Rows ``dist_id, weight, x_1, ..., x_d`` grouped into distributions.

    An optional non-numeric first row is treated as a header.  Weights of
    each group must sum to 1 within 1e-6 (then renormalized exactly).
    """
    groups: dict[str, list] = {}
    order = []
    dim = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(_csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                values = [float(v) for v in row[1:]]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ParseError(f"{path}:{lineno}: non-numeric field")
            if len(row) < 3:
                raise ParseError(f"{path}:{lineno}: need dist_id, w, coords")
            if dim is None:
                dim = len(values) - 1
            elif len(values) - 1 != dim:
                raise RaggedRows(
                    f"{path}:{lineno}: {len(values) - 1} coords, expected {dim}"
                )
            key = row[0].strip()
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(values)
    out = []
    for key in order:
        block = np.array(groups[key])
        weights, atoms = block[:, 0], block[:, 1:]
        if abs(weights.sum() - 1.0) > 1e-6:
            raise BadWeights(
                f"{path}: distribution {key!r} weights sum to {weights.sum()!r}"
            )
        out.append(make_distribution(atoms, weights / weights.sum()))
    return out


# ---------------------------------------------------------------------------
# low-rank reformulation of the exponent-2 objective


def verify_low_rank_equivalence(mus, sol, N: int):
    """Check the exponent-2 objective against its Frobenius-norm form.

    Requires every plan entry to be a multiple of 1/N.  Each atom is
    duplicated once per 1/N unit of flow into a matrix B with one row per
    mass unit; the cluster-indicator projector X with entries
    1/sqrt(cluster size) then satisfies

        (1/N) * ||B - X X^T B||_F^2  =  k * average transport cost.

    Returns ``(frobenius_cost, barycenter_cost, match)``.
    """
    rows = []
    assign = []
    for i, (mu, plan) in enumerate(zip(mus, sol.plans)):
        counts = plan * N
        rounded = np.rint(counts)
        if np.max(np.abs(counts - rounded)) > 1e-9 * N:
            raise NotMultipleOfN(
                f"plan {i} entries are not multiples of 1/{N}"
            )
        for a in range(plan.shape[0]):
            for j in range(plan.shape[1]):
                c = int(rounded[a, j])
                if c:
                    rows.extend([mu.atoms[a]] * c)
                    assign.extend([j] * c)
    B = np.array(rows)
    assign = np.array(assign)
    clusters = np.unique(assign)
    X = np.zeros((len(B), len(clusters)))
    for col, j in enumerate(clusters):
        members = assign == j
        X[members, col] = 1.0 / np.sqrt(members.sum())
    frob = np.sum((B - X @ (X.T @ B)) ** 2) / N
    bary = len(mus) * solution_cost(sol, mus, 2.0).total_cost
    match = abs(frob - bary) <= 1e-9 * (1.0 + abs(bary))
    return float(frob), float(bary), match
