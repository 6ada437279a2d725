"""Discrete optimal transport and affine-map fitting for equalizer codebooks.

Couplings between weighted 2-D point clouds are computed either by a
log-domain Sinkhorn solver (entropic regularization) or by an exact
linear-programming solver used as a reference.  An affine map between two
clouds is fit by alternating between the entropic coupling of the current
image and a weighted ridge regression onto the coupling's barycentric
projection.  A codebook collects one fitted map per (source atom, target
atom) pair together with cached atom-to-atom transfer rows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.special import logsumexp

from .gridworld import ACTIONS
from .mismatch import info_transfer_row

Symbol = tuple[float, float]

FORMAT_VERSION = 1

_EMD_SIZE_LIMIT = 10_000


class SinkhornError(RuntimeError):
    """Raised when the Sinkhorn iteration fails to reach its residual target."""


@dataclass(frozen=True)
class PointCloud:
    """Weighted points in the plane; weights are a probability vector."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must have shape (n, 2)")
        if pts.shape[0] < 2:
            raise ValueError("need at least two points")
        if w.shape != (pts.shape[0],):
            raise ValueError("weights must have shape (n,)")
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    @property
    def size(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class Coupling:
    """Transport plan; gamma[k, l] is mass moved from source k to target l."""

    gamma: np.ndarray

    def marginal_residuals(self, src: PointCloud, tgt: PointCloud) -> tuple[float, float]:
        row = float(np.abs(self.gamma.sum(axis=1) - src.weights).sum())
        col = float(np.abs(self.gamma.sum(axis=0) - tgt.weights).sum())
        return row, col


def cost_matrix(src_points: np.ndarray, tgt_points: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances."""
    diff = src_points[:, None, :] - tgt_points[None, :, :]
    return np.einsum("klc,klc->kl", diff, diff)


def transport_cost(coupling: Coupling, src: PointCloud, tgt: PointCloud) -> float:
    """Objective value sum(gamma * C) on the original (uncentered) points."""
    return float((coupling.gamma * cost_matrix(src.points, tgt.points)).sum())


def mean_pairwise_sqdist(cloud: PointCloud) -> float:
    """Weighted mean squared distance between two independent cloud draws."""
    mean = cloud.weights @ cloud.points
    centered = cloud.points - mean
    return 2.0 * float(cloud.weights @ np.einsum("kc,kc->k", centered, centered))


def default_epsilon(src: PointCloud, tgt: PointCloud) -> float:
    """Scale-aware regularization: 20% of the mean within-cloud pairwise spread.

    Tighter values land in the degenerate regime when the two clouds are
    near-congruent blobs (the common case for per-atom map fitting) and can
    stall for tens of thousands of iterations.
    """
    scale = 0.5 * (mean_pairwise_sqdist(src) + mean_pairwise_sqdist(tgt))
    if scale <= 0.0:
        return 1e-9
    return 0.2 * scale


def sinkhorn(src: PointCloud, tgt: PointCloud, epsilon: float,
             max_iter: int = 1000) -> Coupling:
    """Entropy-regularized coupling via log-domain Sinkhorn iterations.

    Stops once both marginal L1 residuals drop below 1e-9, or after
    max_iter sweeps.  A residual still above 1e-6 at that point raises
    SinkhornError.  For the squared Euclidean cost the optimal coupling is
    invariant to translating either cloud, so both are centered first;
    this only improves numerical conditioning.

    The potentials are warmed up on a geometric ladder of larger
    regularizers before the main loop; small-epsilon runs stall for
    hundreds of sweeps without this.  The warm-up is deterministic and
    does not count against max_iter.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    a = src.weights
    b = tgt.weights
    x = src.points - a @ src.points
    y = tgt.points - b @ tgt.points
    cost = cost_matrix(x, y)
    with np.errstate(divide="ignore"):
        loga = np.log(a)
        logb = np.log(b)
    f = np.zeros(src.size)
    g = np.zeros(tgt.size)
    level = max(float(cost.max()) * 0.5, epsilon)
    while level > epsilon * 1.0001:
        for _ in range(8):
            f = level * (loga - logsumexp((g[None, :] - cost) / level, axis=1))
            g = level * (logb - logsumexp((f[:, None] - cost) / level, axis=0))
        level *= 0.7
    gamma = None
    residual = math.inf
    for _ in range(max_iter):
        f = epsilon * (loga - logsumexp((g[None, :] - cost) / epsilon, axis=1))
        g = epsilon * (logb - logsumexp((f[:, None] - cost) / epsilon, axis=0))
        gamma = np.exp((f[:, None] + g[None, :] - cost) / epsilon)
        row = float(np.abs(gamma.sum(axis=1) - a).sum())
        col = float(np.abs(gamma.sum(axis=0) - b).sum())
        residual = max(row, col)
        if residual < 1e-9:
            break
    if residual > 1e-6:
        raise SinkhornError(
            f"marginal residual {residual:.3e} after {max_iter} iterations "
            f"(epsilon={epsilon:.3e})"
        )
    return Coupling(gamma=gamma)


def exact_emd(src: PointCloud, tgt: PointCloud) -> Coupling:
    """Exact transportation plan from a linear-programming solver."""
    n_s, n_t = src.size, tgt.size
    if n_s * n_t > _EMD_SIZE_LIMIT:
        raise ValueError(f"problem size {n_s}x{n_t} exceeds {_EMD_SIZE_LIMIT} cells")
    cost = cost_matrix(src.points, tgt.points)
    # Row-sum and column-sum equality constraints on the flattened plan;
    # one constraint is redundant and left to the solver's presolve.
    rows = sparse.kron(sparse.identity(n_s, format="csr"), np.ones((1, n_t)))
    cols = sparse.kron(np.ones((1, n_s)), sparse.identity(n_t, format="csr"))
    a_eq = sparse.vstack([rows, cols], format="csr")
    b_eq = np.concatenate([src.weights, tgt.weights])
    result = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0.0, None),
                     method="highs")
    if not result.success:
        raise RuntimeError(f"transportation LP failed: {result.message}")
    return Coupling(gamma=result.x.reshape(n_s, n_t))


@dataclass(frozen=True)
class AffineMap:
    """Plane map x -> linear @ x + offset."""

    linear: tuple[tuple[float, float], tuple[float, float]]
    offset: tuple[float, float]

    def __call__(self, x: Symbol) -> Symbol:
        (a, b), (c, d) = self.linear
        o1, o2 = self.offset
        return (a * x[0] + b * x[1] + o1, c * x[0] + d * x[1] + o2)

    @staticmethod
    def identity() -> "AffineMap":
        return AffineMap(linear=((1.0, 0.0), (0.0, 1.0)), offset=(0.0, 0.0))

    @staticmethod
    def from_arrays(linear: np.ndarray, offset: np.ndarray) -> "AffineMap":
        return AffineMap(
            linear=(
                (float(linear[0, 0]), float(linear[0, 1])),
                (float(linear[1, 0]), float(linear[1, 1])),
            ),
            offset=(float(offset[0]), float(offset[1])),
        )

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.linear, dtype=np.float64), np.array(self.offset, dtype=np.float64)


def _weighted_ridge_fit(x: np.ndarray, w: np.ndarray, targets: np.ndarray,
                        ridge: float) -> tuple[np.ndarray, np.ndarray]:
    """Minimize sum_k w_k ||A x_k + b - t_k||^2 + ridge ||A - I||_F^2."""
    design = np.column_stack([x, np.ones(x.shape[0])])
    wd = design * w[:, None]
    lhs = design.T @ wd
    rhs = design.T @ (targets * w[:, None])
    penalty = np.diag([1.0, 1.0, 0.0])
    anchor = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    try:
        theta = np.linalg.solve(lhs + ridge * penalty, rhs + ridge * anchor)
    except np.linalg.LinAlgError:
        # Rank-deficient design: fall back to a strictly positive ridge.
        bumped = max(ridge, 1e-8)
        theta = np.linalg.solve(lhs + bumped * penalty, rhs + bumped * anchor)
    linear = theta[:2, :].T
    offset = theta[2, :]
    return linear, offset


def fit_affine_map(src: PointCloud, tgt: PointCloud, ridge: float = 1e-4,
                   n_rounds: int = 10, epsilon: float | None = None,
                   max_iter: int = 1000) -> AffineMap:
    """Fit an affine map pushing `src` onto `tgt` by alternating transport.

    Each round couples the current image of the source cloud to the target
    cloud, projects every source point to the coupling's barycentric
    target (zero-mass rows are dropped), and refits the map by weighted
    ridge least squares pulled toward the identity.  Stops early when the
    coupling's Frobenius change falls below 1e-10.
    """
    if n_rounds < 1:
        raise ValueError("n_rounds must be at least 1")
    if ridge < 0.0:
        raise ValueError("ridge must be nonnegative")
    if epsilon is None:
        epsilon = default_epsilon(src, tgt)
    linear = np.eye(2)
    offset = np.zeros(2)
    previous = None
    for _ in range(n_rounds):
        image = src.points @ linear.T + offset
        coupling = sinkhorn(PointCloud(image, src.weights), tgt, epsilon, max_iter)
        if previous is not None:
            change = float(np.linalg.norm(coupling.gamma - previous))
            if change < 1e-10:
                break
        previous = coupling.gamma
        row_mass = coupling.gamma.sum(axis=1)
        keep = row_mass > 0.0
        barycentric = coupling.gamma[keep] @ tgt.points / row_mass[keep, None]
        linear, offset = _weighted_ridge_fit(
            src.points[keep], src.weights[keep], barycentric, ridge
        )
    return AffineMap.from_arrays(linear, offset)


@dataclass(frozen=True)
class CodebookParams:
    epsilon: float | None = None
    ridge: float = 1e-4
    n_rounds: int = 10
    max_iter: int = 1000


@dataclass(frozen=True)
class TransformCodebook:
    """One fitted map per (source atom, target atom) pair, with cached transfers.

    info_transfer[i][j] is the landing distribution over target atoms for
    source-atom-i symbols pushed through maps[i][j].  atom_correspondence
    pairs each source atom with the target atom sharing its action label.
    """

    maps: tuple[tuple[AffineMap, ...], ...]
    info_transfer: tuple[tuple[tuple[float, ...], ...], ...]
    atom_correspondence: tuple[int, ...]
    source_seed: int
    target_seed: int

    def map_for(self, i: int, j: int) -> AffineMap:
        return self.maps[i][j]

    def cached_row(self, i: int, j: int) -> tuple[float, ...]:
        return self.info_transfer[i][j]


def atom_cloud(lang, atom: int) -> PointCloud:
    """Encoded symbols of the observations in one source atom, mu-weighted."""
    points = []
    weights = []
    for obs, w in lang.mu:
        sym = lang.encode(obs)
        if lang.atom_of(sym) == atom:
            points.append(sym)
            weights.append(w)
    if not points:
        raise ValueError(f"atom {atom} has no observations under the distribution")
    w = np.array(weights)
    return PointCloud(points=np.array(points), weights=w / w.sum())


def build_codebook(src, tgt, params: CodebookParams = CodebookParams()) -> TransformCodebook:
    """Fit all atom-pair maps between two languages and cache transfer rows."""
    n = len(ACTIONS)
    src_clouds = []
    tgt_clouds = []
    for i in range(n):
        try:
            src_clouds.append(atom_cloud(src, i))
        except ValueError as exc:
            raise ValueError(f"source {exc}") from None
        try:
            tgt_clouds.append(atom_cloud(tgt, i))
        except ValueError as exc:
            raise ValueError(f"target {exc}") from None
    maps = []
    rows = []
    for i in range(n):
        maps_i = []
        rows_i = []
        for j in range(n):
            fitted = fit_affine_map(
                src_clouds[i],
                tgt_clouds[j],
                ridge=params.ridge,
                n_rounds=params.n_rounds,
                epsilon=params.epsilon,
                max_iter=params.max_iter,
            )
            maps_i.append(fitted)
            rows_i.append(info_transfer_row(src, tgt, fitted, i))
        maps.append(tuple(maps_i))
        rows.append(tuple(rows_i))
    # Atoms are indexed by the action they decode to, on both sides, so the
    # action-label correspondence is the identity permutation.
    kappa = tuple(range(n))
    return TransformCodebook(
        maps=tuple(maps),
        info_transfer=tuple(rows),
        atom_correspondence=kappa,
        source_seed=src.seed,
        target_seed=tgt.seed,
    )


def codebook_to_dict(codebook: TransformCodebook) -> dict:
    entries = []
    n = len(codebook.maps)
    for i in range(n):
        for j in range(n):
            fitted = codebook.maps[i][j]
            entries.append(
                {
                    "i": i,
                    "j": j,
                    "linear": [list(row) for row in fitted.linear],
                    "offset": list(fitted.offset),
                    "info_transfer_row_cached": list(codebook.info_transfer[i][j]),
                }
            )
    return {
        "format_version": FORMAT_VERSION,
        "source_seed": codebook.source_seed,
        "target_seed": codebook.target_seed,
        "entries": entries,
    }


def codebook_from_dict(data: dict) -> TransformCodebook:
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported codebook format_version {version!r}")
    n = len(ACTIONS)
    maps: list[list[AffineMap | None]] = [[None] * n for _ in range(n)]
    rows: list[list[tuple[float, ...] | None]] = [[None] * n for _ in range(n)]
    for entry in data["entries"]:
        i, j = int(entry["i"]), int(entry["j"])
        linear = entry["linear"]
        maps[i][j] = AffineMap(
            linear=(
                (float(linear[0][0]), float(linear[0][1])),
                (float(linear[1][0]), float(linear[1][1])),
            ),
            offset=(float(entry["offset"][0]), float(entry["offset"][1])),
        )
        rows[i][j] = tuple(float(v) for v in entry["info_transfer_row_cached"])
    if any(m is None for row in maps for m in row):
        raise ValueError("codebook entries do not cover all atom pairs")
    return TransformCodebook(
        maps=tuple(tuple(row) for row in maps),
        info_transfer=tuple(tuple(r) for r in rows),
        atom_correspondence=tuple(range(n)),
        source_seed=int(data["source_seed"]),
        target_seed=int(data["target_seed"]),
    )


def save_codebook(codebook: TransformCodebook, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(codebook_to_dict(codebook), f, indent=2)
        f.write("\n")


def load_codebook(path: str) -> TransformCodebook:
    with open(path, "r", encoding="utf-8") as f:
        return codebook_from_dict(json.load(f))
