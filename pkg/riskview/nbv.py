"""Risk-masked next-best-view selection.

The expected information gain (EIG) of a view is the trace of the proximity
weighted new-view Fisher information against the inverse of the accumulated
prior information. Every matrix involved is diagonal, so the trace reduces to
a sum of per-parameter ratios and splits into one term per splat.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from .errors import ShapeMismatchError
from .planner import PathSegment, SafeSet, graph_distances
from .renderer import N_PARAMS, SplatHessianDiag, splat_hessian_diag
from .risk import RiskField
from .scene import CameraIntrinsics, Scene, make_pose, wrap_angle

DEFAULT_LAMBDA = 1e-6
CONVERGED_STEP = 1e-4

STOP_CONVERGED = "converged"
STOP_EARLY_INFO = "early_info_stop"
STOP_MAX_ITERS = "max_iters"


# --- Masking ---

@dataclass(frozen=True, eq=False)
class MaskRegion:
    centers: np.ndarray  # (K, 3)
    radii: np.ndarray  # (K,)
    member_splats: np.ndarray  # sorted splat indices

    def __len__(self) -> int:
        return int(self.member_splats.shape[0])


def mask_radius(alpha_at, beta1: float, beta2: float):
    """r = beta1 * exp(-beta2 * alpha): riskier waypoints get wider masks."""
    if not (beta1 > 0 and beta2 > 0):
        raise ValueError(f"mask parameters must be positive, got beta1={beta1} beta2={beta2}")
    r = beta1 * np.exp(-beta2 * np.asarray(alpha_at, dtype=np.float64))
    return float(r) if r.ndim == 0 else r


def mask_members(mu: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(mu[:, None, :] - centers[None, :, :], axis=-1)
    return np.flatnonzero(np.any(d <= radii[None, :], axis=1))


def build_mask(segment: PathSegment, field: RiskField, scene: Scene, beta1: float, beta2: float) -> MaskRegion:
    """Union of balls around the segment's waypoints, sized by their risk.

    Args:
        segment: Planned local segment; must hold at least one waypoint.
        field: Risk field the segment was planned on.
        scene: Current map estimate.
        beta1: Radius of the ball around a waypoint with alpha 0.
        beta2: Decay of the radius with alpha.

    Returns:
        The ball centers and radii plus the sorted indices of splats whose mean
        falls inside any ball.
    """
    if len(segment) == 0:
        raise ValueError("cannot build a mask around an empty segment")
    alpha = field.values[np.asarray(segment.vertices, dtype=np.int64)]
    radii = np.atleast_1d(mask_radius(alpha, beta1, beta2))
    centers = np.asarray(segment.waypoints, dtype=np.float64).reshape(-1, 3)
    members = mask_members(scene.mu, centers, radii)
    logger.debug(f"Mask: {members.size}/{len(scene)} splats within {len(segment)} balls (r in [{radii.min():.3f}, {radii.max():.3f}])")
    return MaskRegion(centers=centers, radii=radii, member_splats=members)


# --- Proximity weighting ---

def _proximity_distances(position: Sequence[float], mus: np.ndarray, safe: Optional[SafeSet]) -> np.ndarray:
    """Graph distance on the safe lattice where both ends snap safe and connect, else Euclidean."""
    pos = np.asarray(position, dtype=np.float64)
    dist = np.linalg.norm(mus - pos[None, :], axis=1)
    if safe is None:
        return dist
    lattice = safe.lattice
    src = lattice.snap(pos)
    if src is None or src not in safe:
        logger.debug("Pose vertex is not safe; using Euclidean proximity")
        return dist
    members, gd = graph_distances(safe, src)
    for i in range(mus.shape[0]):
        v = lattice.snap(mus[i])
        if v is None:
            continue
        slot = int(np.searchsorted(members, v))
        if slot < members.shape[0] and members[slot] == v and np.isfinite(gd[slot]):
            dist[i] = gd[slot]
    return dist


def proximity_weight(
    pose,
    mu: Sequence[float],
    w_alpha: float,
    w_beta: float,
    safe: Optional[SafeSet],
) -> float:
    d = _proximity_distances(pose.position, np.asarray(mu, dtype=np.float64).reshape(1, 3), safe)[0]
    return float(w_alpha * math.exp(-w_beta * d))


def proximity_weights(
    position: Sequence[float],
    scene: Scene,
    w_alpha: float,
    w_beta: float,
    safe: Optional[SafeSet],
) -> np.ndarray:
    """v_T(mu_i) for every splat, from one shortest-path sweep."""
    if w_beta == 0:
        return np.full(len(scene), float(w_alpha))
    return w_alpha * np.exp(-w_beta * _proximity_distances(position, scene.mu, safe))


# --- Prior information ---

@dataclass(frozen=True, eq=False)
class PriorInfo:
    """Diagonal prior information per splat and parameter.

    ``info`` holds the summed view Hessians only; the regulariser ``lam`` is
    added on read, so the order in which views were accumulated never shows
    up in ``values``.
    """

    info: np.ndarray  # (n, 8)
    lam: float
    view_count: int = 0

    @property
    def values(self) -> np.ndarray:
        return self.lam + self.info

    @classmethod
    def fresh(cls, n_splats: int, lam: float = DEFAULT_LAMBDA) -> "PriorInfo":
        if not lam > 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        return cls(info=np.zeros((n_splats, N_PARAMS)), lam=float(lam), view_count=0)


def accumulate_prior(prior: PriorInfo, view_hessian: SplatHessianDiag) -> PriorInfo:
    """Fold one view's Hessian diagonal into the prior.

    Args:
        prior: Information accumulated so far.
        view_hessian: Diagonal Gauss-Newton Hessian of the new view, one row per splat.

    Returns:
        A new ``PriorInfo`` with the view added and ``view_count`` bumped.
    """
    h = np.asarray(view_hessian.values)
    if h.shape != prior.info.shape:
        raise ShapeMismatchError(f"view Hessian {h.shape} does not match prior {prior.info.shape}")
    return PriorInfo(info=prior.info + h, lam=prior.lam, view_count=prior.view_count + 1)


def _as_diagonal(m) -> np.ndarray:
    arr = np.asarray(m.values if isinstance(m, PriorInfo) else m, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1] and arr.shape[0] > 1:
        return np.diag(arr).copy()
    return arr.reshape(-1)


def loewner_geq(a, b) -> bool:
    """A >= B in the Loewner order, specialised to diagonal matrices."""
    da, db = _as_diagonal(a), _as_diagonal(b)
    if da.shape != db.shape:
        raise ShapeMismatchError(f"cannot compare {da.shape} with {db.shape}")
    return bool(np.all(da - db >= 0.0))


# --- Information gain ---

def per_splat_information_gain(
    view_hessian: np.ndarray,
    prior_values: np.ndarray,
    weights: np.ndarray,
    members: np.ndarray,
    lam: float,
) -> np.ndarray:
    """Per-splat terms v_i * I_i; zero outside ``members``."""
    out = np.zeros(prior_values.shape[0])
    rows = np.asarray(members, dtype=np.int64)
    if rows.size:
        num = weights[rows, None] * view_hessian[rows] + lam
        out[rows] = np.sum(num / prior_values[rows], axis=1)
    return out


def weighted_information_gain(
    view_hessian: np.ndarray,
    prior_values: np.ndarray,
    weights: np.ndarray,
    members: np.ndarray,
    lam: float,
) -> float:
    """tr((V diag(J^T J) + lam I) H_prior^-1) restricted to the masked parameters."""
    rows = np.asarray(members, dtype=np.int64)
    if rows.size == 0:
        return 0.0
    num = (weights[rows, None] * view_hessian[rows] + lam).reshape(-1)
    return float(np.sum(num / prior_values[rows].reshape(-1)))


def eig(pose, scene: Scene, mask: MaskRegion, prior: PriorInfo, weights: np.ndarray, cam: CameraIntrinsics) -> float:
    """Weighted expected information gain of viewing from ``pose``.

    Args:
        pose: Candidate camera pose.
        scene: Current map estimate.
        mask: Splats that count; everything outside contributes nothing.
        prior: Information accumulated from earlier views.
        weights: Proximity weight per splat (length of the scene).
        cam: Camera intrinsics.

    Returns:
        tr((V H_new + lam I) H_prior^-1) over the masked parameters; 0.0 for an empty mask.
    """
    hess = splat_hessian_diag(scene, pose, cam, indices=mask.member_splats)
    return weighted_information_gain(hess.values, prior.values, np.asarray(weights), mask.member_splats, prior.lam)


def eig_per_splat(
    pose,
    scene: Scene,
    mask: MaskRegion,
    prior: PriorInfo,
    weights: np.ndarray,
    cam: CameraIntrinsics,
    indices: Optional[np.ndarray] = None,
) -> np.ndarray:
    members = mask.member_splats if indices is None else np.asarray(indices, dtype=np.int64)
    hess = splat_hessian_diag(scene, pose, cam, indices=members)
    return per_splat_information_gain(hess.values, prior.values, np.asarray(weights), members, prior.lam)


# --- Yaw optimisation ---

@dataclass(frozen=True)
class NbvParams:
    starts: int = 8
    step: float = 0.5
    max_iters: int = 12
    fd_step: float = 0.01
    eig_stop: float = 0.0
    batch_fraction: float = 1.0
    w_alpha: float = 1.0
    w_beta: float = 1.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.starts < 1 or self.max_iters < 0:
            raise ValueError("starts must be >= 1 and max_iters >= 0")
        if not (self.step > 0 and self.fd_step > 0):
            raise ValueError("step and fd_step must be positive")
        if not (0.0 < self.batch_fraction <= 1.0):
            raise ValueError(f"batch_fraction must lie in (0, 1], got {self.batch_fraction}")
        if not (self.w_alpha > 0 and self.w_beta >= 0):
            raise ValueError("proximity weights need w_alpha > 0 and w_beta >= 0")


class TraceEntry(NamedTuple):
    start_id: int
    iteration: int
    yaw: float
    eig: float


@dataclass(frozen=True)
class NbvResult:
    yaw_star: float
    eig_star: float
    trace: List[TraceEntry] = field(default_factory=list)
    stop_reason: str = STOP_CONVERGED


def _sample_batch(weights: np.ndarray, fraction: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Draw ceil(fraction * n) positions with replacement, probability proportional to weight."""
    n = weights.shape[0]
    p = weights / np.sum(weights)
    m = max(1, int(math.ceil(fraction * n)))
    idx = rng.choice(n, size=m, replace=True, p=p)
    return idx, p


PerSplatGradients = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def sampled_gradient(
    per_splat_gradients: PerSplatGradients,
    weights: np.ndarray,
    fraction: float,
    rng: np.random.Generator,
) -> float:
    """Importance-sampled estimate of the summed per-splat gradient.

    Args:
        per_splat_gradients: Either the full gradient vector, or a callable
            that returns the gradients at the positions it is given. The
            callable form only pays for the sampled splats.
        weights: Sampling weights (proximity weights), one per position.
        fraction: Share of positions drawn per estimate; 1.0 sums exactly.
        rng: Source of the draws.

    Returns:
        mean(g[idx] / p[idx]) over the draws, which is unbiased for the sum.
    """
    w = np.asarray(weights, dtype=np.float64)
    if callable(per_splat_gradients):
        gradients_at = per_splat_gradients
    else:
        g_all = np.asarray(per_splat_gradients, dtype=np.float64)

        def gradients_at(positions: np.ndarray) -> np.ndarray:
            return g_all[positions]

    if fraction >= 1.0:
        return float(np.sum(gradients_at(np.arange(w.shape[0]))))
    idx, p = _sample_batch(w, fraction, rng)
    unique, inverse = np.unique(idx, return_inverse=True)
    g = np.asarray(gradients_at(unique), dtype=np.float64)[inverse]
    return float(np.mean(g / p[idx]))


def yaw_sweep(
    waypoint: Sequence[float],
    scene: Scene,
    mask: MaskRegion,
    prior: PriorInfo,
    weights: np.ndarray,
    cam: CameraIntrinsics,
    samples: int = 360,
) -> Tuple[np.ndarray, np.ndarray]:
    yaws = -math.pi + 2.0 * math.pi * np.arange(samples) / samples
    eigs = np.array([eig(make_pose(waypoint, float(y)), scene, mask, prior, weights, cam) for y in yaws])
    return yaws, eigs


def optimize_yaw(
    waypoint: Sequence[float],
    scene: Scene,
    mask: MaskRegion,
    prior: PriorInfo,
    safe: Optional[SafeSet],
    cam: CameraIntrinsics,
    params: NbvParams,
    nominal_yaw: Optional[float] = None,
    weights: Optional[np.ndarray] = None,
) -> NbvResult:
    """Multi-start gradient ascent of the weighted EIG over the yaw circle.

    Each step moves ``step`` radians along the sign of the (possibly
    mini-batched) finite-difference gradient. Where the gradient vanishes both
    neighbours ``yaw +- step`` are tried. A trial that does not improve EIG is
    rejected and halves the step. A start ends when the step drops below
    1e-4 rad, after ``max_iters`` trials, or once its EIG falls under
    ``eig_stop``. The nominal yaw, when given, is evaluated as start 0.
    """
    if len(mask) == 0:
        yaw = wrap_angle(nominal_yaw or 0.0)
        return NbvResult(yaw_star=yaw, eig_star=0.0, trace=[], stop_reason=STOP_EARLY_INFO)

    if weights is None:
        weights = proximity_weights(waypoint, scene, params.w_alpha, params.w_beta, safe)
    weights = np.asarray(weights, dtype=np.float64)
    members = mask.member_splats
    member_weights = weights[members]
    rng = np.random.default_rng(params.seed)
    h = params.fd_step
    batched = params.batch_fraction < 1.0

    def objective(yaw: float) -> float:
        return eig(make_pose(waypoint, yaw), scene, mask, prior, weights, cam)

    def gradient(yaw: float) -> float:
        def member_gradients(positions: np.ndarray) -> np.ndarray:
            picked = members[positions]
            plus = eig_per_splat(make_pose(waypoint, yaw + h), scene, mask, prior, weights, cam, picked)
            minus = eig_per_splat(make_pose(waypoint, yaw - h), scene, mask, prior, weights, cam, picked)
            return (plus - minus)[picked] / (2.0 * h)

        return sampled_gradient(member_gradients, member_weights, params.batch_fraction, rng)

    starts: List[float] = []
    if nominal_yaw is not None:
        starts.append(wrap_angle(nominal_yaw))
    starts.extend(wrap_angle(-math.pi + 2.0 * math.pi * s / params.starts) for s in range(params.starts))

    trace: List[TraceEntry] = []
    best = (-math.inf, 0.0, STOP_CONVERGED)
    for start_id, yaw in enumerate(starts):
        value = objective(yaw)
        trace.append(TraceEntry(start_id, 0, yaw, value))
        step = params.step
        reason = STOP_MAX_ITERS
        g: Optional[float] = None
        for it in range(1, params.max_iters + 1):
            if value < params.eig_stop:
                reason = STOP_EARLY_INFO
                break
            if g is None or batched:
                g = gradient(yaw)
            if g == 0.0:
                candidates = [wrap_angle(yaw + step), wrap_angle(yaw - step)]
            else:
                candidates = [wrap_angle(yaw + math.copysign(step, g))]
            trial_value, trial = -math.inf, yaw
            for candidate in candidates:
                candidate_value = objective(candidate)
                trace.append(TraceEntry(start_id, it, candidate, candidate_value))
                if candidate_value > trial_value:
                    trial_value, trial = candidate_value, candidate
            if trial_value > value:
                yaw, value = trial, trial_value
                g = None
            else:
                step *= 0.5
            if step < CONVERGED_STEP:
                reason = STOP_CONVERGED
                break
        logger.trace(f"yaw start {start_id}: best eig={value:.6g} at yaw={yaw:.4f} ({reason})")
        if value > best[0]:
            best = (value, yaw, reason)

    eig_star, yaw_star, reason = best
    return NbvResult(yaw_star=yaw_star, eig_star=eig_star, trace=trace, stop_reason=reason)


def write_trace_csv(rows: Sequence[Tuple[int, TraceEntry]], path: Union[str, Path]) -> None:
    """Rows are (waypoint number, trace entry)."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["waypoint", "start_id", "iter", "yaw", "eig"])
        for wp, entry in rows:
            writer.writerow([wp, entry.start_id, entry.iteration, repr(float(entry.yaw)), repr(float(entry.eig))])
