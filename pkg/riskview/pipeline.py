"""Episode orchestration: plan, look, assimilate, repeat.

One episode walks a coarse reference trajectory subgoal by subgoal. Each
subgoal rebuilds the risk field from the current map estimate, replans a safe
local segment, and at every waypoint picks the most informative yaw inside
the risk mask, observes the ground-truth scene there and folds that view into
the estimate and its Fisher prior.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from .errors import ConfigError, PlanBlockedError, RiskViewError
from .nbv import (
    DEFAULT_LAMBDA,
    NbvParams,
    PriorInfo,
    TraceEntry,
    accumulate_prior,
    build_mask,
    eig,
    optimize_yaw,
    proximity_weights,
    write_trace_csv,
    yaw_sweep,
)
from .planner import (
    PathSegment,
    concat_segments,
    filter_safe,
    plan_segment,
    risk_ignoring_path,
    write_path_csv,
)
from .renderer import (
    PSNR_SENTINEL,
    RenderedImage,
    frame_bundle,
    refine_map,
    render,
    splat_hessian_diag,
)
from .risk import DEFAULT_EPSILON, RiskField, build_risk_field, write_risk_csv
from .scene import CameraIntrinsics, Lattice, Pose, Scene, bearing, inverse_camera_transform, load_scene, make_pose

CORRIDOR_SAMPLES = 32
STATUS_COMPLETED = "completed"
STATUS_BLOCKED = "blocked"

ENV_SEED = "RISKVIEW_SEED"
ENV_OUTPUT_DIR = "RISKVIEW_OUTPUT_DIR"
ENV_LOG_LEVEL = "RISKVIEW_LOG_LEVEL"


# --- Configuration ---

@dataclass(frozen=True)
class RefineParams:
    steps: int = 10
    color_step: float = 5e-2
    opacity_step: float = 5e-2
    geometry_step: float = 5e-3

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ConfigError(f"refine steps must be >= 0, got {self.steps}")
        if min(self.color_step, self.opacity_step, self.geometry_step) < 0:
            raise ConfigError("refine step sizes must be non-negative")


@dataclass(frozen=True)
class EpisodeConfig:
    """Everything one episode needs. ``margin``, ``delta`` and ``corridor_radii`` default from the lattice spacing."""

    gt_scene: Path
    estimate_scene: Path
    lattice: Lattice
    trajectory: Tuple[Tuple[float, float, float], ...]
    epsilon: float = DEFAULT_EPSILON
    gamma: float = 0.10
    margin: Optional[float] = None
    delta: Optional[float] = None
    beta1: float = 0.2
    beta2: float = 1.1
    camera: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    nbv: NbvParams = field(default_factory=NbvParams)
    refine: RefineParams = field(default_factory=RefineParams)
    depth_weight: float = 0.5
    lam: float = DEFAULT_LAMBDA
    eig_stop_fraction: float = 0.01
    corridor_radii: Optional[Tuple[float, ...]] = None
    seed: int = 0
    risk_workers: int = 1
    output_dir: Optional[Path] = None

    def __post_init__(self) -> None:
        spacing = self.lattice.spacing
        traj = tuple(tuple(float(c) for c in p) for p in self.trajectory)
        object.__setattr__(self, "trajectory", traj)
        if self.margin is None:
            object.__setattr__(self, "margin", 4.0 * spacing)
        if self.delta is None:
            object.__setattr__(self, "delta", 3.0 * spacing)
        if self.corridor_radii is None:
            object.__setattr__(self, "corridor_radii", (spacing, 2.0 * spacing, 3.0 * spacing))
        else:
            object.__setattr__(self, "corridor_radii", tuple(float(r) for r in self.corridor_radii))

        if len(traj) < 2 or any(len(p) != 3 for p in traj):
            raise ConfigError("trajectory needs at least two 3D points")
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        for name in ("gamma", "margin", "delta", "beta1", "beta2", "lam"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not (0.0 <= self.depth_weight < 1.0):
            raise ConfigError(f"depth_weight must lie in [0, 1), got {self.depth_weight}")
        if not (0.0 <= self.eig_stop_fraction < 1.0):
            raise ConfigError(f"eig_stop_fraction must lie in [0, 1), got {self.eig_stop_fraction}")
        radii = self.corridor_radii
        if not radii or any(r <= 0 for r in radii) or list(radii) != sorted(radii):
            raise ConfigError(f"corridor radii must be positive and ascending, got {radii}")
        if self.risk_workers < 1:
            raise ConfigError("risk_workers must be >= 1")


def _section(raw: Dict[str, Any], key: str, cls, path: Path):
    body = raw.get(key, {})
    if not isinstance(body, dict):
        raise ConfigError(f"{path}: '{key}' must be an object")
    try:
        return cls(**body)
    except TypeError as exc:
        raise ConfigError(f"{path}: bad '{key}' section ({exc})") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: bad '{key}' section ({exc})") from exc


def load_config(path: Union[str, Path]) -> EpisodeConfig:
    """Parse a JSON episode config; scene paths resolve against the config's directory.

    ``RISKVIEW_SEED`` overrides the seed and ``RISKVIEW_OUTPUT_DIR`` fills in a
    missing output directory.
    """
    p = Path(path)
    try:
        with p.open("r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{p}: config must be a JSON object")

    missing = [k for k in ("gt_scene", "estimate_scene", "lattice", "trajectory") if k not in raw]
    if missing:
        raise ConfigError(f"{p}: missing required keys {missing}")

    base = p.parent
    lattice = _section(raw, "lattice", Lattice, p)
    camera = _section(raw, "camera", CameraIntrinsics, p)
    nbv = _section(raw, "nbv", NbvParams, p)
    refine = _section(raw, "refine", RefineParams, p)

    scalars = {
        k: raw[k]
        for k in (
            "epsilon", "gamma", "margin", "delta", "beta1", "beta2", "depth_weight",
            "lam", "eig_stop_fraction", "corridor_radii", "seed", "risk_workers",
        )
        if k in raw
    }
    seed_env = os.getenv(ENV_SEED)
    if seed_env:
        try:
            scalars["seed"] = int(seed_env)
        except ValueError as exc:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {seed_env!r}") from exc
    out = raw.get("output_dir") or os.getenv(ENV_OUTPUT_DIR)

    try:
        config = EpisodeConfig(
            gt_scene=(base / raw["gt_scene"]).resolve(),
            estimate_scene=(base / raw["estimate_scene"]).resolve(),
            lattice=lattice,
            trajectory=tuple(tuple(pt) for pt in raw["trajectory"]),
            camera=camera,
            nbv=nbv,
            refine=refine,
            output_dir=Path(out) if out else None,
            **scalars,
        )
    except TypeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    logger.debug(f"Loaded config {p.name}: {len(config.trajectory)} reference points, seed={config.seed}")
    return config


# --- Report types ---

class WaypointView(NamedTuple):
    subgoal: int
    k: int
    position: Tuple[float, float, float]
    nominal_yaw: float
    yaw: float
    nominal_eig: float
    optimized_eig: float
    stop_reason: str


class CorridorRow(NamedTuple):
    radius: float
    psnr: float
    depth_mae: float
    samples: int


class SafetyMeasure(NamedTuple):
    min_alpha: float
    mean_alpha: float


@dataclass
class EpisodeReport:
    status: str
    seed: int
    views: List[WaypointView]
    segments: List[PathSegment]
    executed: PathSegment
    baseline: PathSegment
    executed_safety: SafetyMeasure
    baseline_safety: SafetyMeasure
    corridor: List[CorridorRow]
    traces: List[Tuple[int, TraceEntry]]
    frames: List[RenderedImage] = field(repr=False, default_factory=list)
    gt_field: Optional[RiskField] = field(repr=False, default=None)
    blocked_reason: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        gains = [eig_gain_percent(v.nominal_eig, v.optimized_eig) for v in self.views]
        applicable = [g for g in gains if g is not None]
        return {
            "status": self.status,
            "blocked_reason": self.blocked_reason,
            "seed": self.seed,
            "executed": {
                "length": self.executed.total_length,
                "waypoints": [list(map(float, w)) for w in self.executed.waypoints],
                "safety_min": self.executed_safety.min_alpha,
                "safety_mean": self.executed_safety.mean_alpha,
            },
            "baseline": {
                "length": self.baseline.total_length,
                "safety_min": self.baseline_safety.min_alpha,
                "safety_mean": self.baseline_safety.mean_alpha,
            },
            "segments": [
                {
                    "vertices": list(s.vertices),
                    "length": s.total_length,
                    "reached_proxy": s.reached_proxy,
                    "fallback": s.fallback,
                }
                for s in self.segments
            ],
            "views": [
                {
                    "subgoal": v.subgoal,
                    "k": v.k,
                    "position": list(v.position),
                    "nominal_yaw": v.nominal_yaw,
                    "yaw": v.yaw,
                    "nominal_eig": v.nominal_eig,
                    "optimized_eig": v.optimized_eig,
                    "eig_gain_percent": g,
                    "stop_reason": v.stop_reason,
                }
                for v, g in zip(self.views, gains)
            ],
            "mean_eig_gain_percent": float(np.mean(applicable)) if applicable else None,
            "corridor": [r._asdict() for r in self.corridor],
        }


# --- Metrics ---

def safety_measure(path: PathSegment, field: RiskField) -> SafetyMeasure:
    """Min and mean alpha over the path's waypoints."""
    if len(path) == 0:
        raise ValueError("safety measure of an empty path")
    alpha = field.values[np.asarray(path.vertices, dtype=np.int64)]
    return SafetyMeasure(min_alpha=float(np.min(alpha)), mean_alpha=float(np.mean(alpha)))


def baseline_comparison(
    executed: PathSegment, baseline: PathSegment, field: RiskField
) -> Tuple[SafetyMeasure, SafetyMeasure]:
    """Safety of the executed and the risk-ignoring path on one field."""
    return safety_measure(executed, field), safety_measure(baseline, field)


def eig_gain_percent(nominal: float, optimized: float) -> Optional[float]:
    """Percent EIG improvement over the nominal view; None when nominal <= 0."""
    if not nominal > 0:
        return None
    return 100.0 * (optimized - nominal) / nominal


def _sample_corridor_poses(
    pts: np.ndarray, radius: float, samples: int, rng: np.random.Generator
) -> List[Pose]:
    """Poses uniform in the union of ``radius`` balls around ``pts``, with uniform yaw.

    A point drawn from a random ball is kept with probability 1 / (number of
    balls covering it), which removes the overlap bias.
    """
    poses: List[Pose] = []
    while len(poses) < samples:
        center = pts[rng.integers(0, pts.shape[0])]
        direction = rng.standard_normal(3)
        direction /= max(float(np.linalg.norm(direction)), 1e-12)
        point = center + direction * radius * float(np.cbrt(rng.random()))
        cover = int(np.count_nonzero(np.linalg.norm(pts - point[None, :], axis=1) <= radius))
        keep = rng.random() * max(cover, 1) < 1.0
        yaw = float(rng.uniform(-math.pi, math.pi))
        if keep:
            poses.append(make_pose(point, yaw))
    return poses


def _surface_distance(image: RenderedImage, pose: Pose, cam: CameraIntrinsics, pts: np.ndarray) -> np.ndarray:
    """Per-pixel distance from the rendered surface point to the nearest path waypoint; inf on empty pixels."""
    t_final = image.final_transmittance.reshape(-1)
    coverage = 1.0 - t_final
    hit = coverage > 0.0
    dist = np.full(t_final.shape[0], np.inf)
    if not np.any(hit):
        return dist
    # expected depth of the splats alone, with the background share removed
    z = (image.depth.reshape(-1)[hit] - t_final[hit] * cam.far) / coverage[hit]
    u, v = cam.pixel_grid
    c0x, c0y = cam.center
    local = np.column_stack([(u[hit] - c0x) / cam.focal * z, (v[hit] - c0y) / cam.focal * z, z])
    world = inverse_camera_transform(pose, local)
    dist[hit] = np.min(np.linalg.norm(world[:, None, :] - pts[None, :, :], axis=-1), axis=1)
    return dist


def corridor_eval(
    gt: Scene,
    estimate: Scene,
    executed: Sequence[Sequence[float]],
    radii: Sequence[float],
    cam: CameraIntrinsics,
    seed: int,
    samples: int = CORRIDOR_SAMPLES,
) -> List[CorridorRow]:
    """Reconstruction quality of the estimate inside spherical corridors around the executed path.

    Evaluation poses are drawn once, uniformly in the widest corridor. For a
    radius R only pixels whose ground-truth or estimated surface point lies
    within R of a path waypoint score; the rest count as exact. PSNR comes from
    the pooled color MSE and depth MAE is pooled over all pixels of all views,
    so a wider corridor never scores better than a narrower one.
    """
    if list(radii) != sorted(radii):
        raise ValueError(f"corridor radii must be ascending, got {list(radii)}")
    pts = np.asarray(executed, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0 or not radii:
        raise ValueError("corridor evaluation needs a path and at least one radius")
    rng = np.random.default_rng(seed)
    poses = _sample_corridor_poses(pts, float(radii[-1]), samples, rng)

    sq_sums = np.zeros(len(radii))
    abs_sums = np.zeros(len(radii))
    n_pix = cam.width * cam.height
    for pose in poses:
        a = render(gt, pose, cam)
        b = render(estimate, pose, cam)
        nearest = np.minimum(_surface_distance(a, pose, cam, pts), _surface_distance(b, pose, cam, pts))
        sq = np.sum((a.color - b.color).reshape(-1, 3) ** 2, axis=1)
        absd = np.abs(np.minimum(a.depth, cam.far) - np.minimum(b.depth, cam.far)).reshape(-1)
        for r_idx, radius in enumerate(radii):
            inside = nearest <= radius
            sq_sums[r_idx] += float(np.sum(np.where(inside, sq, 0.0)))
            abs_sums[r_idx] += float(np.sum(np.where(inside, absd, 0.0)))

    rows: List[CorridorRow] = []
    for r_idx, radius in enumerate(radii):
        mse = sq_sums[r_idx] / (3.0 * n_pix * samples)
        score = PSNR_SENTINEL if mse <= 0.0 else min(PSNR_SENTINEL, 10.0 * math.log10(1.0 / mse))
        rows.append(CorridorRow(float(radius), float(score), float(abs_sums[r_idx] / (n_pix * samples)), samples))
        logger.debug(f"Corridor r={radius:.3f}: PSNR={score:.2f} dB, depth MAE={rows[-1].depth_mae:.4f} m")
    return rows


# --- Episode ---

def assimilate_view(
    estimate: Scene,
    prior: PriorInfo,
    pose: Pose,
    observation: RenderedImage,
    cfg: EpisodeConfig,
) -> Tuple[Scene, PriorInfo]:
    """Add the view's Fisher information to the prior, then refine the map against it."""
    prior = accumulate_prior(prior, splat_hessian_diag(estimate, pose, cfg.camera))
    refined = refine_map(
        estimate,
        [(pose, observation)],
        cfg.refine.steps,
        cfg.refine.color_step,
        cfg.depth_weight,
        cam=cfg.camera,
        geometry_step=cfg.refine.geometry_step,
        opacity_step=cfg.refine.opacity_step,
    )
    return refined, prior


def _check_segment_safe(segment: PathSegment, field: RiskField, gamma: float) -> None:
    alpha = field.values[np.asarray(segment.vertices, dtype=np.int64)]
    if np.any(alpha < gamma):
        bad = int(np.argmin(alpha))
        raise RiskViewError(f"planned waypoint {bad} has alpha {alpha[bad]:.4f} below gamma {gamma:.4f}")


def run_episode(config: EpisodeConfig, out_dir: Optional[Union[str, Path]] = None) -> EpisodeReport:
    """Run the full plan/observe/assimilate loop and score the result.

    With ``out_dir`` the episode also logs to ``episode.log`` there and writes
    its artifacts with :func:`write_report`.
    """
    out = Path(out_dir) if out_dir is not None else config.output_dir
    sink_id = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        sink_id = logger.add(out / "episode.log", level="DEBUG", mode="w")
    try:
        report = _run(config)
        if out is not None:
            write_report(report, out)
        return report
    finally:
        if sink_id is not None:
            logger.remove(sink_id)


def _run(config: EpisodeConfig) -> EpisodeReport:
    gt = load_scene(config.gt_scene)
    estimate = load_scene(config.estimate_scene)
    cam = config.camera
    lattice = config.lattice
    trajectory = config.trajectory
    prior = PriorInfo.fresh(len(estimate), config.lam)

    logger.info("=" * 70)
    logger.info(f"Episode: {len(trajectory)} reference points, {len(gt)} ground-truth splats, seed={config.seed}")
    logger.info("=" * 70)

    segments: List[PathSegment] = []
    views: List[WaypointView] = []
    traces: List[Tuple[int, TraceEntry]] = []
    frames: List[RenderedImage] = []
    status, blocked_reason = STATUS_COMPLETED, None
    eig_stop: Optional[float] = None
    position = np.asarray(trajectory[0], dtype=np.float64)
    yaw_prev = bearing(trajectory[0], trajectory[1])

    for j in range(len(trajectory) - 1):
        z_next = trajectory[j + 1]
        risk_field = build_risk_field(estimate, lattice, config.epsilon, workers=config.risk_workers)
        try:
            segment = plan_segment(risk_field, position, z_next, config.gamma, config.margin, config.delta)
        except PlanBlockedError as exc:
            if j == 0:
                raise
            logger.warning(f"Subgoal {j + 1}: plan blocked ({exc.diagnostic})")
            status, blocked_reason = STATUS_BLOCKED, exc.diagnostic
            break
        _check_segment_safe(segment, risk_field, config.gamma)
        segments.append(segment)
        logger.info(
            f"Subgoal {j + 1}/{len(trajectory) - 1}: {len(segment)} waypoints, "
            f"length {segment.total_length:.3f} m{' (proxy)' if segment.reached_proxy else ''}"
        )

        mask = build_mask(segment, risk_field, estimate, config.beta1, config.beta2)
        wps = segment.waypoints
        for k in range(len(segment)):
            if j > 0 and k == 0:
                continue
            wp = wps[k]
            target = wps[k + 1] if k + 1 < len(segment) else z_next
            nominal = bearing(wp, target, default=yaw_prev)
            weights = proximity_weights(wp, estimate, config.nbv.w_alpha, config.nbv.w_beta, segment.safe)
            nominal_eig = eig(make_pose(wp, nominal), estimate, mask, prior, weights, cam)
            params = replace(
                config.nbv,
                eig_stop=0.0 if eig_stop is None else eig_stop,
                seed=config.seed + len(views),
            )
            result = optimize_yaw(wp, estimate, mask, prior, segment.safe, cam, params, nominal_yaw=nominal, weights=weights)
            if eig_stop is None and result.eig_star > 0:
                eig_stop = config.eig_stop_fraction * result.eig_star
            traces.extend((len(views), entry) for entry in result.trace)

            pose = make_pose(wp, result.yaw_star)
            observation = render(gt, pose, cam)
            frames.append(observation)
            estimate, prior = assimilate_view(estimate, prior, pose, observation, config)
            views.append(
                WaypointView(
                    subgoal=j + 1,
                    k=k,
                    position=tuple(float(c) for c in wp),
                    nominal_yaw=nominal,
                    yaw=result.yaw_star,
                    nominal_eig=nominal_eig,
                    optimized_eig=result.eig_star,
                    stop_reason=result.stop_reason,
                )
            )
            gain = eig_gain_percent(nominal_eig, result.eig_star)
            logger.info(
                f"  waypoint {k}: yaw {result.yaw_star:+.3f} rad, EIG {result.eig_star:.4g}"
                + (f" (+{gain:.1f}% vs nominal)" if gain is not None else "")
            )
            yaw_prev = result.yaw_star
        position = wps[-1]

    if not segments:
        raise PlanBlockedError("no segment could be planned")
    executed = concat_segments(lattice, segments)
    baseline = risk_ignoring_path(lattice, trajectory)
    gt_field = build_risk_field(gt, lattice, config.epsilon, workers=config.risk_workers)
    executed_safety, baseline_safety = baseline_comparison(executed, baseline, gt_field)
    corridor = corridor_eval(gt, estimate, executed.waypoints, config.corridor_radii, cam, config.seed)

    logger.info("=" * 70)
    logger.info(
        f"Executed: {executed.total_length:.3f} m, min alpha {executed_safety.min_alpha:.3f} | "
        f"risk-ignoring: {baseline.total_length:.3f} m, min alpha {baseline_safety.min_alpha:.3f}"
    )
    logger.info(f"Status: {status}, {len(views)} views assimilated")
    logger.info("=" * 70)

    return EpisodeReport(
        status=status,
        seed=config.seed,
        views=views,
        segments=segments,
        executed=executed,
        baseline=baseline,
        executed_safety=executed_safety,
        baseline_safety=baseline_safety,
        corridor=corridor,
        traces=traces,
        frames=frames,
        gt_field=gt_field,
        blocked_reason=blocked_reason,
    )


# --- Output ---

def write_report(report: EpisodeReport, out_dir: Union[str, Path]) -> Path:
    """Write report.json plus the CSV tables and observation frames; returns the JSON path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    with report_path.open("w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
    if report.gt_field is not None:
        write_path_csv(report.executed, report.gt_field, out / "path.csv")
        write_risk_csv(report.gt_field, out / "riskfield.csv")
    write_trace_csv(report.traces, out / "eig_trace.csv")
    with (out / "corridor.csv").open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["radius", "psnr", "depth_mae", "samples"])
        for row in report.corridor:
            writer.writerow([repr(row.radius), repr(row.psnr), repr(row.depth_mae), row.samples])
    frame_bundle(report.frames, out / "frames", stem="view")
    logger.info(f"Report written to {report_path}")
    return report_path


# --- CLI helpers ---

def lattice_for_scene(scene: Scene, spacing: float) -> Lattice:
    """Lattice covering the scene bounds at the given spacing."""
    lo = np.asarray(scene.bounds_min, dtype=np.float64)
    hi = np.asarray(scene.bounds_max, dtype=np.float64)
    dims = np.maximum(np.floor((hi - lo) / spacing + 1e-9).astype(int) + 1, 2)
    return Lattice(origin=tuple(lo), spacing=spacing, dims=tuple(int(d) for d in dims))


def sweep_yaw_at(config: EpisodeConfig, ijk: Tuple[int, int, int], samples: int = 360) -> Tuple[np.ndarray, np.ndarray]:
    """Dense EIG-vs-yaw at one lattice vertex with a fresh prior and the estimate's risk field."""
    lattice = config.lattice
    if not all(0 <= c < d for c, d in zip(ijk, lattice.dims)):
        raise ConfigError(f"vertex {ijk} lies outside lattice dims {lattice.dims}")
    estimate = load_scene(config.estimate_scene)
    field = build_risk_field(estimate, lattice, config.epsilon, workers=config.risk_workers)
    vertex = lattice.index(*ijk)
    safe = filter_safe(field, np.arange(lattice.vertex_count), config.gamma)
    segment = PathSegment(
        waypoints=lattice.position(vertex).reshape(1, 3),
        vertices=(vertex,),
        reached_proxy=False,
        total_length=0.0,
        safe=safe,
    )
    mask = build_mask(segment, field, estimate, config.beta1, config.beta2)
    waypoint = lattice.position(vertex)
    weights = proximity_weights(waypoint, estimate, config.nbv.w_alpha, config.nbv.w_beta, safe)
    prior = PriorInfo.fresh(len(estimate), config.lam)
    return yaw_sweep(waypoint, estimate, mask, prior, weights, config.camera, samples)
