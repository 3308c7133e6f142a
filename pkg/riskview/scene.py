"""Scene primitives: splats, poses, cameras and the planning lattice.

World frame is z-up. A camera looks along world +x rotated by its yaw about
world +z; pitch and roll are always zero. Camera-frame coordinates are
(right, down, forward), so the depth of a point is its third component.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from .errors import ConfigError, SceneFormatError

Vec3 = Tuple[float, float, float]

# 26-neighborhood offsets, fixed order so every search expands identically
NEIGHBOR_OFFSETS: Tuple[Tuple[int, int, int], ...] = tuple(
    (di, dj, dk)
    for di in (-1, 0, 1)
    for dj in (-1, 0, 1)
    for dk in (-1, 0, 1)
    if (di, dj, dk) != (0, 0, 0)
)


@dataclass(frozen=True)
class Splat:
    """One isotropic Gaussian primitive (covariance sigma**2 * I)."""

    mu: Vec3
    sigma: float
    opacity: float
    color: Vec3


@dataclass(frozen=True, eq=False)
class Scene:
    """Ordered splat collection stored column-wise for vectorised math.

    Arrays are copied and frozen on construction; use :func:`scene_from_splats`
    or :meth:`replace_params` to build new scenes.
    """

    mu: np.ndarray
    sigma: np.ndarray
    opacity: np.ndarray
    color: np.ndarray
    bounds_min: Vec3
    bounds_max: Vec3

    def __post_init__(self) -> None:
        arrays = {
            "mu": np.array(self.mu, dtype=np.float64).reshape(-1, 3),
            "sigma": np.array(self.sigma, dtype=np.float64).reshape(-1),
            "opacity": np.array(self.opacity, dtype=np.float64).reshape(-1),
            "color": np.array(self.color, dtype=np.float64).reshape(-1, 3),
        }
        for name, arr in arrays.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "bounds_min", tuple(float(v) for v in self.bounds_min))
        object.__setattr__(self, "bounds_max", tuple(float(v) for v in self.bounds_max))
        _validate_scene(self)

    def __len__(self) -> int:
        return int(self.mu.shape[0])

    @property
    def splats(self) -> List[Splat]:
        return [self.splat(i) for i in range(len(self))]

    def splat(self, index: int) -> Splat:
        return Splat(
            mu=tuple(float(v) for v in self.mu[index]),
            sigma=float(self.sigma[index]),
            opacity=float(self.opacity[index]),
            color=tuple(float(v) for v in self.color[index]),
        )

    def replace_params(
        self,
        *,
        mu: Optional[np.ndarray] = None,
        sigma: Optional[np.ndarray] = None,
        opacity: Optional[np.ndarray] = None,
        color: Optional[np.ndarray] = None,
    ) -> "Scene":
        return Scene(
            mu=self.mu if mu is None else mu,
            sigma=self.sigma if sigma is None else sigma,
            opacity=self.opacity if opacity is None else opacity,
            color=self.color if color is None else color,
            bounds_min=self.bounds_min,
            bounds_max=self.bounds_max,
        )

    def translated(self, offset: Sequence[float]) -> "Scene":
        off = np.asarray(offset, dtype=np.float64)
        return Scene(
            mu=self.mu + off,
            sigma=self.sigma,
            opacity=self.opacity,
            color=self.color,
            bounds_min=tuple(np.asarray(self.bounds_min) + off),
            bounds_max=tuple(np.asarray(self.bounds_max) + off),
        )

    def params(self) -> np.ndarray:
        """Per-splat parameter rows (mu_x, mu_y, mu_z, sigma, opacity, r, g, b)."""
        return np.column_stack([self.mu, self.sigma, self.opacity, self.color])


def _validate_scene(scene: Scene) -> None:
    n = scene.mu.shape[0]
    if n == 0:
        raise SceneFormatError("scene must contain at least one splat")
    if scene.sigma.shape[0] != n or scene.opacity.shape[0] != n or scene.color.shape[0] != n:
        raise SceneFormatError("splat parameter arrays have inconsistent lengths")
    lo = np.asarray(scene.bounds_min)
    hi = np.asarray(scene.bounds_max)
    if np.any(hi < lo):
        raise SceneFormatError("bounds max must not be below bounds min")
    for i in range(n):
        if not np.all(np.isfinite(scene.mu[i])):
            raise SceneFormatError("mu must be finite", splat_index=i)
        if not (scene.sigma[i] > 0.0):
            raise SceneFormatError("sigma must be positive", splat_index=i)
        if not (0.0 <= scene.opacity[i] <= 1.0):
            raise SceneFormatError("opacity must lie in [0, 1]", splat_index=i)
        if not np.all((scene.color[i] >= 0.0) & (scene.color[i] <= 1.0)):
            raise SceneFormatError("color channels must lie in [0, 1]", splat_index=i)
    pad = 3.0 * float(np.max(scene.sigma))
    outside = np.any((scene.mu < lo - pad) | (scene.mu > hi + pad), axis=1)
    if np.any(outside):
        raise SceneFormatError("mean lies outside the scene bounds", splat_index=int(np.argmax(outside)))


def scene_from_splats(splats: Sequence[Splat], bounds_min: Sequence[float], bounds_max: Sequence[float]) -> Scene:
    if not splats:
        raise SceneFormatError("scene must contain at least one splat")
    return Scene(
        mu=np.array([s.mu for s in splats], dtype=np.float64),
        sigma=np.array([s.sigma for s in splats], dtype=np.float64),
        opacity=np.array([s.opacity for s in splats], dtype=np.float64),
        color=np.array([s.color for s in splats], dtype=np.float64),
        bounds_min=tuple(bounds_min),
        bounds_max=tuple(bounds_max),
    )


# --- Scene file I/O ---

def _read_vec3(raw: Any, what: str, index: Optional[int] = None) -> List[float]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise SceneFormatError(f"{what} must be a list of 3 numbers", splat_index=index)
    try:
        return [float(v) for v in raw]
    except (TypeError, ValueError) as exc:
        raise SceneFormatError(f"{what} must be numeric ({exc})", splat_index=index) from exc


def load_scene(path: Union[str, Path]) -> Scene:
    """Read and validate a JSON scene file; splat order is preserved."""
    p = Path(path)
    try:
        with p.open("r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"{p}: not a valid scene document ({exc})") from exc
    if not isinstance(data, dict) or "bounds" not in data or "splats" not in data:
        raise SceneFormatError(f"{p}: expected top-level keys 'bounds' and 'splats'")

    bounds = data["bounds"] or {}
    lo = _read_vec3(bounds.get("min"), "bounds.min")
    hi = _read_vec3(bounds.get("max"), "bounds.max")

    raw_splats = data["splats"]
    if not isinstance(raw_splats, list):
        raise SceneFormatError(f"{p}: 'splats' must be a list")
    mus, sigmas, opacities, colors = [], [], [], []
    for i, s in enumerate(raw_splats):
        if not isinstance(s, dict):
            raise SceneFormatError("entry must be an object", splat_index=i)
        try:
            sigmas.append(float(s["sigma"]))
            opacities.append(float(s["opacity"]))
        except KeyError as exc:
            raise SceneFormatError(f"missing field {exc}", splat_index=i) from exc
        except (TypeError, ValueError) as exc:
            raise SceneFormatError(f"non-numeric field ({exc})", splat_index=i) from exc
        mus.append(_read_vec3(s.get("mu"), "mu", i))
        colors.append(_read_vec3(s.get("color"), "color", i))

    if not mus:
        raise SceneFormatError(f"{p}: scene must contain at least one splat")
    scene = Scene(
        mu=np.array(mus),
        sigma=np.array(sigmas),
        opacity=np.array(opacities),
        color=np.array(colors),
        bounds_min=tuple(lo),
        bounds_max=tuple(hi),
    )
    logger.debug(f"Loaded scene {p.name}: {len(scene)} splats")
    return scene


def save_scene(scene: Scene, path: Union[str, Path]) -> None:
    """Write a scene in the JSON format read by :func:`load_scene`.

    Python floats serialise with shortest round-trip repr, so reloading is bit-exact.
    """
    doc: Dict[str, Any] = {
        "bounds": {"min": list(scene.bounds_min), "max": list(scene.bounds_max)},
        "splats": [
            {
                "mu": [float(v) for v in scene.mu[i]],
                "sigma": float(scene.sigma[i]),
                "opacity": float(scene.opacity[i]),
                "color": [float(v) for v in scene.color[i]],
            }
            for i in range(len(scene))
        ],
    }
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)


# --- Poses and cameras ---

def wrap_angle(angle: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    wrapped = (angle + math.pi) % (2.0 * math.pi) - math.pi
    if wrapped >= math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class Pose:
    position: Vec3
    yaw: float

    @cached_property
    def rotation(self) -> np.ndarray:
        return camera_rotation(self.yaw)

    @property
    def forward(self) -> np.ndarray:
        return np.array([math.cos(self.yaw), math.sin(self.yaw), 0.0])


def make_pose(position: Sequence[float], yaw: float) -> Pose:
    pos = tuple(float(v) for v in position)
    if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
        raise ValueError(f"pose position must be 3 finite numbers, got {position!r}")
    if not math.isfinite(yaw):
        raise ValueError(f"pose yaw must be finite, got {yaw!r}")
    return Pose(position=pos, yaw=wrap_angle(float(yaw)))


def camera_rotation(yaw: float) -> np.ndarray:
    """Rows are the world directions of the camera's right, down and forward axes."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array(
        [
            [s, -c, 0.0],
            [0.0, 0.0, -1.0],
            [c, s, 0.0],
        ]
    )


def camera_transform(pose: Pose, point: Sequence[float]) -> np.ndarray:
    """World point(s) to camera frame; accepts shape (3,) or (n, 3)."""
    p = np.asarray(point, dtype=np.float64) - np.asarray(pose.position)
    return p @ pose.rotation.T


def inverse_camera_transform(pose: Pose, point_cam: Sequence[float]) -> np.ndarray:
    p = np.asarray(point_cam, dtype=np.float64)
    return p @ pose.rotation + np.asarray(pose.position)


def bearing(src: Sequence[float], dst: Sequence[float], default: float = 0.0) -> float:
    """Yaw that faces from src toward dst in the horizontal plane."""
    dx = float(dst[0]) - float(src[0])
    dy = float(dst[1]) - float(src[1])
    if math.hypot(dx, dy) < 1e-12:
        return wrap_angle(default)
    return wrap_angle(math.atan2(dy, dx))


@dataclass(frozen=True)
class CameraIntrinsics:
    focal: float = 32.0
    width: int = 32
    height: int = 32
    near: float = 0.05
    far: float = 8.0

    def __post_init__(self) -> None:
        if not self.focal > 0:
            raise ConfigError(f"camera focal must be positive, got {self.focal}")
        if not (0 < self.near < self.far):
            raise ConfigError(f"camera needs 0 < near < far, got near={self.near} far={self.far}")
        if self.width < 8 or self.height < 8:
            raise ConfigError(f"camera image must be at least 8x8, got {self.width}x{self.height}")

    @property
    def center(self) -> Tuple[float, float]:
        return self.width / 2.0, self.height / 2.0

    @cached_property
    def pixel_grid(self) -> Tuple[np.ndarray, np.ndarray]:
        """Flattened pixel-center coordinates (u, v), row-major."""
        v, u = np.mgrid[0 : self.height, 0 : self.width]
        return u.reshape(-1) + 0.5, v.reshape(-1) + 0.5


# --- Lattice ---

@dataclass(frozen=True)
class Lattice:
    """Rectilinear grid; vertex index = (i * ny + j) * nz + k."""

    origin: Vec3
    spacing: float
    dims: Tuple[int, int, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))
        if not self.spacing > 0:
            raise ConfigError(f"lattice spacing must be positive, got {self.spacing}")
        if len(self.dims) != 3 or min(self.dims) < 2:
            raise ConfigError(f"lattice dims must be three extents >= 2, got {self.dims}")

    @property
    def vertex_count(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + self.spacing * (np.asarray(self.dims) - 1)

    def index(self, i: int, j: int, k: int) -> int:
        _, ny, nz = self.dims
        return (i * ny + j) * nz + k

    def ijk(self, index: int) -> Tuple[int, int, int]:
        _, ny, nz = self.dims
        i, rem = divmod(int(index), ny * nz)
        j, k = divmod(rem, nz)
        return i, j, k

    def ijk_array(self, indices: np.ndarray) -> np.ndarray:
        _, ny, nz = self.dims
        idx = np.asarray(indices, dtype=np.int64)
        i, rem = np.divmod(idx, ny * nz)
        j, k = np.divmod(rem, nz)
        return np.stack([i, j, k], axis=-1)

    def position(self, index: int) -> np.ndarray:
        return np.asarray(self.origin) + self.spacing * np.asarray(self.ijk(index), dtype=np.float64)

    @cached_property
    def _positions(self) -> np.ndarray:
        nx, ny, nz = self.dims
        i, j, k = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
        grid = np.stack([i.reshape(-1), j.reshape(-1), k.reshape(-1)], axis=1).astype(np.float64)
        pos = np.asarray(self.origin) + self.spacing * grid
        pos.setflags(write=False)
        return pos

    def positions(self) -> np.ndarray:
        """All vertex positions in iteration order, shape (vertex_count, 3)."""
        return self._positions

    def contains(self, point: Sequence[float], tol: float = 1e-9) -> bool:
        p = np.asarray(point, dtype=np.float64)
        return bool(np.all(p >= np.asarray(self.origin) - tol) and np.all(p <= self.upper + tol))

    def snap(self, point: Sequence[float]) -> Optional[int]:
        """Nearest vertex, or None when the point is outside the lattice by more than half a spacing."""
        p = np.asarray(point, dtype=np.float64)
        rel = (p - np.asarray(self.origin)) / self.spacing
        ijk = np.rint(rel).astype(np.int64)
        if np.any(np.abs(rel - np.clip(ijk, 0, np.asarray(self.dims) - 1)) > 0.5 + 1e-9):
            return None
        ijk = np.clip(ijk, 0, np.asarray(self.dims) - 1)
        idx = self.index(int(ijk[0]), int(ijk[1]), int(ijk[2]))
        if not self.contains(p):
            dist = float(np.linalg.norm(self.position(idx) - p))
            logger.debug(f"Snapping {tuple(p)} from outside the lattice moved it {dist:.3f} m")
        return idx

    def neighbors(self, index: int) -> Iterator[Tuple[int, float]]:
        """26-connected neighbours with Euclidean edge lengths."""
        nx, ny, nz = self.dims
        i, j, k = self.ijk(index)
        for di, dj, dk in NEIGHBOR_OFFSETS:
            a, b, c = i + di, j + dj, k + dk
            if 0 <= a < nx and 0 <= b < ny and 0 <= c < nz:
                yield self.index(a, b, c), EDGE_LENGTH_FACTORS[abs(di) + abs(dj) + abs(dk)] * self.spacing

    def translated(self, offset: Sequence[float]) -> "Lattice":
        return Lattice(
            origin=tuple(np.asarray(self.origin) + np.asarray(offset, dtype=np.float64)),
            spacing=self.spacing,
            dims=self.dims,
        )


EDGE_LENGTH_FACTORS: Dict[int, float] = {1: 1.0, 2: math.sqrt(2.0), 3: math.sqrt(3.0)}
