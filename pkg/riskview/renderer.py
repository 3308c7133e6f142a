"""Forward splatting renderer with analytic parameter Jacobians.

Each visible splat is drawn as an isotropic screen-space Gaussian of radius
focal * sigma / depth and alpha-composited front to back. The rendering
function f(T, w) used for Fisher information is the per-pixel concatenation
(r, g, b, depth / far); all derivatives hold the depth ordering fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from .errors import ShapeMismatchError
from .scene import CameraIntrinsics, Pose, Scene, Splat, camera_transform

RHO_MAX = 0.999
T_MIN = 1e-4
SIGMA_MIN = 1e-4
PSNR_SENTINEL = 99.0
N_PARAMS = 8
N_CHANNELS = 4
PARAM_NAMES = ("mu_x", "mu_y", "mu_z", "sigma", "opacity", "color_r", "color_g", "color_b")
_BACKGROUND = np.array([0.0, 0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ProjectedSplat:
    splat_index: int
    center2d: Tuple[float, float]
    radius2d: float
    depth: float


@dataclass(frozen=True, eq=False)
class RenderedImage:
    color: np.ndarray  # (H, W, 3)
    depth: np.ndarray  # (H, W) meters
    final_transmittance: np.ndarray  # (H, W)
    far: float


@dataclass(frozen=True, eq=False)
class SplatHessianDiag:
    """diag(J^T J) per splat, one row of PARAM_NAMES-ordered entries per splat."""

    values: np.ndarray  # (n, 8)

    def __len__(self) -> int:
        return int(self.values.shape[0])


def _disc_hits_image(cx: np.ndarray, cy: np.ndarray, reach: np.ndarray, cam: CameraIntrinsics) -> np.ndarray:
    dx = np.maximum(np.maximum(-cx, cx - cam.width), 0.0)
    dy = np.maximum(np.maximum(-cy, cy - cam.height), 0.0)
    return dx * dx + dy * dy <= reach * reach


def project_splat(splat: Splat, pose: Pose, cam: CameraIntrinsics, splat_index: int = 0) -> Optional[ProjectedSplat]:
    """Pinhole projection of one splat; None means culled."""
    x, y, z = camera_transform(pose, splat.mu)
    if not (cam.near < z < cam.far):
        return None
    c0x, c0y = cam.center
    cx = c0x + cam.focal * x / z
    cy = c0y + cam.focal * y / z
    radius = cam.focal * splat.sigma / z
    if not _disc_hits_image(np.array(cx), np.array(cy), np.array(3.0 * radius), cam):
        return None
    return ProjectedSplat(splat_index=splat_index, center2d=(float(cx), float(cy)), radius2d=float(radius), depth=float(z))


@dataclass(eq=False)
class _Composite:
    """Forward state for the visible splats, rows sorted front to back."""

    order: np.ndarray  # scene indices of rows
    pc: np.ndarray  # (m, 3) camera-frame means
    cx: np.ndarray
    cy: np.ndarray
    radius: np.ndarray
    g: np.ndarray  # (m, P) footprint
    rho: np.ndarray  # (m, P) effective blending coefficients
    live: np.ndarray  # (m, P) pixels where rho is differentiable (active and unclamped)
    t_before: np.ndarray  # (m, P)
    t_final: np.ndarray  # (P,)
    values: np.ndarray  # (m, 4) r, g, b, depth / far
    opacity: np.ndarray
    sigma: np.ndarray
    rotation: np.ndarray  # world -> camera

    @property
    def weights(self) -> np.ndarray:
        return self.t_before * self.rho


def _composite(scene: Scene, pose: Pose, cam: CameraIntrinsics) -> _Composite:
    pc_all = camera_transform(pose, scene.mu)
    z_all = pc_all[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        c0x, c0y = cam.center
        cx_all = c0x + cam.focal * pc_all[:, 0] / z_all
        cy_all = c0y + cam.focal * pc_all[:, 1] / z_all
        r_all = cam.focal * scene.sigma / z_all
    in_depth = (z_all > cam.near) & (z_all < cam.far)
    visible = in_depth.copy()
    visible[in_depth] = _disc_hits_image(cx_all[in_depth], cy_all[in_depth], 3.0 * r_all[in_depth], cam)

    vis_idx = np.flatnonzero(visible)
    # stable sort keeps scene order for equal depths
    order = vis_idx[np.argsort(z_all[vis_idx], kind="stable")]

    u, v = cam.pixel_grid
    n_pix = u.shape[0]
    cx, cy, radius = cx_all[order], cy_all[order], r_all[order]
    opacity = scene.opacity[order]

    r2 = (u[None, :] - cx[:, None]) ** 2 + (v[None, :] - cy[:, None]) ** 2
    g = np.exp(-0.5 * r2 / radius[:, None] ** 2)
    raw = opacity[:, None] * g
    clamped = raw > RHO_MAX
    rho = np.minimum(raw, RHO_MAX)

    if order.size:
        t_incl = np.cumprod(1.0 - rho, axis=0)
        t_before = np.vstack([np.ones((1, n_pix)), t_incl[:-1]])
        active = t_before >= T_MIN
        rho = np.where(active, rho, 0.0)
        t_incl = np.cumprod(1.0 - rho, axis=0)
        t_before = np.vstack([np.ones((1, n_pix)), t_incl[:-1]])
        t_final = t_incl[-1]
    else:
        active = np.zeros((0, n_pix), dtype=bool)
        t_before = np.zeros((0, n_pix))
        t_final = np.ones(n_pix)

    values = np.column_stack([scene.color[order], pc_all[order, 2] / cam.far]) if order.size else np.zeros((0, N_CHANNELS))
    return _Composite(
        order=order,
        pc=pc_all[order],
        cx=cx,
        cy=cy,
        radius=radius,
        g=g,
        rho=rho,
        live=active & ~clamped,
        t_before=t_before,
        t_final=t_final,
        values=values,
        opacity=opacity,
        sigma=scene.sigma[order],
        rotation=pose.rotation,
    )


def _channels(comp: _Composite) -> np.ndarray:
    """Per-pixel (r, g, b, depth / far), shape (P, 4)."""
    return comp.weights.T @ comp.values + comp.t_final[:, None] * _BACKGROUND[None, :]


def render(scene: Scene, pose: Pose, cam: CameraIntrinsics) -> RenderedImage:
    comp = _composite(scene, pose, cam)
    out = _channels(comp)
    h, w = cam.height, cam.width
    return RenderedImage(
        color=out[:, :3].reshape(h, w, 3),
        depth=(out[:, 3] * cam.far).reshape(h, w),
        final_transmittance=comp.t_final.reshape(h, w),
        far=cam.far,
    )


def render_vector(scene: Scene, pose: Pose, cam: CameraIntrinsics) -> np.ndarray:
    """f(T, w): row-major pixels, channels (r, g, b, depth / far)."""
    return _channels(_composite(scene, pose, cam)).reshape(-1)


def _partials(comp: _Composite, cam: CameraIntrinsics, rows: Optional[np.ndarray] = None) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (parameter index, dOutput/dParam) with shape (len(rows), P, 4)."""
    if rows is None:
        rows = np.arange(comp.order.size)
    w_all = comp.weights
    wv = w_all[:, :, None] * comp.values[:, None, :]
    after_incl = np.cumsum(wv[::-1], axis=0)[::-1]
    after = after_incl - wv + comp.t_final[None, :, None] * _BACKGROUND[None, None, :]

    rho = comp.rho[rows]
    t_before = comp.t_before[rows]
    w = w_all[rows]
    d_rho = t_before[:, :, None] * comp.values[rows][:, None, :] - after[rows] / (1.0 - rho)[:, :, None]
    live = comp.live[rows]
    d_rho = np.where(live[:, :, None], d_rho, 0.0)

    g = comp.g[rows]
    op = comp.opacity[rows][:, None]
    f = cam.focal
    u, v = cam.pixel_grid
    cx = comp.cx[rows][:, None]
    cy = comp.cy[rows][:, None]
    radius = comp.radius[rows][:, None]
    x, y, z = (comp.pc[rows, a][:, None] for a in range(3))

    dg_dcx = g * (u[None, :] - cx) / radius**2
    dg_dcy = g * (v[None, :] - cy) / radius**2
    r2 = (u[None, :] - cx) ** 2 + (v[None, :] - cy) ** 2
    dg_dr = g * r2 / radius**3

    d_g = d_rho * op[:, :, None]
    d_x = d_g * (dg_dcx * f / z)[:, :, None]
    d_y = d_g * (dg_dcy * f / z)[:, :, None]
    d_z = d_g * (dg_dcx * (-f * x / z**2) + dg_dcy * (-f * y / z**2) + dg_dr * (-radius / z))[:, :, None]
    d_z[:, :, 3] += w / cam.far

    # camera frame = R (mu - position), so dO/dmu_j = sum_a dO/dpc_a * R[a, j]
    rot = comp.rotation
    for j in range(3):
        yield j, d_x * rot[0, j] + d_y * rot[1, j] + d_z * rot[2, j]
    yield 3, d_g * (dg_dr * f / z)[:, :, None]
    yield 4, d_rho * g[:, :, None]
    for c in range(3):
        d_c = np.zeros_like(d_rho)
        d_c[:, :, c] = w
        yield 5 + c, d_c



def splat_jacobian(scene: Scene, pose: Pose, cam: CameraIntrinsics) -> np.ndarray:
    """Dense df/dw, shape (n_splats, len(f), 8); culled splats are zero."""
    comp = _composite(scene, pose, cam)
    n_out = cam.width * cam.height * N_CHANNELS
    jac = np.zeros((len(scene), n_out, N_PARAMS))
    if comp.order.size == 0:
        return jac
    for p, d in _partials(comp, cam):
        jac[comp.order, :, p] = d.reshape(d.shape[0], -1)
    return jac


def splat_hessian_diag(
    scene: Scene,
    pose: Pose,
    cam: CameraIntrinsics,
    indices: Optional[Sequence[int]] = None,
) -> SplatHessianDiag:
    """diag(J^T J) per splat. With ``indices`` only those rows are computed; the rest stay zero."""
    comp = _composite(scene, pose, cam)
    out = np.zeros((len(scene), N_PARAMS))
    if comp.order.size == 0:
        return SplatHessianDiag(values=out)
    if indices is None:
        rows = np.arange(comp.order.size)
    else:
        rows = np.flatnonzero(np.isin(comp.order, np.asarray(indices, dtype=np.int64)))
        if rows.size == 0:
            return SplatHessianDiag(values=out)
    target = comp.order[rows]
    for p, d in _partials(comp, cam, rows):
        if p >= 5:
            break
        out[target, p] = np.sum(d * d, axis=(1, 2))
    w = comp.weights[rows]
    out[target, 5:] = np.sum(w * w, axis=1)[:, None]
    return SplatHessianDiag(values=out)


def _check_same_shape(rendered: RenderedImage, target: RenderedImage) -> None:
    if rendered.color.shape != target.color.shape or rendered.depth.shape != target.depth.shape:
        raise ShapeMismatchError(
            f"image shapes differ: {rendered.color.shape} vs {target.color.shape}"
        )


def render_loss(rendered: RenderedImage, target: RenderedImage, depth_weight: float) -> float:
    """Joint L1 loss: mean |color error| + depth_weight * mean |depth error| / far."""
    _check_same_shape(rendered, target)
    color_term = float(np.mean(np.abs(rendered.color - target.color)))
    depth_term = float(np.mean(np.abs(rendered.depth - target.depth))) / rendered.far
    return color_term + depth_weight * depth_term


def loss_gradient(
    scene: Scene,
    pose: Pose,
    cam: CameraIntrinsics,
    target: RenderedImage,
    depth_weight: float,
) -> Tuple[float, np.ndarray]:
    """Loss at ``pose`` and its gradient with respect to every splat parameter, shape (n, 8)."""
    comp = _composite(scene, pose, cam)
    out = _channels(comp)
    n_pix = out.shape[0]
    tgt = np.column_stack([target.color.reshape(-1, 3), target.depth.reshape(-1) / target.far])
    if tgt.shape != out.shape:
        raise ShapeMismatchError(f"target has {tgt.shape[0]} pixels, camera renders {n_pix}")
    diff = out - tgt
    loss = float(np.mean(np.abs(diff[:, :3]))) + depth_weight * float(np.mean(np.abs(diff[:, 3])))

    d_out = np.sign(diff)
    d_out[:, :3] /= 3.0 * n_pix
    d_out[:, 3] *= depth_weight / n_pix

    grad = np.zeros((len(scene), N_PARAMS))
    if comp.order.size:
        for p, d in _partials(comp, cam):
            grad[comp.order, p] = np.einsum("mpc,pc->m", d, d_out)
    return loss, grad


def refine_map(
    scene: Scene,
    views: Sequence[Tuple[Pose, RenderedImage]],
    steps: int,
    step_size: float,
    depth_weight: float,
    *,
    cam: Optional[CameraIntrinsics] = None,
    geometry_step: Optional[float] = None,
    opacity_step: Optional[float] = None,
) -> Scene:
    """Plain gradient descent on the summed view loss; returns a new scene.

    ``step_size`` drives color (and opacity unless ``opacity_step`` is given);
    positions and sigma use ``geometry_step``, defaulting to a tenth of it.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if steps == 0 or not views:
        return scene
    cam = cam or CameraIntrinsics()
    geo = step_size / 10.0 if geometry_step is None else geometry_step
    opa = step_size if opacity_step is None else opacity_step
    step_vec = np.array([geo, geo, geo, geo, opa, step_size, step_size, step_size])

    params = scene.params()
    current = scene
    for it in range(steps):
        total = 0.0
        grad = np.zeros_like(params)
        for pose, target in views:
            loss, g = loss_gradient(current, pose, cam, target, depth_weight)
            total += loss
            grad += g
        params = params - step_vec[None, :] * grad
        params[:, 3] = np.maximum(params[:, 3], SIGMA_MIN)
        params[:, 4:] = np.clip(params[:, 4:], 0.0, 1.0)
        current = scene.replace_params(mu=params[:, :3], sigma=params[:, 3], opacity=params[:, 4], color=params[:, 5:])
        logger.trace(f"refine step {it}: loss={total:.6f}")
    return current


# --- Image metrics and export ---

def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR with peak 1.0; identical images report the 99 dB sentinel."""
    mse = float(np.mean((np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) ** 2))
    if mse <= 0.0:
        return PSNR_SENTINEL
    return min(PSNR_SENTINEL, 10.0 * float(np.log10(1.0 / mse)))


def depth_mae(a: np.ndarray, b: np.ndarray, far: float) -> float:
    return float(np.mean(np.abs(np.minimum(a, far) - np.minimum(b, far))))


def write_ppm(color: np.ndarray, path: Union[str, Path]) -> None:
    """Binary P6 pixmap, 8 bits per channel."""
    img = np.clip(np.rint(np.asarray(color) * 255.0), 0, 255).astype(np.uint8)
    h, w = img.shape[:2]
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def write_pgm(gray: np.ndarray, path: Union[str, Path], maxval: int = 255) -> None:
    """Binary P5 graymap; values already scaled to [0, maxval]."""
    dtype = ">u2" if maxval > 255 else np.uint8
    img = np.clip(np.rint(np.asarray(gray, dtype=np.float64)), 0, maxval).astype(dtype)
    h, w = img.shape
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("wb") as f:
        f.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        f.write(img.tobytes())


def write_depth_pgm(depth: np.ndarray, far: float, path: Union[str, Path]) -> None:
    """16-bit graymap, depth / far scaled to 65535."""
    write_pgm(np.asarray(depth) / far * 65535.0, path, maxval=65535)


def frame_bundle(images: List[RenderedImage], directory: Union[str, Path], stem: str = "frame") -> List[Path]:
    out: List[Path] = []
    d = Path(directory)
    for i, img in enumerate(images):
        target = d / f"{stem}_{i:03d}.ppm"
        write_ppm(img.color, target)
        out.append(target)
    return out
