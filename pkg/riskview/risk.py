"""Average Value-at-Risk machinery over signed distances to splats.

Conventions follow the lower tail: AVaR_eps(d) = E[d | d < VaR_eps(d)], so a
larger value means more clearance and therefore a safer point.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from loguru import logger
from scipy import special

from .renderer import write_pgm
from .scene import Lattice, Scene, Splat

DEGENERATE_DISTANCE = 1e-9
DEFAULT_EPSILON = 0.05
_CHUNK = 4096

# rational approximation of the standard normal quantile (relative error ~1.15e-9)
_QA = (-3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2,
       1.383577518672690e2, -3.066479806614716e1, 2.506628277459239)
_QB = (-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2,
       6.680131188771972e1, -1.328068155288572e1, 1.0)
_QC = (-7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838,
       -2.549732539343734, 4.374664141464968, 2.938163982698783)
_QD = (7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996,
       3.754408661907416, 1.0)
_P_LOW = 0.02425


def _normal_quantile(p_low: np.ndarray, p_high: np.ndarray) -> np.ndarray:
    """Quantile at p_low, given p_low and p_high = 1 - p_low computed separately."""
    out = np.empty_like(p_low)
    low = p_low < _P_LOW
    high = p_high < _P_LOW
    mid = ~(low | high)
    if np.any(low):
        q = np.sqrt(-2.0 * np.log(p_low[low]))
        out[low] = np.polyval(_QC, q) / np.polyval(_QD, q)
    if np.any(high):
        q = np.sqrt(-2.0 * np.log(p_high[high]))
        out[high] = -np.polyval(_QC, q) / np.polyval(_QD, q)
    if np.any(mid):
        q = p_low[mid] - 0.5
        r = q * q
        out[mid] = q * np.polyval(_QA, r) / np.polyval(_QB, r)
    return out


def inverse_erf(x: Union[float, np.ndarray], newton_steps: int = 2) -> Union[float, np.ndarray]:
    """erf^-1 via a rational initial guess and Newton refinement against scipy's erf.

    Works on |x| (erf is odd) and refines on erfc so the residual keeps full
    precision near +-1.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) >= 1.0):
        raise ValueError(f"inverse_erf needs |x| < 1, got {x!r}")
    a = np.atleast_1d(np.abs(arr))
    one_minus = 1.0 - a
    y = _normal_quantile((1.0 + a) / 2.0, one_minus / 2.0) / math.sqrt(2.0)
    for _ in range(newton_steps):
        residual = np.where(y > 0.0, one_minus - special.erfc(y), special.erf(y) - a)
        slope = 2.0 / math.sqrt(math.pi) * np.exp(-y * y)
        y = y - residual / slope
    y = (np.sign(np.atleast_1d(arr)) * y).reshape(arr.shape)
    if np.ndim(x) == 0:
        return float(y)
    return y


class SignedDistanceStats(NamedTuple):
    mean: float
    stddev: float
    degenerate: bool


def signed_distance_stats(q: Sequence[float], splat: Splat) -> SignedDistanceStats:
    """Distribution of the signed distance from q to a splat sample: N(||mu - q||, sigma^2).

    At q == mu the direction is undefined; the mean is reported as 0, which
    treats the point as maximally unsafe.
    """
    diff = np.asarray(splat.mu, dtype=np.float64) - np.asarray(q, dtype=np.float64)
    dist = float(np.sqrt(np.sum(diff**2)))
    if dist <= DEGENERATE_DISTANCE:
        return SignedDistanceStats(mean=0.0, stddev=float(splat.sigma), degenerate=True)
    return SignedDistanceStats(mean=dist, stddev=float(splat.sigma), degenerate=False)


def signed_distance(q: Sequence[float], mu: Sequence[float], x: np.ndarray) -> np.ndarray:
    """Realised signed distance <x - q, (mu - q)/||mu - q||> for sample(s) x."""
    qv = np.asarray(q, dtype=np.float64)
    direction = np.asarray(mu, dtype=np.float64) - qv
    direction = direction / np.linalg.norm(direction)
    return (np.asarray(x, dtype=np.float64) - qv) @ direction


def _check_epsilon(epsilon: float) -> None:
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"risk level epsilon must lie in (0, 1), got {epsilon}")


def avar_sigma_factor(epsilon: float) -> float:
    """kappa(eps) with AVaR = mean - stddev * kappa(eps)."""
    _check_epsilon(epsilon)
    iota = inverse_erf(2.0 * epsilon - 1.0)
    return 1.0 / (math.sqrt(2.0 * math.pi) * epsilon * math.exp(iota * iota))


def avar_normal(mean, stddev, epsilon: float):
    """Closed-form lower-tail AVaR of N(mean, stddev^2)."""
    kappa = avar_sigma_factor(epsilon)
    if np.any(np.asarray(stddev) < 0):
        raise ValueError("stddev must be non-negative")
    result = np.asarray(mean, dtype=np.float64) - np.asarray(stddev, dtype=np.float64) * kappa
    if result.ndim == 0:
        return float(result)
    return result


def _alpha_rows(points: np.ndarray, scene: Scene, kappa: float) -> np.ndarray:
    """Risk for each row of points; same elementwise operations as risk_at."""
    diff = scene.mu[None, :, :] - points[:, None, :]
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    dist = np.where(dist <= DEGENERATE_DISTANCE, 0.0, dist)
    return np.min(dist - scene.sigma[None, :] * kappa, axis=1)


def risk_at(q: Sequence[float], scene: Scene, epsilon: float) -> float:
    """alpha(q): minimum AVaR of the signed distance over all splats."""
    kappa = avar_sigma_factor(epsilon)
    return float(_alpha_rows(np.asarray(q, dtype=np.float64).reshape(1, 3), scene, kappa)[0])


@dataclass(frozen=True, eq=False)
class RiskField:
    lattice: Lattice
    values: np.ndarray
    epsilon: float

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if vals.shape[0] != self.lattice.vertex_count:
            raise ValueError(f"risk field has {vals.shape[0]} values for {self.lattice.vertex_count} vertices")
        if not np.all(np.isfinite(vals)):
            raise ValueError("risk field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def value_at(self, point: Sequence[float]) -> Optional[float]:
        idx = self.lattice.snap(point)
        return None if idx is None else float(self.values[idx])

    @property
    def min(self) -> float:
        return float(np.min(self.values))

    @property
    def max(self) -> float:
        return float(np.max(self.values))


def build_risk_field(scene: Scene, lattice: Lattice, epsilon: float, workers: int = 1) -> RiskField:
    """Evaluate alpha at every vertex in iteration order.

    Vertex chunks are disjoint, so any worker count gives identical values.
    """
    kappa = avar_sigma_factor(epsilon)
    points = lattice.positions()
    values = np.empty(points.shape[0])
    bounds = [(s, min(s + _CHUNK, points.shape[0])) for s in range(0, points.shape[0], _CHUNK)]

    def _fill(span):
        lo, hi = span
        values[lo:hi] = _alpha_rows(points[lo:hi], scene, kappa)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_fill, bounds))
    else:
        for span in bounds:
            _fill(span)
    logger.debug(
        f"Risk field over {points.shape[0]} vertices / {len(scene)} splats: "
        f"alpha in [{values.min():.3f}, {values.max():.3f}]"
    )
    return RiskField(lattice=lattice, values=values, epsilon=epsilon)


# --- Export ---

def write_risk_csv(field: RiskField, path: Union[str, Path]) -> None:
    """One row per vertex in index order: i, j, k, position, alpha (floats written round-trip exact)."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    ijk = field.lattice.ijk_array(np.arange(field.lattice.vertex_count))
    pos = field.lattice.positions()
    with p.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["i", "j", "k", "x", "y", "z", "alpha"])
        for v in range(field.lattice.vertex_count):
            writer.writerow([*ijk[v].tolist(), *(repr(float(c)) for c in pos[v]), repr(float(field.values[v]))])


def write_risk_slices(field: RiskField, directory: Union[str, Path]) -> Path:
    """One graymap per k-slice (rows = j, columns = i) plus a JSON sidecar with the value mapping."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    nx, ny, nz = field.lattice.dims
    grid = field.values.reshape(nx, ny, nz)
    lo, hi = field.min, field.max
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    for k in range(nz):
        write_pgm((grid[:, :, k].T - lo) * scale, d / f"slice_{k:03d}.pgm")
    sidecar = d / "slices.json"
    with sidecar.open("w", encoding="utf-8") as f:
        json.dump(
            {"mapping": "gray = (alpha - alpha_min) * scale", "alpha_min": lo, "alpha_max": hi, "scale": scale, "slices": nz},
            f,
            indent=1,
        )
    return sidecar
