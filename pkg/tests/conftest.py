"""Shared fixtures: small scenes, cameras and the shipped mock data."""

from pathlib import Path
from typing import Sequence

import pytest

from riskview.scene import CameraIntrinsics, Scene, Splat, scene_from_splats

MOCK_DATA = Path(__file__).resolve().parent.parent / "riskview" / "mock_data"


def make_scene(splats: Sequence[Splat], pad: float = 10.0) -> Scene:
    """Scene whose bounds comfortably enclose every splat."""
    xs = [s.mu for s in splats]
    lo = [min(p[a] for p in xs) - pad for a in range(3)]
    hi = [max(p[a] for p in xs) + pad for a in range(3)]
    return scene_from_splats(splats, lo, hi)


def splat(mu, sigma=0.1, opacity=0.8, color=(0.5, 0.5, 0.5)) -> Splat:
    return Splat(mu=tuple(float(v) for v in mu), sigma=float(sigma), opacity=float(opacity), color=tuple(color))


@pytest.fixture
def mock_data() -> Path:
    return MOCK_DATA


@pytest.fixture
def cam() -> CameraIntrinsics:
    return CameraIntrinsics()


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("RISKVIEW_SEED", "RISKVIEW_OUTPUT_DIR", "RISKVIEW_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
