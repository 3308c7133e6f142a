"""Risk-averse planning with next-best-view selection over Gaussian-splat maps

This package builds AVaR risk fields from splat scenes, replans safe local
segments on a lattice, and picks camera yaws that maximise a proximity-weighted
Fisher information gain inside a risk-driven mask.
"""

from .errors import ConfigError, PlanBlockedError, RiskViewError, SceneFormatError, ShapeMismatchError  # noqa: F401
from .pipeline import EpisodeConfig, EpisodeReport, load_config, run_episode, write_report  # noqa: F401
from .scene import CameraIntrinsics, Lattice, Pose, Scene, Splat, load_scene, make_pose, save_scene  # noqa: F401

__all__ = [
    "CameraIntrinsics",
    "ConfigError",
    "EpisodeConfig",
    "EpisodeReport",
    "Lattice",
    "PlanBlockedError",
    "Pose",
    "RiskViewError",
    "Scene",
    "SceneFormatError",
    "ShapeMismatchError",
    "Splat",
    "load_config",
    "load_scene",
    "make_pose",
    "run_episode",
    "save_scene",
    "write_report",
]
