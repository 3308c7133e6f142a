"""Exception types shared across the riskview modules."""

from __future__ import annotations

from typing import Optional


class RiskViewError(Exception):
    """Base class for all riskview failures."""


class SceneFormatError(RiskViewError, ValueError):
    """Scene file could not be parsed or a splat violates its invariants."""

    def __init__(self, message: str, splat_index: Optional[int] = None) -> None:
        if splat_index is not None:
            message = f"splat {splat_index}: {message}"
        super().__init__(message)
        self.splat_index = splat_index


class ConfigError(RiskViewError, ValueError):
    """Episode configuration is missing a field or holds an invalid value."""


class ShapeMismatchError(RiskViewError, ValueError):
    """Arrays that must line up (images, priors, Hessians) do not."""


class PlanBlockedError(RiskViewError):
    """The local planner cannot start from the current position."""

    def __init__(self, diagnostic: str) -> None:
        super().__init__(diagnostic)
        self.diagnostic = diagnostic
