"""Task variants: which attribute an intervention touches and under which dynamics."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import UnsupportedVariant

__all__ = ["TaskVariant", "VARIANTS", "get_variant"]


@dataclass(frozen=True)
class TaskVariant:
    name: str
    action: str  # "internal" | "expressed" | "remove"
    cost_weighted: bool = False
    continuous: bool = False
    dynamics: str = "linear"  # "linear" | "bias"

    @property
    def mi_family(self) -> bool:
        """Linear dynamics with internal-opinion moderation (superposition holds)."""
        return self.action == "internal" and self.dynamics == "linear"

    def __str__(self):
        return self.name


VARIANTS = {
    v.name: v
    for v in [
        TaskVariant("mi", "internal"),
        TaskVariant("mi-cost", "internal", cost_weighted=True),
        TaskVariant("me", "expressed"),
        TaskVariant("me-cost", "expressed", cost_weighted=True),
        TaskVariant("mi-continuous", "internal", continuous=True),
        TaskVariant("me-continuous", "expressed", continuous=True),
        TaskVariant("mi-bias", "internal", dynamics="bias"),
        TaskVariant("removal", "remove"),
    ]
}


def get_variant(v) -> TaskVariant:
    if isinstance(v, TaskVariant):
        return v
    try:
        return VARIANTS[str(v).lower()]
    except KeyError:
        raise UnsupportedVariant(
            f"unknown variant {v!r}; choose from {sorted(VARIANTS)}"
        ) from None
