"""One-shot polarization moderation on opinion-dynamics networks.

Opinion solvers, a synthetic echo-chamber generator, classical planners, and
a graph Q-network trained offline and deployed feed-forward.
"""
from .environment import Instance, ModerationEnv, evaluate_plan, initial_opinions
from .graph import Graph, build_graph
from .metrics import anp, polarization_index
from .synthgen import GenConfig, generate_instance
from .variants import VARIANTS, get_variant

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "build_graph",
    "Instance",
    "ModerationEnv",
    "evaluate_plan",
    "initial_opinions",
    "anp",
    "polarization_index",
    "GenConfig",
    "generate_instance",
    "VARIANTS",
    "get_variant",
]
