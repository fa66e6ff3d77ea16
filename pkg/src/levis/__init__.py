"""Exact verified input regions for ReLU networks."""
from .bounds import NeuronBounds, interval_bounds, lp_tightened_bounds
from .hybrid import GapReport, hybrid_nearest_adversarial, solve_cc_nlp
from .lp import LinearProgram, available_backends, default_backend, solve_lp
from .milp import (
    CenterOutsideBox,
    DegenerateCenter,
    Direction,
    NoAdversaryInBox,
    NoAdversaryOnRay,
    directional_adversarial,
    nearest_adversarial,
)
from .network import (
    ActivationPattern,
    Ball,
    Box,
    Network,
    Specification,
    eval_spec,
    forward,
    is_verified,
    load_network,
    load_spec,
    save_network,
    save_spec,
)
from .oracle import grid_oracle_nearest, lipschitz_radius, ray_oracle, soundness_sample
from .search import BallUnion, levis_alpha, levis_beta, surface_point, union_contains, union_coverage

__version__ = "0.1.0"

__all__ = [
    "ActivationPattern",
    "Ball",
    "BallUnion",
    "Box",
    "CenterOutsideBox",
    "DegenerateCenter",
    "Direction",
    "GapReport",
    "LinearProgram",
    "Network",
    "NeuronBounds",
    "NoAdversaryInBox",
    "NoAdversaryOnRay",
    "Specification",
    "available_backends",
    "default_backend",
    "directional_adversarial",
    "eval_spec",
    "forward",
    "grid_oracle_nearest",
    "hybrid_nearest_adversarial",
    "interval_bounds",
    "is_verified",
    "levis_alpha",
    "levis_beta",
    "lipschitz_radius",
    "load_network",
    "load_spec",
    "lp_tightened_bounds",
    "nearest_adversarial",
    "ray_oracle",
    "save_network",
    "save_spec",
    "solve_cc_nlp",
    "solve_lp",
    "soundness_sample",
    "surface_point",
    "union_contains",
    "union_coverage",
]
