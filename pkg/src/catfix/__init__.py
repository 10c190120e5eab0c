"""Fixed points of nonexpansive maps on CAT(-1) spaces: hyperbolic geometry,
metric trees, comparison-triangle checks and an anchored fixed-point solver."""
from .errors import (AuditError, CatfixError, ConfigError, ConvergenceError, GeometryError,
                     TreeFormatError)
from .fixpoint import (NonexpansiveMap, Schedule, SolverConfig, approx_sequence, asymptotic_center,
                       counterexample_map, picard, solve, t_contraction)
from .model_spaces import Kappa, TriangleSpec, cat_check, place_comparison
from .rtree import MetricTree, load_tree, parse_tree, star_tree
from .spaces import (Ball, EuclideanSpace, HyperbolicSpace, Intersection, Ray, Segment,
                     TreeSpace, Tube, WholeSpace, combine, model_space)

__version__ = "0.1.0"

__all__ = [
    "AuditError", "CatfixError", "ConfigError", "ConvergenceError", "GeometryError",
    "TreeFormatError", "NonexpansiveMap", "Schedule", "SolverConfig", "approx_sequence",
    "asymptotic_center", "counterexample_map", "picard", "solve", "t_contraction", "Kappa",
    "TriangleSpec", "cat_check", "place_comparison", "MetricTree", "load_tree", "parse_tree",
    "star_tree", "Ball", "EuclideanSpace", "HyperbolicSpace", "Intersection", "Ray", "Segment",
    "TreeSpace", "Tube", "WholeSpace", "combine", "model_space",
]
