"""Closed-form quantities: quadrature, offspring laws, PGFs and bounds."""

from .bounds import (
    entropy,
    phi_b,
    ray_moment_factor,
    tail_bound_horizon,
    tail_bound_l,
    two_vertex_moment,
    two_vertex_sup_ratio,
)
from .constants import ModelConstants, compute_constants, return_lower_bound, zeta_for_mean
from .offspring import OffspringDistribution, good_probability, offspring_p, offspring_q
from .pgf import Compose, Iterate, Leaf, PgfExpr, pgf_eval, pgf_mean, smallest_fixed_point
from .quadrature import integrate_exp

__all__ = [
    "Compose",
    "Iterate",
    "Leaf",
    "ModelConstants",
    "OffspringDistribution",
    "PgfExpr",
    "compute_constants",
    "entropy",
    "good_probability",
    "integrate_exp",
    "offspring_p",
    "offspring_q",
    "pgf_eval",
    "pgf_mean",
    "phi_b",
    "ray_moment_factor",
    "return_lower_bound",
    "smallest_fixed_point",
    "tail_bound_horizon",
    "tail_bound_l",
    "two_vertex_moment",
    "two_vertex_sup_ratio",
    "zeta_for_mean",
]
