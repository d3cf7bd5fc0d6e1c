"""Numerical dynamics of the correspondences F_a = J_a o Cov for Q(z) = z^3 - 3z."""

from .corr import CorrContext, critical_data, fa_backward, fa_forward, cov_images, make_context, orbit_tree
from .sphere import INF, MobiusMap, SpherePoint, chordal_dist, mobius_apply

__all__ = [
    "CorrContext", "critical_data", "fa_backward", "fa_forward", "cov_images", "make_context",
    "orbit_tree", "INF", "MobiusMap", "SpherePoint", "chordal_dist", "mobius_apply",
]
