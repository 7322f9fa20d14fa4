"""Frames whose restricted norm is close to unconditional, found through a
parity-even polynomial approximation of the norm."""
from ._kernels import BACKEND
from .barvinok import (lift_cloud, lowner_ellipsoid, norm_quadform, poly_eval,
                       quadform_from_ellipsoid, sandwich_check)
from .equivariant_map import (EquivariantMapSpec, FormalSum, MaxSplit, build_f,
                              find_zeros, jacobian_rank_at, parity_representation,
                              split_by_max, verify_map)
from .errors import *  # noqa: F401,F403
from .multiindex import (enumerate_multiindices, multinomial, odd_parity_pairs,
                         tensor_lift, weighted_inner)
from .norms import (LpNorm, NormSpec, PolytopeGauge, RotatedUnconditional, SmoothRandom,
                    WeightedLpNorm, epsilon_of, restrict_norm, unconditionalize)
from .stiefel import (SolverOptions, choose_degree, feasibility, group_action,
                      objective, solve_frame, tangent_project, theory_epsilon)

__version__ = "0.1.0"
