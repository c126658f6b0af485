"""Reconstruction of black-box deep ReLU networks from gradient-derived
local patches, fitted by convex weighted least squares."""

from .relunet import (Architecture, AffineLayer, ReluNetwork, param_count,
                      random_network)
from .oracle import Oracle, ProbeSet, SmoothParams, sample_points, wrap_network
from .geometry import (AffineSubspace, Ball, Hyperplane, angle, ball_volume,
                       ball_product_integral, intersection, least_norm_point,
                       mc_integral, sample_ball)
from .patches import (LocalPatch, PatchModel, dedupe_hyperplanes, idw_weights,
                      make_patch, model_eval, patch_eval)
from .fit import (FitConfig, FitReport, fit_second_order, fit_weights,
                  gershgorin_check, hessian, objective, objective_gradient,
                  select_radii, solve_normal_equations)
from .analysis import (ConjectureReport, DistanceEstimate,
                       classify_intersection, conjecture_report,
                       count_regions, dp_distance)

__version__ = "0.1.0"
