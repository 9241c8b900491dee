"""Hermite eigenfunction L^p bounds: stable evaluation, dyadic region
geometry, extremal mode sums, verification sweeps, Carleman weights and the
Mehler propagator."""

__version__ = "0.1.0"

from .scaled import ScaledReal
from .hermite import (CalibrationError, DomainError, HermiteSequence, WkbModel, calibrate_wkb, hermite_batch,
                      hermite_deriv, hermite_eval, hermite_table, hermite_values, hermite_values_and_derivs,
                      wkb_eval)
from .quadrature import QuadratureGrid
from .regions import (BD, EXT, Int, RegionLabel, SpectralScale, WeightedNormSpec, lp_norm_region, region_membership,
                      rho, weighted_norm)
from .extremal import ConcentrationReport, ConstructionError, ModeSum, MultiIndex, apply_H_residual, build
from .bounds import FitResult, SweepPoint, l2_localization_profile, sweep_fit, theorem31_lhs
from .carleman import EpsSequence, WeightFunctions, build_weights, check_derivative_bounds, check_lab_inequalities
from .propagator import (MehlerPoint, SingularityError, dispersive_kernel_magnitude, mehler_generating,
                         propagator_apply)
