"""Hard-edge beta ensembles: finite-n sampling, the stochastic Bessel operator,
and Riccati explosion counting."""

__version__ = "0.1.0"

from .exceptions import ConvergenceError, ParameterError, SingularityError, StepSizeError
from .rng import EnvironmentPath, RandomStream, bridge_refine, brownian_increments, sample_chi, sample_gaussian
from .stats import EmpiricalDistribution, dkw_band
from .ensemble import (BidiagonalModel, DiscreteKernel, LowerBidiagonal, SymmetricTridiagonal,
                       conjugate_antidiagonal, gram_tridiagonal, inverse_kernel, limit_kernel_value,
                       operator_norm_sq, sample_model, sample_scaled_minima, smallest_eigenvalues,
                       sturm_count)
from .bessel import bessel_j, bessel_zero, bessel_zeros
from .sbo import (GeneratorDiscretization, SpeedScaleGrid, build_generator, build_speed_scale,
                  greens_value, sbo_eigenvalues, trace_inverse)
from .riccati import (DiffusionRun, HardEdgeParams, SoftEdgeParams, TransitionParams, cdf_Lambda_k,
                      count_explosions_p, count_zeros_psi, hard_to_soft, survival_q)

__all__ = [
    "BidiagonalModel", "ConvergenceError", "DiffusionRun", "DiscreteKernel", "EmpiricalDistribution",
    "EnvironmentPath", "GeneratorDiscretization", "HardEdgeParams", "LowerBidiagonal", "ParameterError",
    "RandomStream", "SingularityError", "SoftEdgeParams", "SpeedScaleGrid", "StepSizeError",
    "SymmetricTridiagonal", "TransitionParams", "bessel_j", "bessel_zero", "bessel_zeros",
    "bridge_refine", "brownian_increments", "build_generator", "build_speed_scale", "cdf_Lambda_k",
    "conjugate_antidiagonal", "count_explosions_p", "count_zeros_psi", "dkw_band", "gram_tridiagonal",
    "greens_value", "hard_to_soft", "inverse_kernel", "limit_kernel_value", "operator_norm_sq",
    "sample_chi", "sample_gaussian", "sample_model", "sample_scaled_minima", "sbo_eigenvalues",
    "smallest_eigenvalues", "sturm_count", "survival_q", "trace_inverse",
]
