"""Matrix SIR/V+S epidemic models with demography, vaccination and loss of
immunity: structure checks, reproduction numbers, equilibria and dynamics."""

from .dynamics import (Variant, VariantFlags, jacobian_scaled, lyapunov_weights, lyapunov_y,
                       removed_nullcline, rhs_scaled, rhs_unscaled)
from .equilibria import (DegenerateDemographyError, EquilibriumReport,
                         ExcludedConfigurationError, NoEndemicEquilibrium, classify, dfe_fa,
                         dfe_ia, dfe_sm, disease_free_state, endemic_fa, endemic_ia,
                         find_equilibria_numeric)
from .integrate import StiffnessError, Trajectory, integrate
from .linalg import NumericalDegeneracy, spectral_radius
from .model import (DimensionError, ModelError, ModelSpec, ScaledState, SirPhSpec,
                    UnscaledState, Violation, as_model, embed, validate, validate_sirph)
from .modelfile import ModelFileError, dump_model, load_model, parse_model, save_model
from .reproduction import (AdmissibilityReport, CriticalVaccination, NgmDecomposition,
                           SingularTransitionError, UnsupportedCaseError,
                           basic_reproduction_number, check_admissible_splitting,
                           critical_vaccination, ngm_split, r_rank_one)

__all__ = [
    "AdmissibilityReport", "CriticalVaccination", "DegenerateDemographyError", "DimensionError",
    "EquilibriumReport", "ExcludedConfigurationError", "ModelError", "ModelFileError",
    "ModelSpec", "NgmDecomposition", "NoEndemicEquilibrium", "NumericalDegeneracy",
    "ScaledState", "SingularTransitionError", "SirPhSpec", "StiffnessError", "Trajectory",
    "UnscaledState", "UnsupportedCaseError", "Variant", "VariantFlags", "Violation",
    "as_model", "basic_reproduction_number", "check_admissible_splitting", "classify",
    "critical_vaccination", "dfe_fa", "dfe_ia", "dfe_sm", "disease_free_state",
    "dump_model", "embed", "endemic_fa", "endemic_ia", "find_equilibria_numeric",
    "integrate", "jacobian_scaled", "load_model", "lyapunov_weights", "lyapunov_y",
    "ngm_split", "parse_model", "r_rank_one", "removed_nullcline", "rhs_scaled",
    "rhs_unscaled", "save_model", "spectral_radius", "validate", "validate_sirph",
]
