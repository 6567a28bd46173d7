__version__ = "0.1.0"

from .errors import (ForestMFGException, ValidationError, DomainError, WellPosednessError, DegenerateSampleError,
                     FOSDViolation, MalformedRowError, WeakInstrumentError, ConvergenceError, QuadratureError)
from .model import (G1Form, G1Kind, G2Form, G2Kind, ModelParams, BeliefPrior, Elasticities, CALIBRATED_PARAMS,
                    CALIBRATED_PRIOR, g1, g2, elasticities, belief_moment, quadrature_rule)
from .equilibrium import (EquilibriumSolution, FiniteHorizonSolution, Sustainability, SustainabilityKind,
                          q_no_interaction, q_pro, median_rate, q_mfe_stationary, q_mfe_finite_horizon,
                          fosd_response, classify_sustainability, affine_bequest, linear_bequest)
from .dynamics import (Trajectory, DensitySpec, DensityGrid, Scheme, Reflection, simulate_path, simulate_paths,
                       simulate_reflected, simulate_reflected_paths, median_cover_path, lognormal_tpd,
                       reflected_tpd, reflected_cdf, stationary_density, stationary_cdf, density_grid,
                       counterfactual_panel)
from .panel import Panel
from .estimation import (EstimationResult, LocalLinearFit, Moments, fit_beliefs, fit_gbm, fit_gamma,
                         local_linear_fit)
from .instrument import (LanguageClassification, TransmitterSpec, ExposureRow, IVResult, YORUBA,
                         linguistic_distance, haversine_km, free_space_signal_dbm, normalize_exposure, z_index,
                         build_exposure, iv_2sls)
from .table import ResultTable, RuleStyle, ALL, FRAME, HEADER, NONE
from .plotdata import emit_plot_data, write_json
