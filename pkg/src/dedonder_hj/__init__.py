"""First-order classical field dynamics on periodic grids: momentum maps,
Hamilton-De Donder-Weyl evolution, presymplectic pairings on Cauchy data,
Hamilton-Jacobi section verification, characteristic integration and the
cotangent-space restriction identities."""

from .models import (BUILTIN_MODEL_NAMES, Dimensions, ExtendedMomentumSample,
                     HamiltonianModel, JetSample, LagrangianModel, ModelError,
                     ReducedMomentumSample, builtin_model, eval_with_partials,
                     finite_difference_partial)
from .legendre import (ConnectionCoefficients, FieldSection, MomentumSection,
                       NewtonError, euler_lagrange_residual, flatness_residual,
                       hamiltonian_from_lagrangian, hdw_residual,
                       inverse_legendre, legendre_extended, legendre_reduced,
                       legendre_transform_section, poincare_cartan_coefficients,
                       regularity_check, solve_velocities)
from .cauchy import (BlowupError, CauchyGrid, CauchyState, GridError,
                     TangentVariation, dynamical_trajectory_residual,
                     hdw_rhs, indicator_variations, integrate_density,
                     make_grid, presymplectic_pairing, random_smooth_variation,
                     recover_spatial_momenta, run_simulation,
                     spatial_derivative, standard_test_variations, step_rk4,
                     time_derivative_frames, variation_norm)
from .hj import (GammaDomainError, HJSection, IncompatibleDataError,
                 connection_lift_vector, evolve_characteristics, gamma_family,
                 gamma_closedness_residual, hj_lift_solution_check,
                 hj_residual, lift_by_gamma, lift_variation, linear_gamma,
                 oscillator_gamma, reduced_connection,
                 restricted_connection_residual)
from .cotangent import (ConstraintError, CotangentState, CotangentVariation,
                        cotangent_trajectory_residual, extended_form_pairing,
                        hat_gamma, instantaneous_hamiltonian, omega_pairing,
                        pullback_identity_residual, push_variation,
                        restriction_map_R, solve_time_velocity,
                        time_legendre_constraint_residual,
                        variational_derivative)
from .scenario import Scenario, ScenarioError, parse_scenario

__version__ = "0.1.0"
