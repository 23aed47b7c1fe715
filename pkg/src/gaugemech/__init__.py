"""Hamiltonian systems on Poisson manifolds: gauge-field extraction from
vertical 2-jets, minimal-coupling (Wong) and extended (Einstein-Mayer)
dynamics, bundle-metric geodesics with projection cross-checks, and
constrained-charge reduction computations."""

from . import errors
from .dynamics import (DriftReport, IntegratorConfig, OrderEstimate, Trajectory,
                       diagnostics, integrate, order_estimate, trajectory_to_csv)
from .extraction import (GaugePotentialField, QuadraticGaugeModel, SWFields, VerticalJet,
                         curvature_at, einstein_mayer_hamiltonian, extract_fields,
                         fields_to_hamiltonian_spec, flow_transition, gauge_transform,
                         model_from_fields, reduce_jet, structure_bianchi_residual,
                         vertical_jet, wong_hamiltonian)
from .fields import ScalarField
from .kaluza import (KKMetricSpec, KKState, KKTrajectory, MatrixGroup, build_group,
                     integrate_kk, kk_hamiltonian, kk_trajectory_to_csv, moment_map,
                     project_kk, split_kk_hamiltonian)
from .lie_algebra import (LieAlgebra, Subspace, ad_coad, bracket_vec, build_algebra,
                          constants_from_json, constants_to_json, direct_sum, idealizer,
                          jacobi_residual, quotient)
from .poisson import (PoissonStructure, StructureFunctionField, bivector_at, build_structure,
                      casimir_residual, default_casimirs, hamiltonian_vector,
                      jacobi_residual_at, linearize_transverse, poisson_bracket)
from .polynomials import MatrixPolyField, Polynomial
from .reduction import (InvariantSpace, LinearRep, ReductionReport, annihilator,
                        casimir_spectrum, induced_quotient_action, invariant_subspace,
                        manton_report, sym_power_rep)

__version__ = "0.1.0"
