"""Finite-horizon mean field games on metric networks.

Coupled backward value / forward density solvers with generalized Kirchhoff
and jump transmission conditions at vertices, plus independent validation
oracles: a weighted spectral expansion, Monte Carlo path simulation, and the
duality identity behind uniqueness.
"""

__version__ = "0.1.0"

from .network import (Edge, MetricNetwork, ValidationReport, edge_coordinate,
                      load_network, normalize_orientation, original_coordinate,
                      save_network, validate)
from .fields import (Field, GridSpec, constant, derivative, from_function,
                     integrate, jump_residual, kirchhoff_residual,
                     loop_integral, weight_phi, weight_psi, zeros)
from .hamiltonian import (AssumptionSamples, HamiltonianModel, LagrangianSpec,
                          check_assumptions, clipped_linear, clipped_quadratic,
                          eval_H, eval_Hp, legendre, zero_hamiltonian)
from .coupling import (CouplingOperator, apply, bounded_smooth,
                       identity_coupling, monotonicity_gap, nonlocal_smoothing,
                       scaled_identity, zero_coupling)
from .fp import (FPProblem, FPStepOperator, FPTrajectory, assemble_fp, solve_fp,
                 stability_gap, stationary_profile, step)
from .hjb import (HJBProblem, HJBTrajectory, assemble_hjb_diffusion,
                  gradient_system_residual, solve_hjb)
from .mfg import (DualityResidual, MFGConfig, MFGSolution, duality_residual,
                  fixed_point_residual, picard_solve)
from .spectral import EigenBasis, eigenbasis, evolve_by_expansion
from .montecarlo import EmpiricalDensity, SimConfig, compare_to_fp, simulate
