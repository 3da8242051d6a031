"""Volume-filling chemotaxis laboratory.

A lattice agent model of chemotactic cells with crowding-limited motility,
the generalised Patlak-Keller-Segel continuum system it converges to, the
steady-state and linear-stability machinery of that system, and a harness
that cross-validates all of them quantitatively.
"""

from .errors import (CFLViolationError, ChemotaxError, NewtonDivergenceError,
                     NumericalError, ProbabilityOverflowError, ValidationError)
from .lattice import (EnsembleResult, LatticeState, RngStream, chemo_move_probs,
                      density_of, diffusion_move_probs, run_ensemble,
                      run_realization, step_cells, step_chemo)
from .manifest import (BUILTIN_IDS, ExperimentCase, ExperimentManifest,
                       builtin_manifest, load_manifest)
from .params import (DerivedCoefficients, ParamSet, big_d, c_bar_from_initial,
                     derive_coefficients, psi, psi_prime)
from .pde import (FieldPair, SolverOptions, flux_1d, run_pde, run_to_equilibrium,
                  step_2d_explicit, step_c_implicit, step_u_implicit_1d)
from .stability import (DispersionResult, chi_threshold, dispersion, k2_max,
                        unstable_mode_count)
from .steady import (GammaRootReport, SteadyStateContext, gamma, gamma_roots,
                     homogeneous_lambda, homogeneous_steady_state, lambda_from_mass,
                     lambert_w0, lambert_w0_exp, phase_plane_rhs, u_infinity_of_c)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
