"""Simulation and analysis toolkit for perturbation-based extremum seeking."""

from .dither import (AssumptionError, AssumptionReport, DitherPair,
                     SampledDither, SequentialDither, make_dither,
                     make_sequential, make_square_sawtooth_dither,
                     make_trig_dither, require_valid, sample_needles,
                     verify_assumptions)
from .learning import (Landscape, LearningRun, RecoveredGradient,
                       compare_runs, extract_simulated_ld,
                       reconstruct_landscape, recovered_gradient,
                       recovered_gradient_finite_N,
                       recovered_gradient_multidim, run_recursion)
from .objective import (LieBracketField, Objective, VectorFieldPair,
                        builtin_objectives, check_field_derivatives,
                        check_gradient, finite_difference_gradient,
                        get_objective, make_constant, make_f2,
                        make_lie_bracket, make_vector_fields)
from .ode import (DivergenceError, IntegratorConfig, Trajectory,
                  needle_dither, simulate_es, simulate_nominal,
                  simulate_variational, snap_to_grid)
from .stm import StmTable, SymmetryReport, build_stm, check_stm_symmetry

__all__ = [name for name in dir() if not name.startswith("_")]
