"""Simulator and verification suite for circle-group period finding and
generalized discrete logarithms over one-dimensional infrastructures."""

from .scaled import ScaledReal, sr, round_nearest, floor_scaled, mod_reduce
from .infra import (BackendError, CyclicInfra, ExactInfrastructure, InfraParams,
                    Infrastructure, SyntheticInfra, backend_from_config)
from .quadfield import QuadInfra, ReducedForm, pell_solution
from .group import (BudgetError, FRep, PrecisionBudget, ShiftedGrid, add,
                    choose_precision, g_tilde, grid_points_per_unit, h_exact,
                    h_tilde, pick_shift_circ, pick_shift_dlog, quantize_g,
                    quantize_h, reduce_pair, scalar_mul)
from .period import (BatchPolicy, CandidateList, CircumferenceResult,
                     Convergent, MaxTrialsError, candidate_periods,
                     circumference_pipeline, convergents, estimate_period,
                     verify_and_refine)
from .dlog import (DlogParams, DlogResult, combine_samples, dlog_pipeline,
                   select_params)
from .sampler import (FiberTable, FiberTable2D, MemoryCapError,
                      PseudoPeriodicState, QuantumSample, build_fibers_1d,
                      build_fibers_2d, fourier_sample_1d, fourier_sample_2d,
                      measure_second_register, sample_pair_factored)

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
