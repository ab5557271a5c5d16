from .dft import dft_lowrank, uniform_tail_bound, verify_uniform_tail
from .interp import InterpolatingPolynomial, interpolate, phase_interpolant, sign_interpolant
from .report import Report
from .sparse import sparse_nonrigidity_sim
from .trig import (StepCoverSet, TrigPolynomial, fejer_coefficients, fejer_kernel, lambda_set,
                   trig_approx, trig_width_report)
from .walsh import monomial_rank_matrix, walsh_lowrank

__all__ = ["InterpolatingPolynomial", "Report", "StepCoverSet", "TrigPolynomial", "dft_lowrank",
           "fejer_coefficients", "fejer_kernel", "interpolate", "lambda_set", "monomial_rank_matrix",
           "phase_interpolant", "sign_interpolant", "sparse_nonrigidity_sim", "trig_approx",
           "trig_width_report", "uniform_tail_bound", "verify_uniform_tail", "walsh_lowrank"]
