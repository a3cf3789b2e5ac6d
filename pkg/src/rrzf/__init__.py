"""Robust regularized zero-forcing for multiuser broadcast channels with
semiorthogonal user selection: channel model, SUS, ZF/RZF/RRZF/MF
precoders, SINR metrics and Monte-Carlo sweeps."""

__version__ = '0.1.0'

from .channel import ChannelRealization, RngStream, draw_channels, std_complex_gaussian
from .linalg import ConvergenceError, SingularMatrixError
from .metrics import (DomainError, EigenProfile, SinrReport, model_average_sinr,
                      monotonicity_term, physical_sinr, sum_rate, theorem1_avg_snr)
from .precoding import CustomAlpha, Precoder, Scheme, build_precoder, regularization_factor
from .selection import SelectionParams, SelectionResult, correlation, sus_select
