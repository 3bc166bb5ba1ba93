"""Sum-rate maximization for IRS-aided multiuser MISO downlinks."""

from .model import (
    ChannelRealization,
    PhaseAlphabet,
    SystemConfig,
    effective_channel,
    paper_default,
    sample_realization,
    trial_rng,
)
from .rate_core import phi_lambda, sinr, sum_rate
from .solver import PenaltySchedule, SolveReport, SolverOptions, solve

__version__ = "0.1.0"
