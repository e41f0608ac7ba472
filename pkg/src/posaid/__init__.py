"""Position-aided channel estimation and throughput analysis for a fast-moving large array.

The transmit columns are split into groups whose first column alone sends
pilots; the others are interpolated from past first-column estimates taken
where the array stood earlier on its path.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from ._backend import BACKEND
from .capacity import (CapacityEnsemble, ThroughputConfig, capacity_lower_bound, depth_aware_throughput,
                       dof_analytic, dof_empirical, effective_snr, effective_snr_optimal, throughput)
from .correlation import interpolation_etas, kernel, kernel_matrix, mmse_weights
from .errors import ConfigurationError, ContractError, DomainError, HistoryUnderflow, NumericalRankError
from .estimator import (CsiTable, EstimateReport, PilotConfig, PositionAidedEstimator, conventional_estimate,
                        estimate_full_matrix, gamma, initial_estimate, sigma0_sq, steady_state_mse)
from .field import FieldGenerator, generate_blocks, read_blocks, write_blocks
from .numerics import RngStream, bessel_j0, cholesky_psd, logdet_capacity
from .optimizer import (omega_threshold, optimal_antennas, optimal_group_count, optimal_power_fraction,
                        optimal_training_interval, verify_power_convexity, verify_td_monotonicity)
from .params import (GroupLayout, SystemParams, anchor_block_index, block_length, group_layout, load_config,
                     max_group_size)
