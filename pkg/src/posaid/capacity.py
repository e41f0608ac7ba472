"""Effective SNR, Monte Carlo capacity lower bound, throughput and DoF.

The capacity bound treats estimation error as worst-case Gaussian noise:
``E log2 det(I + rho_eff Hbar Hbar^H / M)`` with ``Hbar`` i.i.d. CN(0, 1).
Throughput multiplies it by the data fraction of the block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractError, DomainError
from .numerics import as_generator, logdet_capacity, sample_standard_complex_gaussian
from .params import GroupLayout, SystemParams

POSITION_AIDED = "position_aided"
CONVENTIONAL = "conventional"
SCHEMES = (POSITION_AIDED, CONVENTIONAL)

#: Default Monte Carlo size for the expectation over Hbar.
DEFAULT_TRIALS = 2000
_CHUNK_ELEMENTS = 4_000_000


def effective_snr(P_d: float, P_tau: float, T_tau: float, Mg: int) -> float:
    """Post-estimation SNR ``P_d c / (1 + P_d + c)`` with ``c = P_tau T_tau / Mg``."""
    if P_d < 0 or P_tau < 0 or T_tau < 0 or Mg <= 0:
        raise DomainError("powers and lengths must be non-negative, Mg positive")
    c = P_tau * T_tau / Mg
    return P_d * c / (1.0 + P_d + c)


def effective_snr_from_mse(P_d: float, mse: float) -> float:
    """Effective SNR when every column carries estimation-error variance ``mse``.

    With ``mse = 1 - sigma0_sq`` this equals :func:`effective_snr`.
    """
    if not 0.0 <= mse <= 1.0:
        raise DomainError("mse must lie in [0, 1]")
    return P_d * (1.0 - mse) / (1.0 + P_d * mse)


def effective_snr_optimal(P0: float, T0: float, Mg: float) -> float:
    """Effective SNR at the optimal power split and training length ``Mg``."""
    if not 0 < Mg < T0:
        raise DomainError(f"need 0 < Mg < T0, got Mg={Mg}, T0={T0}")
    E = P0 * T0
    den = math.sqrt(Mg * (T0 - Mg + E)) + math.sqrt((T0 - Mg) * (Mg + E))
    return E * E / (den * den)


def _gram_eigenvalues(M: int, N: int, trials: int, rng) -> np.ndarray:
    """Eigenvalues of ``H H^H / M`` (non-zero part), shape ``(trials, min(M, N))``."""
    gen = as_generator(rng)
    n = min(M, N)
    out = np.empty((trials, n))
    chunk = max(1, _CHUNK_ELEMENTS // (M * N))
    for start in range(0, trials, chunk):
        stop = min(trials, start + chunk)
        H = sample_standard_complex_gaussian((stop - start, N, M), gen)
        gram = H.conj().transpose(0, 2, 1) @ H if M <= N else H @ H.conj().transpose(0, 2, 1)
        out[start:stop] = np.linalg.eigvalsh(gram / M)
    return np.clip(out, 0.0, None)


class CapacityEnsemble:
    """Fixed draw of ``trials`` channel matrices for common-random-number sweeps.

    Evaluating many SNRs on one ensemble makes differences between sweep
    points free of sampling noise in the channel.
    """

    def __init__(self, M: int, N: int, trials: int = DEFAULT_TRIALS, rng=0):
        if trials < 1:
            raise ContractError("trials must be >= 1")
        self.M, self.N, self.trials = M, N, trials
        self.eigenvalues = _gram_eigenvalues(M, N, trials, rng)

    def samples(self, rho: float) -> np.ndarray:
        """Per-trial ``log2 det(I + rho Hbar Hbar^H / M)``."""
        if rho < 0:
            raise DomainError("rho must be non-negative")
        return np.log2(1.0 + rho * self.eigenvalues).sum(axis=1)

    def mean(self, rho: float) -> tuple[float, float]:
        s = self.samples(rho)
        se = float(s.std(ddof=1) / math.sqrt(s.size)) if s.size > 1 else 0.0
        return float(s.mean()), se


def capacity_lower_bound(M: int, N: int, rho_eff: float, trials: int = DEFAULT_TRIALS, rng=0):
    """Monte Carlo mean of ``log2 det(I_N + rho_eff Hbar Hbar^H / M)``.

    Returns ``(mean, standard_error)`` in bits per channel use.
    """
    if trials < 1:
        raise ContractError("trials must be >= 1")
    if rho_eff < 0:
        raise DomainError("rho_eff must be non-negative")
    gen = as_generator(rng)
    vals = np.empty(trials)
    chunk = max(1, _CHUNK_ELEMENTS // (M * N))
    for start in range(0, trials, chunk):
        stop = min(trials, start + chunk)
        H = sample_standard_complex_gaussian((stop - start, N, M), gen)
        vals[start:stop] = logdet_capacity(H, rho_eff)
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return float(vals.mean()), se


@dataclass(frozen=True)
class ThroughputConfig:
    """One resource allocation: time split and per-phase powers of a block."""

    params: SystemParams
    layout: GroupLayout
    P_tau: float
    T_tau: int
    P_d: float
    T_d: int
    trials: int = DEFAULT_TRIALS
    seed: int = 0

    def __post_init__(self):
        T0 = self.params.T0
        if self.T_tau + self.T_d != T0:
            raise ContractError(f"T_tau + T_d = {self.T_tau + self.T_d} != T0 = {T0}")
        budget = self.params.P0 * T0
        used = self.P_tau * self.T_tau + self.P_d * self.T_d
        if abs(used - budget) > 1e-12 * budget:
            raise ContractError(f"energy {used} != P0 T0 = {budget}")

    @classmethod
    def optimal(cls, params: SystemParams, layout: GroupLayout, **kw) -> "ThroughputConfig":
        """Training length ``Mg`` and the optimal energy split."""
        from .optimizer import optimal_power_fraction

        T0, Mg, P0 = params.T0, layout.Mg, params.P0
        T_d = T0 - Mg
        alpha = optimal_power_fraction(T_d, Mg, P0, T0)
        P_d = alpha * P0 * T0 / T_d
        # derive P_tau from the budget so the energy constraint holds to round-off
        P_tau = (P0 * T0 - P_d * T_d) / Mg
        return cls(params, layout, P_tau, Mg, P_d, T_d, **kw)

    @classmethod
    def uniform(cls, params: SystemParams, layout: GroupLayout, **kw) -> "ThroughputConfig":
        """Training length ``Mg`` with equal power in both phases."""
        T0, Mg, P0 = params.T0, layout.Mg, params.P0
        return cls(params, layout, P0, Mg, P0, T0 - Mg, **kw)

    @property
    def pre_log(self) -> float:
        return self.T_d / self.params.T0

    @property
    def rho_eff(self) -> float:
        return effective_snr(self.P_d, self.P_tau, self.T_tau, self.layout.Mg)


class Throughput(NamedTuple):
    value: float
    stderr: float
    pre_log: float
    rho_eff: float
    degenerate: bool


def throughput(scheme: str, P0: float, T0: int, M: int, N: int, layout: GroupLayout | None = None,
               trials: int = DEFAULT_TRIALS, rng=0, ensemble: CapacityEnsemble | None = None) -> Throughput:
    """Throughput lower bound at the optimal allocation, bits per channel use.

    ``position_aided`` trains ``layout.Mg`` anchor columns; ``conventional``
    trains all ``M``. A training phase that fills the block gives exactly 0,
    flagged ``degenerate``.
    """
    if scheme == POSITION_AIDED:
        if layout is None:
            raise ContractError("position_aided throughput needs a group layout")
        n_train = layout.Mg
    elif scheme == CONVENTIONAL:
        n_train = M
    else:
        raise ContractError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if n_train >= T0:
        return Throughput(0.0, 0.0, 0.0, 0.0, True)
    pre_log = (T0 - n_train) / T0
    rho = effective_snr_optimal(P0, T0, n_train)
    if ensemble is None:
        cap, se = capacity_lower_bound(M, N, rho, trials, rng)
    else:
        cap, se = ensemble.mean(rho)
    return Throughput(pre_log * cap, pre_log * se, pre_log, rho, False)


def dof_analytic(Mg: float, Me: float, T0: float) -> float:
    """High-SNR slope ``(T0 - Mg) Mg Me / T0``, written as a parabola in ``Mg``."""
    if not 0 <= Mg <= T0:
        raise DomainError("need 0 <= Mg <= T0")
    return (-(Mg - T0 / 2.0) ** 2 + T0 * T0 / 4.0) * Me / T0


class DofEstimate(NamedTuple):
    slope: float
    residual: float
    reliable: bool
    log2_p0: np.ndarray
    rates: np.ndarray


def dof_empirical(scheme: str, T0: int, M: int, N: int, layout: GroupLayout | None, P0_grid,
                  trials: int = 500, rng=0) -> DofEstimate:
    """Slope of throughput against ``log2 P0`` over the top decade of ``P0_grid``.

    One channel ensemble serves every ``P0``. ``residual`` is the RMS fit
    residual relative to the largest rate in the window; above 10 %, or
    with a non-monotone rate curve, the estimate is flagged unreliable.
    """
    grid = np.sort(np.asarray(P0_grid, dtype=float))
    if grid[-1] / grid[0] < 1e3 - 1e-9:
        raise ContractError("P0 grid must span at least three decades")
    ens = CapacityEnsemble(M, N, trials, rng)
    rates = np.array([throughput(scheme, p, T0, M, N, layout, ensemble=ens).value for p in grid])
    top = grid >= grid[-1] / 10.0 * (1 - 1e-12)
    x = np.log2(grid[top])
    y = rates[top]
    if x.size < 2:
        raise ContractError("need at least two grid points in the top decade")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    scale = max(float(np.abs(y).max()), 1e-300)
    residual = float(np.sqrt(np.mean(resid ** 2)) / scale) if np.any(y) else 0.0
    monotone = bool(np.all(np.diff(rates) >= -1e-12))
    return DofEstimate(float(slope), residual, residual <= 0.10 and monotone, np.log2(grid), rates)


def depth_aware_throughput(config: ThroughputConfig, L0: int, ensemble: CapacityEnsemble) -> Throughput:
    """Throughput with the refined estimator of history depth ``L0``.

    Every column is charged the worst steady-state analytic MSE ``e`` of
    the depth-``L0`` estimator, and ``rho_eff = P_d (1 - e) / (1 + P_d e)``.
    For ``L0 = 1`` the worst column is the anchor with ``e = 1 - sigma0_sq``
    and this reduces to :attr:`ThroughputConfig.rho_eff`.
    """
    from .estimator import sigma0_sq, steady_state_mse

    s0 = sigma0_sq(config.P_tau, config.T_tau, config.layout.Mg)
    mse = steady_state_mse(config.params, config.layout, s0, L0)
    rho = effective_snr_from_mse(config.P_d, float(mse.max()))
    cap, se = ensemble.mean(rho)
    return Throughput(config.pre_log * cap, config.pre_log * se, config.pre_log, rho, False)
