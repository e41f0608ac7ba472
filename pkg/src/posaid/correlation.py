"""Spatio-temporal correlation kernel and the covariance blocks built from it.

The kernel is the isotropic, array-aligned reduction ``J0(2 pi |dz| / lambda0)``
between two points of the moving path. Covariances of noisy anchor
estimates follow from it: an anchor estimate has variance ``s`` and two
estimates at block lag ``m`` have covariance ``eta_m s**2``, where ``s`` is
the initial-estimate quality ``sigma0_sq``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_solve

from ._backend import kernels
from .errors import ConfigurationError, ContractError, HistoryUnderflow
from .numerics import bessel_j0, cholesky_psd
from .params import SystemParams, block_length


@dataclass(frozen=True)
class KernelParams:
    """Parameters of the general AOA correlation model.

    Only the isotropic case ``kappa == 0`` is supported; ``mu`` is then
    irrelevant and kept for completeness.
    """

    lambda0: float
    kappa: float = 0.0
    mu: float = 0.0
    theta: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        if self.lambda0 <= 0:
            raise ConfigurationError("lambda0 must be positive")
        if self.kappa != 0:
            raise ConfigurationError(
                "non-isotropic scattering (kappa != 0) needs J0 of a complex argument; unsupported"
            )


def kernel(z1, z2, lambda0: float):
    """Correlation between channel responses at path positions ``z1`` and ``z2``."""
    if lambda0 <= 0:
        raise ContractError("lambda0 must be positive")
    return bessel_j0(2.0 * math.pi * np.abs(np.subtract(z2, z1)) / lambda0)


def kernel_matrix(za, zb, lambda0: float) -> np.ndarray:
    """``K[i, j] = kernel(za[i], zb[j])``; the hot path for field sampling."""
    a = np.ascontiguousarray(np.ravel(za), dtype=float)
    b = a if zb is za else np.ascontiguousarray(np.ravel(zb), dtype=float)
    return kernels.kernel_matrix(a, b, float(lambda0))


def isotropic_correlation(a: float, b: float, angle_diff: float) -> float:
    """``J0(sqrt(a^2 + b^2 - 2ab cos(angle_diff)))``.

    ``a = 2 pi f_D tau`` (temporal) and ``b = 2 pi D / lambda0`` (spatial).
    """
    if a < 0 or b < 0:
        raise ContractError("a and b must be non-negative")
    arg = a * a + b * b - 2.0 * a * b * math.cos(angle_diff)
    return bessel_j0(math.sqrt(max(arg, 0.0)))


def block_lag_eta(m: int, n: int, params: SystemParams, floored: bool = True) -> float:
    """Correlation between one column's responses at blocks ``m`` and ``n``."""
    if m < 1 or n < 1:
        raise ContractError("block indices start at 1")
    T0 = block_length(params, floored)
    return bessel_j0(2.0 * math.pi * abs(m - n) * params.v0 * T0 / (params.lambda0 * params.B0))


@lru_cache(maxsize=256)
def block_lag_table(params: SystemParams, n_lags: int, floored: bool = True) -> np.ndarray:
    """``eta[lag]`` for ``lag = 0 .. n_lags - 1`` (read-only, cached)."""
    T0 = block_length(params, floored)
    step = 2.0 * math.pi * params.v0 * T0 / (params.lambda0 * params.B0)
    table = bessel_j0(step * np.arange(n_lags, dtype=float))
    table = np.atleast_1d(table)
    table.setflags(write=False)
    return table


def bracketing_index(z_target: float, anchor_positions, tol: float = 1e-12) -> int:
    """Index ``i`` with ``anchors[i] <= z_target < anchors[i + 1]`` (may be -1 or len-1)."""
    anchors = np.asarray(anchor_positions, dtype=float)
    scale = tol * max(1.0, float(np.abs(anchors).max(initial=0.0)), abs(z_target))
    return int(np.searchsorted(anchors, z_target + scale, side="right")) - 1


def interpolation_etas(z_target: float, anchor_positions, lambda0: float, L0: int = 1):
    """Correlations of a target position with the anchors bracketing it.

    Returns ``(eta_prime, eta_dprime)``: ``eta_prime[l-1]`` pairs the target
    with the l-th anchor ahead of it (blocks ``k0+1 .. k0+L0``) and
    ``eta_dprime[l-1]`` with the l-th anchor behind (``k0 .. k0-L0+1``).
    ``anchor_positions`` must be sorted ascending.
    """
    anchors = np.asarray(anchor_positions, dtype=float)
    if anchors.ndim != 1 or np.any(np.diff(anchors) <= 0):
        raise ContractError("anchor positions must be strictly increasing")
    i0 = bracketing_index(z_target, anchors)
    behind = anchors[max(i0 - L0 + 1, 0): i0 + 1][::-1]
    ahead = anchors[i0 + 1: i0 + 1 + L0]
    if len(behind) < L0 or len(ahead) < L0:
        raise HistoryUnderflow(
            f"need {L0} anchors on each side of z={z_target:g}; have {len(behind)} behind, {len(ahead)} ahead"
        )
    return np.atleast_1d(kernel(z_target, ahead, lambda0)), np.atleast_1d(kernel(z_target, behind, lambda0))


def solve_psd(R: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``R^{-1} r`` through a jittered Cholesky factor."""
    L, _ = cholesky_psd(R)
    return cho_solve((L, True), r)


def estimate_covariance(anchor_positions, sigma0_sq: float, lambda0: float) -> np.ndarray:
    """Covariance of noisy anchor estimates taken at the given positions."""
    K = kernel_matrix(anchor_positions, anchor_positions, lambda0)
    s = sigma0_sq
    R = s * s * K
    R[np.diag_indices_from(R)] = s
    return R


def mmse_weights(z_target: float, anchor_positions, sigma0_sq: float, lambda0: float):
    """Linear MMSE weights of a target response on noisy anchor estimates.

    Returns ``(weights, mse)`` with ``mse = 1 - r^T R^{-1} r``, where ``r``
    is the target/estimate cross-covariance ``sigma0_sq * kernel``.
    """
    anchors = np.atleast_1d(np.asarray(anchor_positions, dtype=float))
    if sigma0_sq <= 0.0 or anchors.size == 0:
        return np.zeros(anchors.size), 1.0
    r = sigma0_sq * np.atleast_1d(kernel(z_target, anchors, lambda0))
    R = estimate_covariance(anchors, sigma0_sq, lambda0)
    w = solve_psd(R, r)
    return w, float(min(max(1.0 - r @ w, 0.0), 1.0))


@dataclass(frozen=True)
class AnchorCovariance:
    """Covariance blocks of a 2*L0 anchor window and its target column.

    Window order is by decreasing block index:
    ``[g(k0+L0), ..., g(k0+1), g(k0), ..., g(k0-L0+1)]``; ``R1``/``R2`` are
    the within-half and cross-half blocks, ``r1``/``r2`` the target
    cross-covariances in the same order. ``refine`` holds the cross
    covariance used when the target is the newest anchor itself.
    """

    L0: int
    sigma0_sq: float
    R1: np.ndarray
    R2: np.ndarray
    r1: np.ndarray | None = None
    r2: np.ndarray | None = None
    refine: np.ndarray | None = None

    def block(self) -> np.ndarray:
        return np.block([[self.R1, self.R2], [self.R2.T, self.R1]])

    def interpolation(self):
        """``(weights, mse)`` on the 2*L0 window."""
        if self.r1 is None or self.r2 is None:
            raise ContractError("no target cross-covariance; pass eta_prime/eta_dprime")
        r = np.concatenate([self.r1, self.r2])
        if self.sigma0_sq <= 0.0:
            return np.zeros_like(r), 1.0
        w = solve_psd(self.block(), r)
        return w, float(min(max(1.0 - r @ w, 0.0), 1.0))

    def refinement(self):
        """``(weights, mse)`` for the newest anchor from the L0 latest estimates."""
        if self.sigma0_sq <= 0.0:
            return np.zeros(self.L0), 1.0
        w = solve_psd(self.R1, self.refine)
        return w, float(min(max(1.0 - self.refine @ w, 0.0), 1.0))


def build_anchor_covariance(L0: int, sigma0_sq: float, etas, eta_prime=None, eta_dprime=None) -> AnchorCovariance:
    """Assemble ``R1, R2, r1, r2`` from a block-lag table ``etas[lag]``.

    ``etas`` needs at least ``2 * L0`` entries (lags ``0 .. 2L0-1``).
    ``eta_prime``/``eta_dprime`` come from :func:`interpolation_etas`.
    """
    etas = np.asarray(etas, dtype=float)
    if L0 < 1 or etas.size < 2 * L0:
        raise ContractError(f"need L0 >= 1 and at least {2 * L0} lag correlations")
    if not 0.0 <= sigma0_sq <= 1.0:
        raise ContractError("sigma0_sq must lie in [0, 1]")
    s = sigma0_sq
    idx = np.arange(L0)
    R1 = s * s * etas[np.abs(idx[:, None] - idx[None, :])]
    R1[idx, idx] = s
    R2 = s * s * etas[np.abs(idx[:, None] - (L0 + idx[None, :]))]
    r1 = r2 = None
    if eta_prime is not None and eta_dprime is not None:
        r1 = s * np.asarray(eta_prime, dtype=float)[:L0][::-1]
        r2 = s * np.asarray(eta_dprime, dtype=float)[:L0]
    refine = s * etas[:L0]
    return AnchorCovariance(L0, s, R1, R2, r1, r2, refine)
