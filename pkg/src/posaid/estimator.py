"""Position-aided channel estimation and the conventional full-pilot baseline.

Per block the estimator (1) MMSE-estimates the first column of every
group from pilots and files it in that group's CSI table, (2) refines the
newest first-column estimate with the ``L0`` latest table entries and (3)
interpolates every other column from the ``2 L0`` table entries whose
positions bracket it on the path.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .correlation import AnchorCovariance, bracketing_index, mmse_weights
from .errors import ContractError, DomainError
from .numerics import as_generator, sample_standard_complex_gaussian
from .params import GroupLayout, SystemParams


def sigma0_sq(P_tau: float, T_tau: float, Mg: int) -> float:
    """Variance of an initial anchor estimate, ``s / (1 + s)`` with ``s = P_tau T_tau / Mg``."""
    if P_tau <= 0 or T_tau <= 0 or Mg <= 0:
        raise DomainError("P_tau, T_tau and Mg must be positive")
    s = P_tau * T_tau / Mg
    return s / (1.0 + s)


def gamma(eta1: float, eta1p: float, eta1pp: float, sigma0_sq: float) -> float:
    """Interpolation gain of a column over its anchor for ``L0 = 1``.

    ``Gamma > 1`` means the interpolated column has lower MSE than the
    anchor column of its group.
    """
    den = 1.0 - eta1 * eta1 * sigma0_sq * sigma0_sq
    if den <= 0.0:
        raise DomainError("1 - eta1^2 sigma0^4 must be positive")
    return (eta1p * eta1p + eta1pp * eta1pp - 2.0 * eta1 * eta1p * eta1pp * sigma0_sq) / den


@dataclass(frozen=True)
class PilotConfig:
    """Orthogonal pilots: ``S`` is ``n_tx x T_tau`` with ``S S^H = T_tau I``."""

    T_tau: int
    P_tau: float
    S: np.ndarray

    def __post_init__(self):
        n_tx, T = self.S.shape
        if T != self.T_tau:
            raise ContractError(f"pilot matrix has {T} columns, expected T_tau={self.T_tau}")
        if self.T_tau < n_tx:
            raise ContractError(f"T_tau={self.T_tau} < {n_tx} pilot streams")
        if self.P_tau <= 0:
            raise DomainError("P_tau must be positive")
        gram = self.S @ self.S.conj().T
        if not np.allclose(gram, self.T_tau * np.eye(n_tx), atol=1e-9 * self.T_tau):
            raise ContractError("pilot sequences are not orthogonal")

    @classmethod
    def dft(cls, n_tx: int, T_tau: int, P_tau: float) -> "PilotConfig":
        """First ``n_tx`` rows of the ``T_tau``-point DFT matrix (unit-modulus)."""
        if T_tau < n_tx:
            raise ContractError(f"T_tau={T_tau} < {n_tx} pilot streams")
        t = np.arange(T_tau)
        S = np.exp(-2j * np.pi * np.outer(np.arange(n_tx), t) / T_tau)
        return cls(T_tau=T_tau, P_tau=P_tau, S=S)

    @property
    def n_tx(self) -> int:
        return self.S.shape[0]

    @property
    def sigma0_sq(self) -> float:
        return sigma0_sq(self.P_tau, self.T_tau, self.n_tx)

    def estimator_matrix(self) -> np.ndarray:
        """``W`` with ``G_hat = Y @ W``."""
        n = self.n_tx
        A = (n / self.P_tau) * np.eye(n) + self.S @ self.S.conj().T
        # Y S^H A^{-1} with A Hermitian
        return math.sqrt(n / self.P_tau) * np.linalg.solve(A, self.S).conj().T


def pilot_observation(G: np.ndarray, pilots: PilotConfig, rng) -> np.ndarray:
    """Received training block ``sqrt(P_tau / n_tx) G S + V``."""
    N = G.shape[0]
    if G.shape[1] != pilots.n_tx:
        raise ContractError(f"G has {G.shape[1]} columns, pilots carry {pilots.n_tx} streams")
    V = sample_standard_complex_gaussian((N, pilots.T_tau), as_generator(rng))
    return math.sqrt(pilots.P_tau / pilots.n_tx) * G @ pilots.S + V


def initial_estimate(Y_tau: np.ndarray, pilots: PilotConfig, Mg: int | None = None) -> np.ndarray:
    """Pilot-phase MMSE estimate of the pilot-carrying columns (``N x Mg``)."""
    Mg = pilots.n_tx if Mg is None else Mg
    if Mg != pilots.n_tx:
        raise ContractError(f"Mg={Mg} but pilots carry {pilots.n_tx} streams")
    if Y_tau.ndim != 2 or Y_tau.shape[1] != pilots.T_tau:
        raise ContractError(f"Y_tau must be N x {pilots.T_tau}, got {Y_tau.shape}")
    return Y_tau @ pilots.estimator_matrix()


def conventional_estimate(Y_tau: np.ndarray, pilots: PilotConfig, M: int):
    """Full-pilot baseline: every column sends pilots.

    Returns ``(H_hat, mse)`` with ``mse[m] = 1 - sigma0_sq(P_tau, T_tau, M)``.
    """
    if pilots.T_tau < M:
        raise ContractError(f"T_tau={pilots.T_tau} < M={M}: training cannot resolve all columns")
    H_hat = initial_estimate(Y_tau, pilots, M)
    return H_hat, np.full(M, 1.0 - pilots.sigma0_sq)


class CsiTable:
    """History of one group's first-column estimates with their positions.

    Entries are kept oldest first. Appending an entry from a new
    environment epoch discards the old ones, since the field has been
    redrawn.
    """

    def __init__(self, group: int, sigma0_sq: float, lambda0: float, capacity: int):
        self.group = group
        self.sigma0_sq = sigma0_sq
        self.lambda0 = lambda0
        self._entries = deque(maxlen=capacity)
        self.epoch = None

    def __len__(self):
        return len(self._entries)

    def append(self, estimate: np.ndarray, position: float, epoch: int, k: int) -> None:
        if self.epoch is not None and epoch != self.epoch:
            self._entries.clear()
        if self._entries and position <= self._entries[-1][1]:
            raise ContractError("CSI table positions must be strictly increasing")
        self.epoch = epoch
        self._entries.append((estimate, position, k))

    @property
    def positions(self) -> np.ndarray:
        return np.fromiter((e[1] for e in self._entries), dtype=float, count=len(self._entries))

    @property
    def blocks(self) -> list[int]:
        return [e[2] for e in self._entries]

    def estimates(self, idx) -> np.ndarray:
        """``N x len(idx)`` matrix of stored estimates at table indices ``idx``."""
        return np.stack([self._entries[i][0] for i in idx], axis=1)


class ColumnEstimate(NamedTuple):
    h: np.ndarray
    mse: float
    depth: int
    fallback: bool


def _geometry_key(z, anchors, lambda0, s0):
    rel = np.round((np.asarray(anchors) - z) / lambda0, 9)
    return (s0, tuple(rel.tolist()))


def _weights(z, anchors, table: CsiTable, cache):
    if cache is None:
        return mmse_weights(z, anchors, table.sigma0_sq, table.lambda0)
    key = _geometry_key(z, anchors, table.lambda0, table.sigma0_sq)
    hit = cache.get(key)
    if hit is None:
        hit = cache[key] = mmse_weights(z, anchors, table.sigma0_sq, table.lambda0)
    return hit


def refine_anchor(table: CsiTable, L0: int, covariance: AnchorCovariance | None = None,
                  cache: dict | None = None) -> ColumnEstimate:
    """MMSE estimate of the newest first column from the ``L0`` latest entries.

    With fewer same-epoch entries the largest available depth is used and
    the result is flagged. ``covariance`` (from
    :func:`~posaid.correlation.build_anchor_covariance`) supplies
    precomputed blocks for the full window.
    """
    n = len(table)
    if n == 0:
        raise ContractError("empty CSI table")
    depth = min(L0, n)
    idx = list(range(n - 1, n - 1 - depth, -1))  # newest first
    pos = table.positions[idx]
    if covariance is not None and depth == covariance.L0:
        w, mse = covariance.refinement()
    else:
        w, mse = _weights(pos[0], pos, table, cache)
    h = table.estimates(idx) @ w
    return ColumnEstimate(h, mse, depth, depth < L0)


def interpolate_column(table: CsiTable, z_target: float, L0: int,
                       cache: dict | None = None) -> ColumnEstimate:
    """MMSE estimate of a trailing column from the anchors bracketing it.

    Uses the ``L0`` entries at or behind ``z_target`` and the ``L0`` ahead
    of it. When either side is short (cold start, epoch renewal) whatever
    same-epoch entries exist on the two sides are used and the estimate is
    flagged as a fallback.
    """
    n = len(table)
    if n == 0:
        raise ContractError("empty CSI table")
    positions = table.positions
    i0 = bracketing_index(z_target, positions)
    ahead = list(range(min(i0 + L0, n - 1), i0, -1))  # k0+L0 .. k0+1
    behind = list(range(i0, max(i0 - L0, -1), -1))  # k0 .. k0-L0+1
    idx = ahead + behind
    w, mse = _weights(z_target, positions[idx], table, cache)
    h = table.estimates(idx) @ w
    full = len(ahead) == L0 and len(behind) == L0
    return ColumnEstimate(h, mse, min(len(ahead), len(behind)), not full)


@dataclass
class EstimateReport:
    """Estimate of one block's channel matrix with per-column analytic MSE.

    Padded columns of the last group are not part of ``H_hat``; they are
    estimated as zero with MSE 0 by convention and dropped.
    """

    k: int
    H_hat: np.ndarray
    mse: np.ndarray
    sigma0_sq: float
    L0: int
    depth: np.ndarray
    fallback: np.ndarray


class PositionAidedEstimator:
    """Stateful per-trial estimation session (one CSI table per group).

    Parameters
    ----------
    params : SystemParams
    layout : GroupLayout
    pilots : PilotConfig
        Pilots for the ``Mg`` first columns.
    L0 : int, optional
        History depth; defaults to ``params.L0``.
    cache : dict, optional
        Shared weight cache; pass the same dict to sessions of the same
        scenario to skip re-solving identical geometries.
    """

    def __init__(self, params: SystemParams, layout: GroupLayout, pilots: PilotConfig,
                 L0: int | None = None, cache: dict | None = None):
        if pilots.n_tx != layout.Mg:
            raise ContractError(f"pilots carry {pilots.n_tx} streams, layout has Mg={layout.Mg}")
        self.params = params
        self.layout = layout
        self.pilots = pilots
        self.L0 = params.L0 if L0 is None else int(L0)
        self.sigma0_sq = pilots.sigma0_sq
        self.cache = {} if cache is None else cache
        self._W = pilots.estimator_matrix()
        lag = params.lambda0 * params.B0 / (2.0 * params.v0 * params.T0)
        capacity = 2 * self.L0 + math.ceil(layout.Me * lag) + 2
        self.tables = [CsiTable(i, self.sigma0_sq, params.lambda0, capacity) for i in range(layout.Mg)]
        self.anchor_columns = np.arange(layout.Mg) * layout.Me

    def observe(self, block, rng=None, Y_tau: np.ndarray | None = None) -> np.ndarray:
        """Step 1: pilot phase for ``block``; returns ``G_hat`` (``N x Mg``)."""
        if Y_tau is None:
            G = block.H[:, self.anchor_columns]
            Y_tau = pilot_observation(G, self.pilots, rng)
        G_hat = Y_tau @ self._W
        for i, table in enumerate(self.tables):
            table.append(G_hat[:, i], float(block.positions[self.anchor_columns[i]]), block.epoch, block.k)
        return G_hat

    def estimate(self, block) -> EstimateReport:
        """Steps 2 and 3 for the most recently observed block."""
        Me, M = self.layout.Me, self.layout.M
        N = block.H.shape[0]
        H_hat = np.zeros((N, M), dtype=complex)
        mse = np.zeros(M)
        depth = np.zeros(M, dtype=int)
        fallback = np.zeros(M, dtype=bool)
        for i, table in enumerate(self.tables):
            base = i * Me
            est = refine_anchor(table, self.L0, cache=self.cache)
            H_hat[:, base], mse[base], depth[base], fallback[base] = est
            for j in range(1, Me):
                m = base + j
                if m >= M:
                    break
                est = interpolate_column(table, float(block.positions[m]), self.L0, cache=self.cache)
                H_hat[:, m], mse[m], depth[m], fallback[m] = est
        return EstimateReport(block.k, H_hat, mse, self.sigma0_sq, self.L0, depth, fallback)

    def step(self, block, rng=None) -> EstimateReport:
        self.observe(block, rng)
        return self.estimate(block)

    def run(self, blocks, rng) -> EstimateReport:
        """Observe all ``blocks`` (pilot noise drawn in one batch); report the last."""
        gen = as_generator(rng)
        G = np.stack([b.H[:, self.anchor_columns] for b in blocks])
        V = sample_standard_complex_gaussian((len(blocks), G.shape[1], self.pilots.T_tau), gen)
        Y = math.sqrt(self.pilots.P_tau / self.pilots.n_tx) * G @ self.pilots.S + V
        for block, y in zip(blocks, Y):
            self.observe(block, Y_tau=y)
        return self.estimate(blocks[-1])


def estimate_full_matrix(blocks, params: SystemParams, layout: GroupLayout, pilots: PilotConfig,
                         L0: int | None = None, rng=None) -> EstimateReport:
    """Run Steps 1-3 over ``blocks`` in order; report the last block."""
    if not blocks:
        raise ContractError("at least one block is required")
    return PositionAidedEstimator(params, layout, pilots, L0).run(blocks, rng)


def steady_state_mse(params: SystemParams, layout: GroupLayout, sigma0: float, L0: int | None = None):
    """Analytic per-offset MSE deep inside an epoch (full windows everywhere).

    Returns an array of length ``Me``: entry 0 is the refined first
    column, entry ``j - 1`` the interpolated column ``j``.
    """
    L0 = params.L0 if L0 is None else L0
    d = params.anchor_spacing
    half = 0.5 * params.lambda0
    lag = params.lambda0 * params.B0 / (2.0 * params.v0 * params.T0)
    k = 2 * L0 + math.ceil(layout.Me * lag) + 2
    anchors = np.arange(k) * d
    out = np.empty(layout.Me)
    _, out[0] = mmse_weights(anchors[-1], anchors[::-1][:L0], sigma0, params.lambda0)
    for j in range(2, layout.Me + 1):
        z = anchors[-1] - (j - 1) * half
        i0 = bracketing_index(z, anchors)
        idx = list(range(i0 + L0, i0, -1)) + list(range(i0, i0 - L0, -1))
        _, out[j - 1] = mmse_weights(z, anchors[idx], sigma0, params.lambda0)
    return out
