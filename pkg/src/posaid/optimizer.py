"""Optimal resource allocation, the interpolation SNR threshold and their oracles.

Closed forms give the optimal energy split, training length and group
count. Each comes with an independent numerical check (grid search,
common-random-number sweep, dense scan) that reports pass/fail per claim.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from ._backend import kernels
from .capacity import CONVENTIONAL, POSITION_AIDED, CapacityEnsemble, dof_analytic, effective_snr
from .errors import ContractError, DomainError
from .estimator import gamma
from .numerics import bessel_j0
from .params import GroupLayout, SystemParams


# -- verification reports --------------------------------------------------


@dataclass
class Claim:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    """Named list of pass/fail claims with a plain-text serialization."""

    name: str
    claims: list[Claim] = field(default_factory=list)
    values: dict = field(default_factory=dict)

    def check(self, name: str, passed, detail: str = "") -> bool:
        passed = bool(passed)
        self.claims.append(Claim(name, passed, detail))
        return passed

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.claims)

    def to_text(self) -> str:
        lines = [f"report {self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.claims:
            lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}" + (f": {c.detail}" if c.detail else ""))
        for key, value in self.values.items():
            lines.append(f"  {key} = {value}")
        return "\n".join(lines)

    def __str__(self):
        return self.to_text()


# -- power split -----------------------------------------------------------


def optimal_power_fraction(T_d: float, Mg: float, P0: float, T0: float) -> float:
    """Fraction ``alpha`` of the block energy ``P0 T0`` spent on data.

    Then ``P_d = alpha P0 T0 / T_d`` and ``P_tau T_tau = (1 - alpha) P0 T0``.
    """
    if not 0 < T_d < T0 or Mg <= 0 or P0 <= 0:
        raise DomainError("need 0 < T_d < T0 and positive Mg, P0")
    E = P0 * T0
    a = math.sqrt(Mg * (T_d + E))
    b = math.sqrt(T_d * (Mg + E))
    return b / (a + b)


def power_objective(alpha, T_d: float, Mg: float, P0: float, T0: float):
    """``Mg (T_d + E) / (1 - alpha) + T_d (Mg + E) / alpha`` with ``E = P0 T0``.

    Equals ``E**2 / rho_eff`` for the split ``alpha``.
    """
    E = P0 * T0
    alpha = np.asarray(alpha, dtype=float)
    return Mg * (T_d + E) / (1.0 - alpha) + T_d * (Mg + E) / alpha


def verify_power_convexity(T_d: float, Mg: float, P0: float, T0: float,
                           resolution: float = 1e-5) -> VerificationReport:
    """Grid check that the power objective is convex with the closed-form minimum."""
    rep = VerificationReport("power_convexity")
    n = int(round(1.0 / resolution))
    alpha = np.arange(1, n) / n
    L = power_objective(alpha, T_d, Mg, P0, T0)
    d2 = L[2:] - 2.0 * L[1:-1] + L[:-2]
    tol = 64 * np.finfo(float).eps * L[1:-1]
    rep.check("second_differences_positive", np.all(d2 > -tol), f"min={d2.min():.3e}")
    i_min = int(np.argmin(L))
    rep.check("interior_minimum", 0 < i_min < L.size - 1, f"alpha_grid={alpha[i_min]:.6f}")
    step = np.diff(L)
    slack = 64 * np.finfo(float).eps * np.maximum(L[1:], L[:-1])
    rep.check("unique_minimum", np.all(step[:i_min] <= slack[:i_min]) and np.all(step[i_min:] >= -slack[i_min:]))
    a_star = optimal_power_fraction(T_d, Mg, P0, T0)
    rep.check("closed_form_alpha", abs(alpha[i_min] - a_star) <= 1e-4,
              f"closed={a_star:.8f} grid={alpha[i_min]:.8f}")
    E = P0 * T0
    closed_min = (math.sqrt(Mg * (T_d + E)) + math.sqrt(T_d * (Mg + E))) ** 2
    at_star = float(power_objective(a_star, T_d, Mg, P0, T0))
    rep.check("closed_form_minimum", abs(at_star - closed_min) <= 1e-10 * closed_min and L.min() >= closed_min * (1 - 1e-12),
              f"L_min={closed_min:.10g} grid_min={L.min():.10g}")
    rep.values.update(alpha_star=a_star, L_min=closed_min)
    return rep


# -- training length -------------------------------------------------------


def optimal_training_interval(Mg: int) -> int:
    """Optimal pilot length under the optimal power split: one symbol per anchor."""
    if Mg < 1:
        raise DomainError("Mg must be >= 1")
    return int(Mg)


def td_sweep(P0: float, T0: int, Mg: int, ensemble: CapacityEnsemble):
    """Per-trial ``T_d / T0 log2 det(...)`` for ``T_d = 1 .. T0 - Mg`` at the optimal split.

    Returns ``(T_d values, samples)`` with samples of shape ``(len(T_d), trials)``.
    """
    if not 1 <= Mg < T0:
        raise DomainError("need 1 <= Mg < T0")
    E = P0 * T0
    tds = np.arange(1, T0 - Mg + 1)
    rows = []
    for T_d in tds:
        T_tau = T0 - T_d
        alpha = optimal_power_fraction(T_d, Mg, P0, T0)
        P_d = alpha * E / T_d
        P_tau = (1.0 - alpha) * E / T_tau
        rows.append(T_d / T0 * ensemble.samples(effective_snr(P_d, P_tau, T_tau, Mg)))
    return tds, np.array(rows)


def verify_td_monotonicity(P0: float, T0: int, Mg: int, M: int, N: int, trials: int = 2000,
                           rng=0) -> VerificationReport:
    """Check that the rate grows with the data length when training shrinks toward ``Mg``."""
    rep = VerificationReport(f"td_monotonicity(P0={P0:g},T0={T0},Mg={Mg},M={M},N={N})")
    ens = CapacityEnsemble(M, N, trials, rng)
    tds, samples = td_sweep(P0, T0, Mg, ens)
    means = samples.mean(axis=1)
    diffs = np.diff(samples, axis=0)
    d_mean = diffs.mean(axis=1)
    d_se = diffs.std(axis=1, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros_like(d_mean)
    se = samples.std(axis=1, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros_like(means)
    tol = 2.0 * np.maximum(d_se, se[1:])
    bad = np.flatnonzero(d_mean < -tol)
    rep.check("non_decreasing", bad.size == 0,
              "ok" if bad.size == 0 else f"drops after T_d={tds[bad].tolist()}")
    rep.check("maximum_at_shortest_training", means[-1] >= means.max() - 2.0 * se.max(),
              f"R(T0-Mg)={means[-1]:.6g} max={means.max():.6g}")
    rep.values.update(T_d=tds.tolist(), rate=[float(m) for m in means])
    return rep


# -- interpolation SNR threshold ---------------------------------------------


class OmegaResult(NamedTuple):
    omega: float
    threshold_db: float
    fraction: float
    skipped_points: int
    per_offset: dict


def omega_threshold(params: SystemParams, layout: GroupLayout, grid: int = 10_000,
                    position_tol: float = 1e-10) -> OmegaResult:
    """Largest anchor-estimate quality below which every column beats its anchor.

    For a target a fraction ``f`` of the anchor spacing past the older
    bracketing anchor, interpolation gain exceeds 1 while ``sigma0_sq`` is
    below the smaller root of the gain-equals-one quadratic. ``Omega`` is
    that root minimized over positions, found on a ``grid`` of fractions
    and refined by golden-section search to ``position_tol`` metres.

    The root depends on the target only through ``f``, so the scan over
    ``f`` in (0, 1) covers every within-group offset at once; the value
    at each offset's realized fraction is reported in ``per_offset``.
    Grid points with a negative discriminant (gain above 1 for all
    ``sigma0_sq``) are skipped and counted.
    """
    d = params.anchor_spacing
    r = d / params.lambda0
    f = np.arange(1, grid) / grid
    values, valid = kernels.omega_objective(f, r)
    if not np.any(valid):
        raise DomainError("gain condition holds unconditionally at every position")
    vals = np.where(valid, values, np.inf)
    i = int(np.argmin(vals))
    lo, hi = f[max(i - 1, 0)], f[min(i + 1, f.size - 1)]

    def objective(x):
        v, ok = kernels.omega_objective(np.array([x]), r)
        return float(v[0]) if ok[0] else math.inf

    res = minimize_scalar(objective, bracket=(lo, f[i], hi), method="golden",
                          options={"xtol": max(position_tol / d, 1e-12)})
    f_best, omega = (float(res.x), float(res.fun)) if res.fun <= vals[i] else (float(f[i]), float(vals[i]))
    per_offset = {}
    step = 0.5 * params.lambda0 / d
    for j in range(2, layout.Me + 1):
        frac = (-(j - 1) * step) % 1.0
        v, ok = kernels.omega_objective(np.array([frac]), r)
        per_offset[j] = (frac, float(v[0]) if ok[0] else math.nan)
    return OmegaResult(omega, 10.0 * math.log10(omega / (1.0 - omega)), f_best, int((~valid).sum()), per_offset)


def gain_at(params: SystemParams, fraction: float, sigma0_sq: float) -> float:
    """Interpolation gain at a target ``fraction`` of the anchor spacing."""
    x = 2.0 * math.pi * params.anchor_spacing / params.lambda0
    return gamma(bessel_j0(x), bessel_j0(x * (1.0 - fraction)), bessel_j0(x * fraction), sigma0_sq)


def verify_gain_threshold(params: SystemParams, layout: GroupLayout, n_random: int = 1000,
                          rng=0) -> VerificationReport:
    """Below the threshold every sampled position has gain > 1; above it some do not."""
    rep = VerificationReport("gain_threshold")
    res = omega_threshold(params, layout)
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    snr_max = res.omega / (1.0 - res.omega)
    snr = snr_max * gen.uniform(0.0, 1.0, n_random)
    fr = gen.uniform(0.0, 1.0, n_random)
    gains = np.array([gain_at(params, f, s / (1.0 + s)) for f, s in zip(fr, snr)])
    rep.check("below_threshold_gain_gt_1", np.all(gains > 1.0), f"min gain={gains.min():.12f}")
    fractions = np.concatenate([np.arange(1, 1000) / 1000.0, [res.fraction]])
    above = res.threshold_db + np.arange(0.1, 20.0, 1.0)
    misses = []
    for db in above:
        s = 10.0 ** (db / 10.0)
        s0 = s / (1.0 + s)
        if min(gain_at(params, f, s0) for f in fractions) > 1.0:
            misses.append(round(float(db), 2))
    rep.check("above_threshold_gain_le_1_somewhere", not misses,
              "ok" if not misses else f"no position with gain <= 1 at {misses} dB")
    rep.values.update(omega=res.omega, threshold_db=res.threshold_db)
    return rep


# -- antenna count ---------------------------------------------------------


def optimal_group_candidates(T0: int) -> tuple[int, ...]:
    """Integer ``Mg`` maximizing the DoF parabola; two entries on an exact tie."""
    if T0 < 2:
        raise DomainError("T0 must be >= 2")
    lo, hi = math.floor(T0 / 2), math.ceil(T0 / 2)
    a, b = dof_analytic(lo, 1, T0), dof_analytic(hi, 1, T0)
    if lo == hi or a > b:
        return (lo,)
    if b > a:
        return (hi,)
    return (lo, hi)


def optimal_group_count(T0: int) -> int:
    """DoF-optimal number of groups; ties go to the smaller (less pilot overhead)."""
    return optimal_group_candidates(T0)[0]


def optimal_antennas(scheme: str, T0: int, Me: int = 1) -> int:
    """DoF-optimal transmit array size for a scheme."""
    Mg = optimal_group_count(T0)
    if scheme == POSITION_AIDED:
        return Mg * Me
    if scheme == CONVENTIONAL:
        return Mg
    raise ContractError(f"unknown scheme {scheme!r}")
