import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import exp1

from posaid.capacity import (CONVENTIONAL, POSITION_AIDED, CapacityEnsemble, ThroughputConfig,
                             capacity_lower_bound, depth_aware_throughput, dof_analytic, dof_empirical,
                             effective_snr, effective_snr_from_mse, effective_snr_optimal, throughput)
from posaid.errors import ContractError, DomainError
from posaid.numerics import sample_standard_complex_gaussian
from posaid.params import GroupLayout, SystemParams, group_layout

GRID = 10.0 ** np.arange(1.0, 5.01, 0.5)


def test_effective_snr_examples():
    assert effective_snr(1.0, 1.0, 1, 1) == pytest.approx(1 / 3)
    assert effective_snr(0.0, 1.0, 1, 1) == 0.0
    assert effective_snr(1e12, 2.0, 3, 3) == pytest.approx(2.0, rel=1e-9)
    assert effective_snr(5.0, 2.0, 3, 2) < min(5.0, 3.0)


def test_effective_snr_from_mse_reduces():
    s = 3.0
    assert effective_snr_from_mse(7.0, 1 - s / (1 + s)) == pytest.approx(effective_snr(7.0, s, 1, 1))


def test_effective_snr_optimal_hand_value():
    assert effective_snr_optimal(1.0, 4, 2) == pytest.approx(1 / 3)
    with pytest.raises(DomainError):
        effective_snr_optimal(1.0, 4, 4)


@given(st.floats(0.01, 1e4), st.integers(3, 500), st.data())
@settings(max_examples=100, deadline=None)
def test_optimal_snr_matches_allocation_and_is_below_p0(P0, T0, data):
    Mg = data.draw(st.integers(1, T0 - 1))
    B0 = T0 * 2 * 20 * 100 / 0.15 + 1.0  # floors to T0
    p = SystemParams(B0=B0, P0=P0)
    cfg = ThroughputConfig.optimal(p, GroupLayout(1, Mg))
    rho = effective_snr_optimal(P0, T0, Mg)
    assert cfg.rho_eff == pytest.approx(rho, rel=1e-12)
    assert rho < P0


def test_throughput_config_constraints(params, layout):
    ThroughputConfig.uniform(params, layout)
    with pytest.raises(ContractError, match="T0"):
        ThroughputConfig(params, layout, 1.0, 3, 1.0, 3)
    with pytest.raises(ContractError, match="energy"):
        ThroughputConfig(params, layout, 1.0, 3, 1.0, params.T0 - 3)


def test_capacity_zero_snr():
    assert capacity_lower_bound(4, 4, 0.0, 50, 0) == (0.0, 0.0)


def test_capacity_scalar_exact():
    # E log2(1 + rho |h|^2) = exp(1/rho) E1(1/rho) / ln 2 for Rayleigh h
    rho = 2.0
    mean, se = capacity_lower_bound(1, 1, rho, 1_000_000, 4)
    exact = math.exp(1 / rho) * exp1(1 / rho) / math.log(2)
    assert abs(mean - exact) < 3 * se


def test_capacity_monotone_with_common_numbers():
    ens = CapacityEnsemble(3, 5, 200, 1)
    for rho in (0.1, 1.0, 10.0):
        assert np.all(ens.samples(2 * rho) >= ens.samples(rho))


def test_ensemble_matches_direct_logdet():
    ens = CapacityEnsemble(3, 5, 100, 2)
    a, _ = ens.mean(4.0)
    b, _ = capacity_lower_bound(3, 5, 4.0, 100, 2)
    assert a == pytest.approx(b, rel=1e-10)


def test_conventional_collapse():
    r = throughput(CONVENTIONAL, 100.0, 8, 8, 4)
    assert r.value == 0.0 and r.degenerate


def test_single_column_groups_equal_conventional():
    a = throughput(POSITION_AIDED, 10.0, 20, 6, 4, GroupLayout(1, 6), trials=300, rng=3)
    b = throughput(CONVENTIONAL, 10.0, 20, 6, 4, trials=300, rng=3)
    assert a == b


def test_throughput_small_case_brute_force():
    r = throughput(POSITION_AIDED, 1.0, 4, 2, 2, GroupLayout(1, 2), trials=20_000, rng=5)
    assert r.pre_log == 0.5 and r.rho_eff == pytest.approx(1 / 3)
    H = sample_standard_complex_gaussian((100_000, 2, 2), np.random.default_rng(6))
    A = np.eye(2) + (1 / 3) / 2 * H @ H.conj().transpose(0, 2, 1)
    vals = 0.5 * np.linalg.slogdet(A)[1] / math.log(2)
    ref, ref_se = vals.mean(), vals.std() / math.sqrt(vals.size)
    assert abs(r.value - ref) < 3 * math.hypot(r.stderr, ref_se)


def test_throughput_non_increasing_in_groups():
    ens = CapacityEnsemble(12, 12, 200, 0)
    vals = [throughput(POSITION_AIDED, 100.0, 40, 12, 12, GroupLayout(12 // mg, mg), ensemble=ens).value
            for mg in (1, 2, 3, 4, 6, 12)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_dof_analytic_examples():
    assert dof_analytic(20, 3, 40) == pytest.approx(3 * 40 / 4)
    assert dof_analytic(40, 3, 40) == 0
    assert dof_analytic(0, 3, 40) == 0
    with pytest.raises(DomainError):
        dof_analytic(41, 1, 40)


def test_dof_empirical_scalar():
    est = dof_empirical(POSITION_AIDED, 4, 1, 1, GroupLayout(1, 1), GRID, 4000, 0)
    assert est.slope == pytest.approx(0.75, abs=0.05)
    assert est.reliable


def test_dof_empirical_conventional_full_block():
    est = dof_empirical(CONVENTIONAL, 4, 4, 4, None, GRID, 100, 0)
    assert est.slope == 0.0 and est.residual == 0.0


def test_dof_empirical_bounded():
    est = dof_empirical(POSITION_AIDED, 10, 4, 2, GroupLayout(2, 2), GRID, 300, 0)
    assert est.slope <= min(4, 2) * (10 - 2) / 10 + 1e-9


def test_dof_grid_must_span_three_decades():
    with pytest.raises(ContractError):
        dof_empirical(POSITION_AIDED, 4, 1, 1, GroupLayout(1, 1), [1.0, 10.0], 10)


def test_depth_aware_reduces_to_scheme_throughput():
    p = SystemParams(P0=100.0)
    lay = group_layout(16, p)
    ens = CapacityEnsemble(16, 16, 200, 0)
    a = depth_aware_throughput(ThroughputConfig.optimal(p, lay), 1, ens)
    b = throughput(POSITION_AIDED, p.P0, p.T0, 16, 16, lay, ensemble=ens)
    assert a.value == pytest.approx(b.value, rel=1e-12)
    c = depth_aware_throughput(ThroughputConfig.optimal(p, lay), 2, ens)
    assert c.value >= a.value
