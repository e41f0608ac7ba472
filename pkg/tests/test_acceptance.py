"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Tolerances are the stated ones; seeds are fixed up front and not tuned.
"""
import time

import numpy as np
import pytest

from posaid import cli
from posaid.capacity import (CONVENTIONAL, POSITION_AIDED, CapacityEnsemble, ThroughputConfig,
                             depth_aware_throughput, throughput)
from posaid.experiments import estimator_mse_monte_carlo, keystone_params, verify_dof_peak
from posaid.numerics import RngStream
from posaid.optimizer import (omega_threshold, optimal_power_fraction, power_objective, verify_gain_threshold,
                              verify_td_monotonicity)
from posaid.params import GroupLayout, SystemParams, group_layout, max_group_size

pytestmark = pytest.mark.slow
SEED = 20261018


def test_c01_omega_threshold(acceptance_line):
    p = SystemParams(xi0=20)
    t = time.perf_counter()
    res = omega_threshold(p, group_layout(p.M, p))
    dt = time.perf_counter() - t
    ok = abs(res.omega / 0.999997609 - 1) <= 1e-6 and abs(res.threshold_db - 56.2) <= 0.1 and dt < 30
    assert acceptance_line(1, ok, f"Omega={res.omega:.10f} threshold={res.threshold_db:.3f} dB in {dt:.2f} s")


def test_c02_geometry(acceptance_line):
    p = SystemParams(lambda0=0.15, B0=1e7, xi0=20, v0=100, t0=5e-3)
    ok = p.T0 == 375 and max_group_size(p) == 7
    assert acceptance_line(2, ok, f"T0={p.T0} Me={max_group_size(p)}")


def test_c03_estimator_consistency(acceptance_line):
    params, layout = keystone_params()
    assert (layout.Me, layout.Mg, params.N) == (4, 4, 8)
    t = time.perf_counter()
    worst, details, ok = 0.0, [], True
    for L0 in (1, 2):
        res = estimator_mse_monte_carlo(params, layout, L0, [0.5, 0.9], 10_000, "idealized", SEED)
        for s0, (emp, se, ana, fb) in zip((0.5, 0.9), res):
            z = np.abs(emp - ana) / se
            ok &= bool(np.all(z <= 3.0)) and not fb.any()
            worst = max(worst, float(z.max()))
            details.append(f"L0={L0},s0={s0}:max|z|={z.max():.2f}")
    dt = time.perf_counter() - t
    ok &= dt < 300
    assert acceptance_line(3, ok, f"{' '.join(details)} in {dt:.0f} s")


def test_c04_gain_threshold(acceptance_line):
    p = SystemParams()
    rep = verify_gain_threshold(p, group_layout(p.M, p), n_random=1000, rng=SEED)
    assert acceptance_line(4, rep.passed, "; ".join(f"{c.name}={'ok' if c.passed else c.detail}" for c in rep.claims))


def test_c05_power_split(acceptance_line):
    gen = np.random.default_rng(SEED)
    grid = np.arange(1, 100_000) / 100_000
    worst = 0.0
    for _ in range(100):
        T0 = int(gen.integers(3, 500))
        T_d, Mg = int(gen.integers(1, T0)), int(gen.integers(1, T0))
        P0 = float(10 ** gen.uniform(-2, 4))
        a = optimal_power_fraction(T_d, Mg, P0, T0)
        worst = max(worst, abs(grid[np.argmin(power_objective(grid, T_d, Mg, P0, T0))] - a))
    sym = [optimal_power_fraction(k, k, P0, T0) for k, P0, T0 in [(1, 1.0, 4), (5, 3.3, 17), (40, 1e3, 375)]]
    ok = worst <= 1e-4 and all(s == 0.5 for s in sym)
    assert acceptance_line(5, ok, f"max |alpha - grid argmin|={worst:.2e}; symmetric cases={sym}")


def test_c06_training_length(acceptance_line):
    reps = [verify_td_monotonicity(P0, 20, 4, 4, 4, 2000, RngStream(SEED, 6, (i,))) for i, P0 in enumerate((1.0, 10.0))]
    ok = all(r.passed for r in reps)
    assert acceptance_line(6, ok, "; ".join(f"{r.name}: {'ok' if r.passed else 'violated'}" for r in reps))


def test_c07_dof_parabola(acceptance_line):
    reps = [verify_dof_peak(40, Me, 500, SEED) for Me in (1, 4)]
    ok = all(r.passed for r in reps)
    detail = "; ".join(f"Me={Me}: " + ", ".join(c.detail for c in r.claims) for Me, r in zip((1, 4), reps))
    assert acceptance_line(7, ok, detail)


def test_c08_conventional_collapse(acceptance_line):
    base = SystemParams(B0=4e5, M=16, N=16, P0=1000.0)
    ens = CapacityEnsemble(16, 16, 500, RngStream(SEED, 8))
    pa, conv, t0s = [], [], []
    for v in range(20, 141, 20):
        p = base.replace(v0=float(v))
        t0s.append(p.T0)
        pa.append(throughput(POSITION_AIDED, p.P0, p.T0, 16, 16, group_layout(16, p), ensemble=ens).value)
        conv.append(throughput(CONVENTIONAL, p.P0, p.T0, 16, 16, GroupLayout.conventional(16), ensemble=ens).value)
    zero_ok = all((c == 0.0) == (t <= 16) for c, t in zip(conv, t0s))
    crosses = min(t0s) <= 16 < max(t0s)
    ratio = max(pa) / min(pa)
    drop = 1 - min(conv) / max(conv)
    ok = zero_ok and crosses and ratio <= 1.3 and drop > 0.5
    assert acceptance_line(8, ok, f"T0={t0s}; position-aided max/min={ratio:.3f}; conventional drop={drop:.0%}")


def test_c09_depth_gain(acceptance_line):
    p = SystemParams(v0=100.0, M=16, N=16, P0=100.0)
    layout = group_layout(16, p)
    ens = CapacityEnsemble(16, 16, 2000, RngStream(SEED, 9))
    cfg = ThroughputConfig.optimal(p, layout)
    r1 = depth_aware_throughput(cfg, 1, ens)
    r2 = depth_aware_throughput(cfg, 2, ens)
    diff = r2.value - r1.value
    ok = diff >= -2 * max(r1.stderr, r2.stderr) and diff <= 0.05 * r1.value
    assert acceptance_line(9, ok, f"L0=1: {r1.value:.3f}, L0=2: {r2.value:.3f}, gain {diff / r1.value:.3%}")


def test_c10_replay_determinism(acceptance_line, tmp_path):
    conf = tmp_path / "c.conf"
    conf.write_text(f"seed = {SEED}\ntrials = 100\nM = 8\nN = 8\n")
    same = []
    for exp in ("sweep_velocity", "sweep_L0", "sweep_snr"):
        out = tmp_path / exp
        assert cli.main(["--experiment", exp, "--config", str(conf), "--out", str(out)]) == 0
        cli.main(["--replay", str(out / "manifest.json"), "--out", str(out / "replay"), "--threads", "2"])
        same.append((out / f"{exp}.csv").read_bytes() == (out / "replay" / f"{exp}.csv").read_bytes())
    assert acceptance_line(10, all(same), f"byte-identical replays: {sum(same)}/{len(same)}")
