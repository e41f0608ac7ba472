"""Parameter sweeps and the verification suite behind the command line.

Every experiment returns a header and rows; the driver writes them as CSV
next to a manifest that is enough to re-run the experiment byte for byte.
Random numbers come from :class:`~posaid.numerics.RngStream` keyed by the
seed and the sweep point, never by worker or completion order.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .capacity import (CONVENTIONAL, POSITION_AIDED, CapacityEnsemble, ThroughputConfig,
                       depth_aware_throughput, dof_analytic, dof_empirical, throughput)
from .errors import ConfigurationError
from .estimator import PilotConfig, PositionAidedEstimator, sigma0_sq, steady_state_mse
from .field import FieldGenerator
from .numerics import RngStream
from .optimizer import (VerificationReport, omega_threshold, optimal_power_fraction, verify_gain_threshold,
                        verify_power_convexity, verify_td_monotonicity)
from .params import GroupLayout, SystemParams, group_layout, max_group_size

EXPERIMENTS = ("sweep_velocity", "sweep_groups", "sweep_antennas", "sweep_snr", "sweep_L0", "verify_all")
VELOCITIES = tuple(range(20, 141, 20))
ANTENNAS = (8, 16, 24, 32, 48, 64)
SNR_DB = tuple(range(0, 41, 5))
DEPTHS = (1, 2, 3, 4)
DOF_P0 = tuple(10.0 ** np.arange(2.0, 5.01, 0.25))
MAX_GROUP_SWEEP_T0 = 100

# stream indices, one per use of randomness
_S_CAPACITY, _S_DOF, _S_VERIFY, _S_FIELD = 0, 1, 2, 3


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    params: SystemParams
    out: Path
    seed: int = 0
    trials: int = 500
    mode: str = "physical"
    threads: int = 1
    config_path: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.trials < 2:
            raise ConfigurationError("trials must be >= 2 (a standard error is reported)")
        if self.mode not in ("physical", "idealized"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")


@dataclass
class ExperimentResult:
    header: list
    rows: list
    passed: bool = True
    report: str = ""


def _ensemble(seed, M, N, trials):
    return CapacityEnsemble(M, N, trials, RngStream(seed, _S_CAPACITY, (M, N)))


# -- sweep point workers (module level so a process pool can pickle them) --


def _velocity_point(task):
    params, seed, trials, v = task
    p = params.replace(v0=float(v))
    layout = group_layout(p.M, p)
    ens = _ensemble(seed, p.M, p.N, trials)
    rows = []
    for scheme, lay in ((POSITION_AIDED, layout), (CONVENTIONAL, GroupLayout.conventional(p.M))):
        r = throughput(scheme, p.P0, p.T0, p.M, p.N, lay, ensemble=ens)
        rows.append([v, scheme, p.T0, lay.Me, lay.Mg, r.rho_eff, r.value, r.stderr])
    return rows


def _antenna_point(task):
    params, seed, trials, M = task
    layout = group_layout(M, params)
    ens = _ensemble(seed, M, params.N, trials)
    rows = []
    for scheme, lay in ((POSITION_AIDED, layout), (CONVENTIONAL, GroupLayout.conventional(M))):
        r = throughput(scheme, params.P0, params.T0, M, params.N, lay, ensemble=ens)
        rows.append([M, scheme, params.T0, lay.Me, lay.Mg, r.rho_eff, r.value, r.stderr])
    return rows


def _group_point(task):
    params, seed, trials, Mg = task
    Me = max_group_size(params)
    M = Mg * Me
    layout = GroupLayout(Me, Mg)
    est = dof_empirical(POSITION_AIDED, params.T0, M, M, layout, DOF_P0, trials,
                        RngStream(seed, _S_DOF, (M,)))
    return [[Mg, Me, M, params.T0, dof_analytic(Mg, Me, params.T0), est.slope, est.residual, est.reliable]]


def _depth_rows(p: SystemParams, seed, trials, label):
    layout = group_layout(p.M, p)
    ens = _ensemble(seed, p.M, p.N, trials)
    cfg = ThroughputConfig.optimal(p, layout)
    s0 = sigma0_sq(cfg.P_tau, cfg.T_tau, layout.Mg)
    rows = []
    for L0 in DEPTHS:
        if L0 > p.xi0:
            continue
        r = depth_aware_throughput(cfg, L0, ens)
        worst = float(steady_state_mse(p, layout, s0, L0).max())
        rows.append([label, POSITION_AIDED, L0, p.T0, layout.Me, layout.Mg, s0, worst, r.rho_eff, r.value, r.stderr])
    conv = throughput(CONVENTIONAL, p.P0, p.T0, p.M, p.N, GroupLayout.conventional(p.M), ensemble=ens)
    s_conv = math.nan
    if not conv.degenerate:
        alpha = optimal_power_fraction(p.T0 - p.M, p.M, p.P0, p.T0)
        s_conv = sigma0_sq((1.0 - alpha) * p.P0 * p.T0 / p.M, p.M, p.M)
    rows.append([label, CONVENTIONAL, 1, p.T0, 1, p.M, s_conv, 1.0 - s_conv, conv.rho_eff, conv.value, conv.stderr])
    return rows


def _snr_point(task):
    params, seed, trials, db = task
    return _depth_rows(params.replace(P0=10.0 ** (db / 10.0)), seed, trials, db)


def _depth_point(task):
    params, seed, trials, v = task
    return _depth_rows(params.replace(v0=float(v)), seed, trials, v)


def _map(fn, tasks, threads):
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, tasks))
    else:
        results = [fn(t) for t in tasks]
    return [row for rows in results for row in rows]


# -- experiments -----------------------------------------------------------

_DEPTH_HEADER = ["scheme", "L0", "T0", "Me", "Mg", "sigma0_sq", "worst_mse", "rho_eff", "throughput", "stderr"]


def sweep_velocity(spec: ExperimentSpec) -> ExperimentResult:
    tasks = [(spec.params, spec.seed, spec.trials, v) for v in VELOCITIES]
    header = ["velocity", "scheme", "T0", "Me", "Mg", "rho_eff", "throughput", "stderr"]
    return ExperimentResult(header, _map(_velocity_point, tasks, spec.threads))


def sweep_antennas(spec: ExperimentSpec) -> ExperimentResult:
    tasks = [(spec.params, spec.seed, spec.trials, M) for M in ANTENNAS]
    header = ["M", "scheme", "T0", "Me", "Mg", "rho_eff", "throughput", "stderr"]
    return ExperimentResult(header, _map(_antenna_point, tasks, spec.threads))


def sweep_groups(spec: ExperimentSpec) -> ExperimentResult:
    T0 = spec.params.T0
    if T0 > MAX_GROUP_SWEEP_T0:
        raise ConfigurationError(
            f"sweep_groups uses M = N = Mg*Me and needs T0 <= {MAX_GROUP_SWEEP_T0}, got T0={T0}; "
            "raise v0 or lower B0 (see configs/desk_groups.conf)"
        )
    tasks = [(spec.params, spec.seed, spec.trials, Mg) for Mg in range(2, T0 - 1, 2)]
    header = ["Mg", "Me", "M", "T0", "dof_analytic", "dof_empirical", "residual", "reliable"]
    return ExperimentResult(header, _map(_group_point, tasks, spec.threads))


def sweep_snr(spec: ExperimentSpec) -> ExperimentResult:
    tasks = [(spec.params, spec.seed, spec.trials, db) for db in SNR_DB]
    return ExperimentResult(["snr_db"] + _DEPTH_HEADER, _map(_snr_point, tasks, spec.threads))


def sweep_L0(spec: ExperimentSpec) -> ExperimentResult:
    tasks = [(spec.params, spec.seed, spec.trials, v) for v in VELOCITIES]
    return ExperimentResult(["velocity"] + _DEPTH_HEADER, _map(_depth_point, tasks, spec.threads))


# -- estimator Monte Carlo -------------------------------------------------


def last_block_of_first_epoch(params: SystemParams, layout: GroupLayout) -> int:
    gen = FieldGenerator(params, layout)
    k = 1
    while gen.epoch_of(k + 1) == 0:
        k += 1
    return k


def estimator_mse_monte_carlo(params: SystemParams, layout: GroupLayout, L0: int, sigma0_values, trials: int,
                              mode: str = "idealized", seed: int = 0, K: int | None = None):
    """Empirical per-column MSE of the estimator at block ``K`` against the analytic value.

    One field realization per trial is shared by every ``sigma0_sq`` in
    ``sigma0_values`` (common random numbers); pilot noise is independent
    per value. ``K`` defaults to the last block of the first epoch, where
    every column has a full window.

    Returns a list with one ``(empirical, stderr, analytic, fallback_count)``
    tuple of per-column arrays per ``sigma0_sq``.
    """
    K = last_block_of_first_epoch(params, layout) if K is None else K
    gen = FieldGenerator(params, layout, mode, conditioning_depth=max(L0, 2))
    pilots = []
    for s0 in sigma0_values:
        s = s0 / (1.0 - s0)
        pilots.append(PilotConfig.dft(layout.Mg, layout.Mg, s))
    caches = [{} for _ in pilots]
    sq = np.zeros((len(pilots), trials, layout.M))
    fallbacks = np.zeros((len(pilots), layout.M), dtype=int)
    for t in range(trials):
        stream = RngStream(seed, _S_FIELD, (t,))
        blocks = gen.generate(K, stream.substream(0))
        H = blocks[-1].H
        for i, pc in enumerate(pilots):
            sess = PositionAidedEstimator(params, layout, pc, L0, cache=caches[i])
            rep = sess.run(blocks, stream.substream(1 + i))
            sq[i, t] = np.mean(np.abs(H - rep.H_hat) ** 2, axis=0)
            fallbacks[i] += rep.fallback
    out = []
    for i, s0 in enumerate(sigma0_values):
        analytic = np.tile(steady_state_mse(params, layout, s0, L0), layout.Mg)[: layout.M]
        out.append((sq[i].mean(axis=0), sq[i].std(axis=0, ddof=1) / math.sqrt(trials), analytic, fallbacks[i]))
    return out


def keystone_params(**changes) -> tuple[SystemParams, GroupLayout]:
    """Scenario with four columns per group and four groups (N = 8)."""
    p = SystemParams(v0=50.0, M=16, N=8).replace(**changes)
    return p, group_layout(p.M, p)


# -- verification suite ----------------------------------------------------

DOF_T0 = 40


def desk_dof_params(T0: int = DOF_T0) -> SystemParams:
    """Default constants with ``B0`` scaled so the block is ``T0`` symbols at 100 m/s."""
    base = SystemParams()
    B0 = (T0 + 0.5) * 2.0 * base.xi0 * base.v0 / base.lambda0
    return base.replace(B0=B0)


def verify_dof_peak(T0: int, Me: int, trials: int, seed: int, tol: float = 0.15) -> VerificationReport:
    """Empirical DoF over even ``Mg`` peaks at ``T0 / 2`` and follows the parabola."""
    rep = VerificationReport(f"dof_peak(T0={T0},Me={Me})")
    mgs = np.arange(2, T0 - 1, 2)
    slopes, analytic = [], []
    for Mg in mgs:
        M = int(Mg * Me)
        est = dof_empirical(POSITION_AIDED, T0, M, M, GroupLayout(Me, int(Mg)), DOF_P0, trials,
                            RngStream(seed, _S_DOF, (M,)))
        slopes.append(est.slope)
        analytic.append(dof_analytic(Mg, Me, T0))
    slopes, analytic = np.array(slopes), np.array(analytic)
    peak = int(mgs[np.argmax(slopes)])
    rep.check("peak_at_half_block", abs(peak - T0 / 2) <= 1, f"argmax Mg={peak}")
    rel = np.abs(slopes - analytic) / analytic
    rep.check("matches_parabola", np.all(rel <= tol), f"max relative error={rel.max():.4f}")
    rep.values.update(Mg=mgs.tolist(), dof_empirical=slopes.round(6).tolist())
    return rep


def verify_estimator(mode: str, trials: int, seed: int, z_max: float = 4.0) -> VerificationReport:
    """Empirical vs analytic estimator MSE at steady state (max |z| over columns)."""
    rep = VerificationReport(f"estimator_mse({mode})")
    params, layout = keystone_params()
    for L0 in (1, 2):
        (emp, se, ana, fb), = estimator_mse_monte_carlo(params, layout, L0, [0.5], trials, mode, seed)
        z = np.abs(emp - ana) / se
        rep.check(f"L0={L0}_sigma0_sq=0.5", np.all(z <= z_max) and not fb.any(),
                  f"max|z|={z.max():.2f} fallbacks={int(fb.sum())}")
    return rep


def verify_all(spec: ExperimentSpec) -> ExperimentResult:
    reports = []
    rng = np.random.default_rng(RngStream(spec.seed, _S_VERIFY).generator().integers(2**63))
    conv = verify_power_convexity(2, 2, 1, 4)
    conv.check("hand_value_48", abs(conv.values["L_min"] - 48.0) <= 1e-9)
    reports.append(conv)
    random_conv = VerificationReport("power_convexity_random")
    for _ in range(100):
        T0 = int(rng.integers(3, 400))
        T_d = int(rng.integers(1, T0))
        Mg = int(rng.integers(1, T0))
        P0 = float(10.0 ** rng.uniform(-1, 4))
        r = verify_power_convexity(T_d, Mg, P0, T0)
        if not r.passed:
            random_conv.check(f"tuple({T_d},{Mg},{P0:.4g},{T0})", False, "; ".join(c.name for c in r.claims if not c.passed))
    random_conv.check("all_100_tuples_convex", all(c.passed for c in random_conv.claims))
    reports.append(random_conv)
    for i, P0 in enumerate((1.0, 10.0)):
        reports.append(verify_td_monotonicity(P0, 20, 4, 4, 4, max(spec.trials, 2000),
                                              RngStream(spec.seed, _S_VERIFY, (1, i))))
    layout = group_layout(spec.params.M, spec.params)
    om = VerificationReport("omega_threshold")
    a = omega_threshold(spec.params, layout)
    b = omega_threshold(spec.params, layout, grid=40_000)
    om.check("omega_in_unit_interval", 0.0 < a.omega < 1.0, f"omega={a.omega:.12f} ({a.threshold_db:.3f} dB)")
    om.check("grid_refinement_invariant", abs(a.omega - b.omega) <= 1e-6 * a.omega)
    om.values.update(omega=a.omega, threshold_db=a.threshold_db, skipped_points=a.skipped_points)
    reports.append(om)
    reports.append(verify_gain_threshold(spec.params, layout, rng=RngStream(spec.seed, _S_VERIFY, (2,)).generator()))
    reports.append(verify_dof_peak(DOF_T0, 4, min(spec.trials, 500), spec.seed))
    reports.append(verify_estimator(spec.mode, min(spec.trials, 1000), spec.seed))
    rows = [[r.name, c.name, c.passed, c.detail] for r in reports for c in r.claims]
    text = "\n\n".join(r.to_text() for r in reports) + "\n"
    return ExperimentResult(["report", "claim", "passed", "detail"], rows, all(r.passed for r in reports), text)


# -- driver ----------------------------------------------------------------

RUNNERS = {
    "sweep_velocity": sweep_velocity,
    "sweep_groups": sweep_groups,
    "sweep_antennas": sweep_antennas,
    "sweep_snr": sweep_snr,
    "sweep_L0": sweep_L0,
    "verify_all": verify_all,
}


def format_value(x) -> str:
    """Deterministic CSV cell: shortest round-trip repr for floats."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def render_csv(header, rows) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(x) for x in row])
    return buf.getvalue()


def run(spec: ExperimentSpec) -> tuple[ExperimentResult, dict]:
    """Run an experiment, write ``<name>.csv``, a plot and ``manifest.json`` under ``spec.out``."""
    result = RUNNERS[spec.experiment](spec)
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_text = render_csv(result.header, result.rows)
    csv_path = out / f"{spec.experiment}.csv"
    csv_path.write_bytes(csv_text.encode("utf-8"))
    outputs = [csv_path.name]
    if result.report:
        (out / "verification.txt").write_text(result.report, encoding="utf-8")
        outputs.append("verification.txt")
    from .plots import plot_csv

    plot_path = plot_csv(spec.experiment, csv_path, out / f"{spec.experiment}.png")
    if plot_path is not None:
        outputs.append(plot_path.name)
    manifest = {
        "experiment": spec.experiment,
        "params": spec.params.to_dict(),
        "seed": spec.seed,
        "trials": spec.trials,
        "mode": spec.mode,
        "threads": spec.threads,
        "config_path": spec.config_path,
        "code_version": __version__,
        "backend": BACKEND,
        "outputs": outputs,
        "csv_sha256": hashlib.sha256(csv_text.encode("utf-8")).hexdigest(),
        "passed": result.passed,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return result, manifest


def spec_from_manifest(path, out=None, threads=None) -> ExperimentSpec:
    """Rebuild the spec recorded in a manifest (parameters are stored inline)."""
    path = Path(path)
    m = json.loads(path.read_text(encoding="utf-8"))
    return ExperimentSpec(
        experiment=m["experiment"],
        params=SystemParams(**m["params"]),
        out=Path(out) if out is not None else path.parent / "replay",
        seed=int(m["seed"]),
        trials=int(m["trials"]),
        mode=m["mode"],
        threads=int(threads if threads is not None else m["threads"]),
        config_path=m.get("config_path"),
    )
