"""Monte Carlo ensembles, long-run statistics, and claim verification.

An ensemble runs n independent paths with per-path random streams derived
from (seed, path index), aggregates cross-path mean and 5/50/95 percentiles
of the recorded quantities over time, and keeps each path's terminal
statistics.  ``verify`` compares those statistics against the regime
predictions of a ThresholdReport and returns one pass/fail claim per
applicable prediction.  Paths are embarrassingly parallel; aggregation is a
deterministic fold in path-index order, so results are identical for any
worker count.
"""

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .integrator import (
    SimConfig,
    SimulationError,
    conservation_residual,
    path_config,
    simulate,
)
from .model import CrispModel, ImpreciseModel, crispify
from .thresholds import Regime, ThresholdReport, classify

# Reporting threshold for "this population has died out": distinct from the
# integrator's hard pin near 1e-304, which exists only to keep the state
# finite.  A path counts as extinct in a component once the recorded
# concentration first drops below this level (the flag is sticky).
EXTINCTION_THRESHOLD = 1e-30

_SERIES = ("S", "x", "y", "mean_S", "mean_x", "mean_y",
           "lnx_over_t", "lny_over_t", "phi")


@dataclass(frozen=True)
class VerifyTolerances:
    """Finite-horizon slack for asymptotic claims.

    rate: absolute slack on exponential-rate (ln c(t)/t) bounds.
    mean: relative slack on time-average limits and lower bounds.
    min_horizon: shortest horizon verify will accept at all.
    burn_in_frac: fraction of the horizon regarded as transient; terminal
        statistics are trusted only because t_end lies well past it.
    """

    rate: float = 0.02
    mean: float = 0.05
    min_horizon: float = 500.0
    burn_in_frac: float = 0.5


@dataclass(frozen=True)
class Claim:
    claim_id: str
    predicted: float
    observed: float
    tolerance: float
    comparison: str  # "upper": obs <= pred + tol; "lower": obs >= pred - tol; "within": |obs - pred| <= tol
    passed: bool


@dataclass(frozen=True)
class Verdict:
    regime: Regime
    claims: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.claims)


@dataclass
class EnsembleSummary:
    """Cross-path statistics over time plus per-path terminal values.

    ``series[name][stat]`` is an array over recorded times for name in
    S, x, y, mean_S, mean_x, mean_y, lnx_over_t, lny_over_t, phi and stat in
    mean, p5, p50, p95.  ``terminal`` maps per-path arrays: mean_S, mean_x,
    mean_y, rate_x, rate_y, phi, brownian_over_t (n, 3), comp_jump_over_t
    (n, 3), extinct_x, extinct_y.
    """

    n_paths: int
    horizon: float
    times: np.ndarray
    series: dict
    extinct_x_frac: np.ndarray
    extinct_y_frac: np.ndarray
    terminal: dict
    extinction_threshold: float = EXTINCTION_THRESHOLD
    aborted: tuple = field(default_factory=tuple)


def _path_record(model: CrispModel, config: SimConfig, index: int,
                 threshold: float) -> dict:
    try:
        traj = simulate(model, path_config(config, index))
    except SimulationError as exc:
        return {"index": index, "error": str(exc)}
    phi = conservation_residual(traj, model)
    t_end = float(traj.times[-1])
    extinct_x = np.logical_or.accumulate(traj.x < threshold)
    extinct_y = np.logical_or.accumulate(traj.y < threshold)
    return {
        "index": index,
        "error": None,
        "series": {
            "S": traj.S, "x": traj.x, "y": traj.y,
            "mean_S": traj.mean_S, "mean_x": traj.mean_x, "mean_y": traj.mean_y,
            "lnx_over_t": traj.lnx_over_t, "lny_over_t": traj.lny_over_t,
            "phi": phi,
        },
        "extinct_x": extinct_x,
        "extinct_y": extinct_y,
        "times": traj.times,
        "terminal": {
            "mean_S": float(traj.mean_S[-1]),
            "mean_x": float(traj.mean_x[-1]),
            "mean_y": float(traj.mean_y[-1]),
            "rate_x": traj.rate_x,
            "rate_y": traj.rate_y,
            "phi": float(phi[-1]),
            "brownian_over_t": traj.brownian[-1] / t_end,
            "comp_jump_over_t": traj.comp_jump[-1] / t_end,
            "extinct_x": bool(extinct_x[-1]),
            "extinct_y": bool(extinct_y[-1]),
        },
    }


def _path_record_star(args) -> dict:
    return _path_record(*args)


def ensemble(model: CrispModel, config: SimConfig, n_paths: int,
             workers: int = 1,
             extinction_threshold: float = EXTINCTION_THRESHOLD) -> EnsembleSummary:
    """Simulate n_paths independent paths and aggregate their statistics.

    Deterministic given (model, config, n_paths, extinction_threshold);
    ``workers`` only controls process-level parallelism.  Individual path
    failures are recorded; the run fails outright if 10% or more abort.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths!r}")
    tasks = [(model, config, i, extinction_threshold) for i in range(n_paths)]
    if workers > 1 and n_paths > 1:
        chunk = max(1, n_paths // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_path_record_star, tasks, chunksize=chunk))
    else:
        records = [_path_record(*t) for t in tasks]

    aborted = tuple((r["index"], r["error"]) for r in records if r["error"])
    if len(aborted) >= 0.1 * n_paths:
        detail = "; ".join(f"path {i}: {msg}" for i, msg in aborted[:5])
        raise RuntimeError(
            f"{len(aborted)}/{n_paths} paths aborted (>= 10%): {detail}")
    good = [r for r in records if not r["error"]]

    times = good[0]["times"]
    series = {}
    # the rate series are NaN at t=0 (0/0), making that slice all-NaN by design
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for name in _SERIES:
            stack = np.stack([r["series"][name] for r in good])
            pcts = np.nanpercentile(stack, [5.0, 50.0, 95.0], axis=0)
            series[name] = {
                "mean": np.nanmean(stack, axis=0),
                "p5": pcts[0], "p50": pcts[1], "p95": pcts[2],
            }
    extinct_x_frac = np.mean(np.stack([r["extinct_x"] for r in good]), axis=0)
    extinct_y_frac = np.mean(np.stack([r["extinct_y"] for r in good]), axis=0)

    terminal = {"path": np.array([r["index"] for r in good])}
    for key in ("mean_S", "mean_x", "mean_y", "rate_x", "rate_y", "phi"):
        terminal[key] = np.array([r["terminal"][key] for r in good])
    for key in ("brownian_over_t", "comp_jump_over_t"):
        terminal[key] = np.stack([r["terminal"][key] for r in good])
    for key in ("extinct_x", "extinct_y"):
        terminal[key] = np.array([r["terminal"][key] for r in good], dtype=bool)

    return EnsembleSummary(
        n_paths=n_paths,
        horizon=float(times[-1]),
        times=times,
        series=series,
        extinct_x_frac=extinct_x_frac,
        extinct_y_frac=extinct_y_frac,
        terminal=terminal,
        extinction_threshold=extinction_threshold,
        aborted=aborted,
    )


def verify(report: ThresholdReport, summary: EnsembleSummary,
           tol: VerifyTolerances = VerifyTolerances()) -> Verdict:
    """Check every regime prediction against the ensemble's terminal statistics.

    Rate bounds are one-sided with absolute slack tol.rate against the median
    path (almost-sure statements concern typical paths, and medians are
    insensitive to the handful of pinned ones); time-average limits are
    two-sided with relative slack tol.mean; the persistent lower bound is
    one-sided against the 5th percentile.  Refuses horizons below
    tol.min_horizon outright.
    """
    if summary.horizon < tol.min_horizon:
        raise ValueError(
            f"horizon {summary.horizon} is below min_horizon {tol.min_horizon}; "
            "terminal statistics would not be meaningful")

    preds = report.predictions
    term = summary.terminal
    claims = []

    def upper(claim_id, predicted, observed):
        claims.append(Claim(claim_id, predicted, observed, tol.rate, "upper",
                            observed <= predicted + tol.rate))

    def within(claim_id, predicted, observed):
        slack = tol.mean * abs(predicted)
        claims.append(Claim(claim_id, predicted, observed, slack, "within",
                            abs(observed - predicted) <= slack))

    def lower(claim_id, predicted, observed):
        slack = tol.mean * abs(predicted)
        claims.append(Claim(claim_id, predicted, observed, slack, "lower",
                            observed >= predicted - slack))

    if report.regime is Regime.BOTH_EXTINCT:
        upper("x_lyapunov_bound", preds.x_lyapunov_bound,
              float(np.median(term["rate_x"])))
        upper("y_lyapunov_bound", preds.y_lyapunov_bound,
              float(np.median(term["rate_y"])))
        within("S_mean_limit", preds.S_mean_limit,
               float(np.median(term["mean_S"])))
    elif report.regime is Regime.PREY_ONLY:
        within("S_mean_limit", preds.S_mean_limit,
               float(np.median(term["mean_S"])))
        within("x_mean_limit", preds.x_mean_limit,
               float(np.median(term["mean_x"])))
        upper("y_lyapunov_bound", preds.y_lyapunov_bound,
              float(np.median(term["rate_y"])))
    elif report.regime is Regime.PERSISTENT:
        lower("y_mean_lower_bound", preds.y_mean_lower_bound,
              float(np.percentile(term["mean_y"], 5.0)))

    return Verdict(regime=report.regime, claims=tuple(claims))


@dataclass(frozen=True)
class MartingaleDiagnostics:
    """Terminal M_i(T)/T per path and their cross-path means, per noise source."""

    brownian_over_t: np.ndarray   # (n_paths, 3)
    comp_jump_over_t: np.ndarray  # (n_paths, 3)

    @property
    def brownian_mean(self) -> np.ndarray:
        return self.brownian_over_t.mean(axis=0)

    @property
    def comp_jump_mean(self) -> np.ndarray:
        return self.comp_jump_over_t.mean(axis=0)


def martingale_diagnostics(trajectories) -> MartingaleDiagnostics:
    """Collect terminal martingale-over-time ratios from simulated paths.

    Both families must vanish as t grows; persistently nonzero means point at
    a broken compensator or a biased noise stream.
    """
    trajs = list(trajectories)
    if not trajs:
        raise ValueError("need at least one trajectory")
    brow = np.stack([tr.brownian[-1] / float(tr.times[-1]) for tr in trajs])
    cjmp = np.stack([tr.comp_jump[-1] / float(tr.times[-1]) for tr in trajs])
    return MartingaleDiagnostics(brownian_over_t=brow, comp_jump_over_t=cjmp)


@dataclass
class SweepRow:
    p: float
    crisp: CrispModel
    report: ThresholdReport
    stats: dict | None = None
    verdict: Verdict | None = None
    error: str | None = None


def p_sweep(model: ImpreciseModel, p_grid, config: SimConfig, n_paths: int,
            workers: int = 1, tol: VerifyTolerances = VerifyTolerances(),
            boundary_tol: float = 1e-9,
            extinction_threshold: float = EXTINCTION_THRESHOLD) -> list:
    """Crispify, classify, simulate, and verify at each imprecision level.

    Rows are ordered by p and evaluated independently; a failure in one row
    (recorded in row.error) does not stop the sweep.  n_paths=0 skips the
    Monte Carlo part and produces threshold-only rows.
    """
    grid = sorted(float(p) for p in p_grid)
    if not grid:
        raise ValueError("p_grid must be nonempty")
    rows = []
    for p in grid:
        crisp = crispify(model, p)
        report = classify(crisp, boundary_tol)
        row = SweepRow(p=p, crisp=crisp, report=report)
        if n_paths > 0:
            try:
                summary = ensemble(crisp, config, n_paths, workers=workers,
                                   extinction_threshold=extinction_threshold)
                row.stats = {
                    "mean_S": float(np.median(summary.terminal["mean_S"])),
                    "mean_x": float(np.median(summary.terminal["mean_x"])),
                    "mean_y": float(np.median(summary.terminal["mean_y"])),
                    "rate_x": float(np.median(summary.terminal["rate_x"])),
                    "rate_y": float(np.median(summary.terminal["rate_y"])),
                    "extinct_x_frac": float(summary.terminal["extinct_x"].mean()),
                    "extinct_y_frac": float(summary.terminal["extinct_y"].mean()),
                }
                row.verdict = verify(report, summary, tol)
            except (RuntimeError, ValueError) as exc:
                row.error = str(exc)
        rows.append(row)
    return rows
