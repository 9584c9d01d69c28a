"""Monte Carlo harness: averaged error curves, trade-off sweeps, the multi-bit
comparison and the synthetic event-rate study.

Repeats are split into batches that may run in worker processes.  Each repeat
only reads its own random substreams and the batches are stitched back
together by run index, so results do not depend on ``jobs``.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .estimator import AlgorithmConfig, SimulationResult, default_warmup, simulate
from .privacy_analysis import FisherBoundConfig, bound_trajectory, log_grid, rate_fit

KINDS = ("convergence", "no_comm_baseline", "privacy_curves", "tradeoff", "highdim_compare", "event_rate_synthetic")


@dataclass
class ExperimentConfig:
    algorithm: AlgorithmConfig
    theta: np.ndarray
    repeats: int = 20
    horizon: int = 100_000
    seed: int = 0
    out: Path | None = None
    kind: str = "convergence"
    jobs: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.horizon < 10:
            raise ValueError("horizon must be at least 10")
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        self.theta = np.asarray(self.theta, dtype=float)


@dataclass
class MonteCarloResult:
    per_run: np.ndarray                 # (T, R) sensor-averaged squared error
    final_estimates: np.ndarray         # (R, N, n)
    total_bits: np.ndarray              # (R, N)
    live_edge_steps: np.ndarray         # (R,)

    @property
    def mean(self) -> np.ndarray:
        return self.per_run.mean(axis=1)

    @property
    def stderr(self) -> np.ndarray:
        r = self.per_run.shape[1]
        if r < 2:
            return np.zeros(self.per_run.shape[0])
        return self.per_run.std(axis=1, ddof=1) / math.sqrt(r)

    def window_means(self, k_lo: int, k_hi: int) -> np.ndarray:
        """Per-run average of the error over times ``k_lo..k_hi``."""
        return self.per_run[k_lo - 1:k_hi].mean(axis=0)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "mean_sq_error", "stderr"])
            for k, (m, s) in enumerate(zip(self.mean, self.stderr), start=1):
                w.writerow([k, repr(float(m)), repr(float(s))])


def _batch(args) -> SimulationResult:
    cfg, theta, horizon, seed, offset, count = args
    return simulate(cfg, theta, horizon, seed, runs=count, run_offset=offset)


def _batches(repeats: int, jobs: int) -> list[tuple[int, int]]:
    jobs = max(1, min(jobs, repeats))
    edges = np.linspace(0, repeats, jobs + 1).round().astype(int)
    return [(int(a), int(b - a)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_repeats(cfg: AlgorithmConfig, theta, repeats: int, horizon: int, seed: int, jobs: int = 1) -> MonteCarloResult:
    theta = np.asarray(theta, dtype=float)
    tasks = [(cfg, theta, horizon, seed, off, cnt) for off, cnt in _batches(repeats, jobs)]
    if len(tasks) == 1:
        parts = [_batch(tasks[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(tasks)) as pool:
            parts = list(pool.map(_batch, tasks))
    return MonteCarloResult(np.concatenate([p.mean_sq_error for p in parts], axis=1),
                            np.concatenate([p.final_estimates for p in parts], axis=0),
                            np.concatenate([p.total_bits for p in parts], axis=0),
                            np.concatenate([p.live_edge_steps for p in parts]))


def monte_carlo(cfg: ExperimentConfig) -> MonteCarloResult:
    res = run_repeats(cfg.algorithm, cfg.theta, cfg.repeats, cfg.horizon, cfg.seed, cfg.jobs)
    if cfg.out is not None:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        res.write_csv(out / "metrics.csv")
    return res


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


# -- predicted almost-sure rate -------------------------------------------------

@dataclass(frozen=True)
class RatePrediction:
    """``||theta_hat_i,k - theta|| = O((ln k)^log_power / k^exponent)``."""

    exponent: float
    log_power: int
    case: str

    @property
    def squared_error_slope(self) -> float:
        """Log-log slope of the squared error, ignoring the logarithmic factor."""
        return -2 * self.exponent


def predicted_error_rate(cfg: AlgorithmConfig) -> RatePrediction:
    """Error rate for polynomial step sizes and noise scales.

    With ``a = lambda_min(sum Hbar^T Hbar) * min beta_1 / N``, ``g = min gamma`` and
    ``d = max delta``: ``k^-a`` if ``d = 1`` and ``2g - 2a > 1``; ``ln k / k^(g - 1/2)``
    if ``d = 1`` otherwise; ``k^-(g - d/2)`` if ``d < 1``.
    """
    if not len(cfg.edges):
        raise ValueError("the rate needs at least one edge")
    mats = cfg.sensors.mean_matrices()
    lam_h = float(np.linalg.eigvalsh(sum(h.T @ h for h in mats))[0])
    a = lam_h * float(np.min(cfg.steps.beta_base)) / cfg.sensor_count
    g = float(np.min(cfg.steps.gamma))
    d = float(np.max(cfg.steps.delta))
    if d == 1 and 2 * g - 2 * a > 1:
        return RatePrediction(a, 0, "innovation-limited")
    if d == 1:
        return RatePrediction(g - 0.5, 1, "fusion-limited")
    return RatePrediction(g - d / 2, 0, "slow innovation")


# -- privacy/convergence trade-off -------------------------------------------

@dataclass(frozen=True)
class TradeoffPoint:
    chi: float
    nu: float
    delta: float
    epsilon: float
    gamma: float
    beta_base: float
    k0: int


def tradeoff_params(nu: float, chi: float, lambda_min_plus: float) -> TradeoffPoint:
    """Step sizes and noise growth giving privacy ``O(k^-chi)`` and error ``O(k^-(nu - chi/2))``."""
    if not 0.5 < nu < 1:
        raise ValueError(f"nu = {nu} must lie in (1/2, 1)")
    if not 1 <= chi < 2 * nu:
        raise ValueError(f"chi = {chi} must satisfy χ ∈ [1, 2ν) = [1, {2 * nu:g})")
    if not lambda_min_plus > 0:
        raise ValueError("lambda_min_plus must be positive")
    beta = (2 - chi) / (2 * lambda_min_plus) + 1
    return TradeoffPoint(chi, nu, 1.0, (chi - 1) / 2, (2 + nu - chi) / 2, beta, default_warmup(beta, 1.0))


@dataclass
class TradeoffRow:
    chi: float
    bound_slope: float
    mse_slope: float
    late_mean: float
    late_stderr: float


@dataclass
class TradeoffReport:
    rows: list[TradeoffRow]
    verdict: str
    bound_order: str
    mse_order: str

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["chi", "bound_slope", "mse_slope"])
            for r in self.rows:
                w.writerow([repr(r.chi), repr(r.bound_slope), repr(r.mse_slope)])


def _order(values: Sequence[float], margins: Sequence[float], increasing: bool) -> str:
    for a, b, ma, mb in zip(values, values[1:], margins, margins[1:]):
        gap = (b - a) if increasing else (a - b)
        if gap == 0:
            return "tie"
        if gap <= 3 * math.hypot(ma, mb):
            return "not monotone"
    return "monotone"


def fit_window(horizon: int) -> tuple[int, int]:
    """``[10^3, 10^5]`` when the run is long enough, else the last two decades."""
    hi = min(horizon, 100_000)
    lo = min(1000, max(1, hi // 100))
    return lo, hi


def tradeoff_sweep(points: Sequence[TradeoffPoint], build: Callable[[TradeoffPoint], AlgorithmConfig], theta,
                   repeats: int, horizon: int, seed: int, jobs: int = 1, sensor: int = 0,
                   out: Path | None = None) -> TradeoffReport:
    """Run every point; report fitted bound and error slopes and whether both
    orderings (bound slope decreasing, late error increasing in ``chi``) hold."""
    points = sorted(points, key=lambda p: p.chi)
    if len(points) < 2:
        return TradeoffReport([], "insufficient points", "insufficient points", "insufficient points")
    if any(a.chi == b.chi for a, b in zip(points, points[1:])):
        return TradeoffReport([], "tie", "tie", "tie")
    rows = []
    lo, hi = fit_window(horizon)
    grid = log_grid(1000, 100_000, 200)
    for pt in points:
        cfg = build(pt)
        bound = bound_trajectory(FisherBoundConfig.from_algorithm(cfg, sensor), grid)
        bslope = rate_fit(bound, 1000, 100_000).slope
        res = run_repeats(cfg, theta, repeats, horizon, seed, jobs)
        ks = log_grid(lo, hi, 200)
        mslope = rate_fit(res.mean[ks - 1], lo, hi, times=ks).slope
        late = res.window_means(horizon // 2, horizon)
        se = late.std(ddof=1) / math.sqrt(len(late)) if len(late) > 1 else 0.0
        rows.append(TradeoffRow(pt.chi, bslope, mslope, float(late.mean()), float(se)))
    bound_order = _order([r.bound_slope for r in rows], [0.0] * len(rows), increasing=False)
    mse_order = _order([r.late_mean for r in rows], [r.late_stderr for r in rows], increasing=True)
    verdict = "monotone" if bound_order == mse_order == "monotone" else "not monotone"
    report = TradeoffReport(rows, verdict, bound_order, mse_order)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        report.write_csv(Path(out) / "tradeoff.csv")
    return report


# -- multi-bit comparison ----------------------------------------------------

@dataclass
class HighdimResult:
    one_bit: MonteCarloResult
    multi_bit: MonteCarloResult
    dimension: int

    @property
    def one_bit_mse(self) -> np.ndarray:
        return self.one_bit.mean / self.dimension

    @property
    def multi_bit_mse(self) -> np.ndarray:
        return self.multi_bit.mean / self.dimension

    @property
    def bit_ratio(self) -> float:
        """Bits per live edge-step, multi-bit over one-bit."""
        a = self.multi_bit.total_bits.sum() / self.multi_bit.live_edge_steps.sum()
        b = self.one_bit.total_bits.sum() / self.one_bit.live_edge_steps.sum()
        return float(a / b)

    def multi_bit_better_at(self, k: int) -> bool:
        return bool(self.multi_bit_mse[k - 1] < self.one_bit_mse[k - 1])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "one_bit_mse", "multi_bit_mse"])
            for k, (a, b) in enumerate(zip(self.one_bit_mse, self.multi_bit_mse), start=1):
                w.writerow([k, repr(float(a)), repr(float(b))])


def highdim_compare(build: Callable[[bool], AlgorithmConfig], theta, repeats: int, horizon: int, seed: int,
                    jobs: int = 1) -> HighdimResult:
    """Same seeds, compression on and off; errors divided by the dimension."""
    one = run_repeats(build(True), theta, repeats, horizon, seed, jobs)
    multi = run_repeats(build(False), theta, repeats, horizon, seed, jobs)
    return HighdimResult(one, multi, len(np.asarray(theta).reshape(-1)))


# -- synthetic event-rate study ---------------------------------------------

@dataclass
class EventRateResult:
    theta_true: float
    mse: MonteCarloResult

    @property
    def mean_estimate(self) -> float:
        return float(self.mse.final_estimates.mean())

    @property
    def error(self) -> float:
        return abs(self.mean_estimate - self.theta_true)


def event_rate_synthetic(cfg: AlgorithmConfig, theta_true: float, repeats: int, horizon: int, seed: int,
                         jobs: int = 1) -> EventRateResult:
    if cfg.dimension != 1:
        raise ValueError("the event-rate study estimates a scalar")
    res = run_repeats(cfg, [theta_true], repeats, horizon, seed, jobs)
    return EventRateResult(theta_true, res)


# -- privacy curves ---------------------------------------------------------

@dataclass
class PrivacyCurves:
    rows: list[tuple[int, int, float]] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "sensor", "bound_scalar"])
            for k, i, v in self.rows:
                w.writerow([k, i + 1, repr(v)])


def privacy_curves(cfg: AlgorithmConfig, sensors: Sequence[int], times: Sequence[int], form: str = "rate") -> PrivacyCurves:
    out = PrivacyCurves()
    for i in sensors:
        traj = bound_trajectory(FisherBoundConfig.from_algorithm(cfg, i), times, form)
        out.rows.extend((int(k), i, float(v)) for k, v in zip(traj.times, traj.scalar_series))
    return out
