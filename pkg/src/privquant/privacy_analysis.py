"""Fisher-information privacy bounds for the quantized estimator.

For sensor ``i`` the expected Fisher information that the transmitted bits
carry about its observation ``y_i,k`` is bounded by a nonnegative scalar times
``G_i = Hbar_i Hbar_i^T``.  Two forms are provided:

* the general form, a tail sum over future times ``t > k`` of
  ``beta_k^2 q_t eta_t prod_{l=k+1}^{t-1} (1 - lambda beta_l)^2``;
* the rate form, a closed expression ``q R_k beta_k eta_k`` whose decay
  ``k^-(delta + 2 eps)`` is explicit and which upper-bounds the general form.

Here ``lambda`` is the smallest positive eigenvalue of ``Hbar_i^T Hbar_i``,
``q`` the probability that the edge is live and ``eta`` the per-comparison
Fisher constant of the noise family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .estimator import AlgorithmConfig
from .graph_model import stationary_distribution
from .noise_models import Family, NoiseSchedule
from .observation_model import spectral

MAX_TERMS = 2_000_000


class PrivacyConditionError(ValueError):
    """A hypothesis of the bound fails; the message names the inequality."""


@dataclass(frozen=True)
class FisherBoundConfig:
    """Everything the bound needs about one sensor.

    ``q_stationary[j]`` is the stationary probability that the edge to
    neighbour ``j`` is live.  When ``q_series`` (shape ``(L, J)``, row ``t-1``
    for time ``t``) is given the general form uses it, holding the last row
    beyond ``L``; the rate form then refuses to run.
    """

    sensor: int
    neighbors: tuple[int, ...]
    q_stationary: np.ndarray
    noise: tuple[NoiseSchedule, ...]
    beta_base: float
    delta: float
    k0: int
    lambda_min_plus: float | None
    lambda_max: float
    gram: np.ndarray
    q_series: np.ndarray | None = None
    tolerance: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "neighbors", tuple(int(j) for j in self.neighbors))
        object.__setattr__(self, "noise", tuple(self.noise))
        object.__setattr__(self, "q_stationary", np.asarray(self.q_stationary, dtype=float).reshape(-1))
        object.__setattr__(self, "gram", np.atleast_2d(np.asarray(self.gram, dtype=float)))
        j = len(self.neighbors)
        if len(self.noise) != j or self.q_stationary.shape != (j,):
            raise ValueError("need one noise schedule and one edge probability per neighbour")
        if self.q_series is not None:
            qs = np.asarray(self.q_series, dtype=float).reshape(len(self.q_series), j)
            object.__setattr__(self, "q_series", qs)
        if not 0.5 < self.delta <= 1:
            raise PrivacyConditionError(f"δ = {self.delta} outside (1/2, 1]")
        b0 = self.beta(self.k0)
        if not b0 * self.lambda_max < 1:
            raise PrivacyConditionError(
                f"β_k λmax(Q_i) < 1 fails at k = k0 = {self.k0}: {b0 * self.lambda_max:.6g}")
        if self.lambda_min_plus is not None and self.delta == 1:
            for jj, s in zip(self.neighbors, self.noise):
                val = 2 * self.lambda_min_plus * self.beta_base + 2 * s.growth_exponent
                if not val > 1:
                    raise PrivacyConditionError(
                        f"2λ⁺β₁ + 2ε > 1 fails for neighbour {jj + 1}: {val:.6g}")

    @classmethod
    def from_algorithm(cls, cfg: AlgorithmConfig, sensor: int, q_mode: str = "stationary",
                       q_horizon: int = 10_000, tolerance: float = 1e-8) -> "FisherBoundConfig":
        """Bound configuration for ``sensor`` (0-based) using its union-graph neighbours."""
        if not 0 <= sensor < cfg.sensor_count:
            raise IndexError(f"sensor {sensor + 1} does not exist")
        idx = [e for e, (a, b) in enumerate(cfg.edges) if sensor in (a, b)]
        nbrs = [int(b if a == sensor else a) for a, b in cfg.edges[idx]]
        q = cfg.links.stationary_edge_probability()[idx] if idx else np.zeros(0)
        series = None
        if q_mode == "recursion":
            series = cfg.links.edge_probability_series(q_horizon)[:, idx]
        elif q_mode != "stationary":
            raise ValueError("q_mode is 'stationary' or 'recursion'")
        hbar = cfg.sensors.mean_matrices()[sensor]
        info = spectral(hbar)
        st = cfg.steps
        return cls(sensor, tuple(nbrs), q, tuple(cfg.noise[e] for e in idx), float(st.beta_base[sensor]),
                   float(st.delta[sensor]), int(st.k0[sensor]), info.lambda_min_plus, info.lambda_max,
                   hbar @ hbar.T, series, tolerance)

    def beta(self, k):
        k = np.asarray(k, dtype=float)
        return np.where(k >= self.k0, self.beta_base / np.power(k, self.delta), 0.0)

    def q(self, j: int, t: np.ndarray) -> np.ndarray:
        if self.q_series is None:
            return np.full(t.shape, self.q_stationary[j])
        row = np.minimum(t.astype(int), len(self.q_series)) - 1
        return self.q_series[row, j]

    def zero(self) -> np.ndarray:
        return np.zeros_like(self.gram)


@dataclass(frozen=True)
class FisherBoundTrajectory:
    times: np.ndarray
    bounds: np.ndarray          # (K, m, m)
    scalar_series: np.ndarray   # largest eigenvalue of each bound


def _tail_sum(cfg: FisherBoundConfig, j: int, k: int) -> float:
    """``sum_{t > k} q_t eta_t prod_{l=k+1}^{t-1} (1 - lambda beta_l)^2``.

    Summed in growing blocks; the remainder after the last block is estimated
    from the local power-law exponent ``p`` of the terms and added to the total.
    Summation stops once the error of that estimate, of relative order
    ``(p + 1) / t``, falls below ``tolerance`` times the total.
    """
    lam = cfg.lambda_min_plus
    noise = cfg.noise[j]
    total = 0.0
    log_prod = 0.0
    t = k + 1
    block = 1024
    while True:
        ts = np.arange(t, t + block, dtype=float)
        log_f = np.log1p(-lam * cfg.beta(ts))
        log_p = log_prod + np.concatenate(([0.0], np.cumsum(log_f[:-1])))
        g = noise.eta(ts) * np.exp(2 * log_p)
        q = cfg.q(j, ts)
        total += float(np.sum(q * g))
        log_prod = log_p[-1] + log_f[-1]
        t += block
        last, prev = g[-1], g[-2]
        if last == 0.0:
            return total
        exponent = -(math.log(last) - math.log(prev)) / (math.log(ts[-1]) - math.log(ts[-2]))
        tail = q[-1] * last * ts[-1] / (exponent - 1) if exponent > 1 else math.inf
        if tail * (exponent + 1) / ts[-1] <= cfg.tolerance * total:
            return total + tail
        if t - k > MAX_TERMS:
            if math.isinf(tail):
                raise PrivacyConditionError(f"tail sum does not converge for neighbour {cfg.neighbors[j] + 1}")
            return total + tail
        block = min(2 * block, 1 << 18)


def general_coefficient(cfg: FisherBoundConfig, k: int) -> float:
    """Scalar ``c`` with ``fisher_bound_general(cfg, k) = c * Hbar Hbar^T``."""
    if k < 1:
        raise ValueError("k starts at 1")
    b = float(cfg.beta(k))
    if b == 0.0 or not cfg.neighbors or cfg.lambda_min_plus is None:
        return 0.0
    return b * b * sum(_tail_sum(cfg, j, k) for j in range(len(cfg.neighbors)))


def fisher_bound_general(cfg: FisherBoundConfig, k: int) -> np.ndarray:
    return general_coefficient(cfg, k) * cfg.gram


def rate_coefficient(cfg: FisherBoundConfig, k, j: int, verbatim: bool = False) -> np.ndarray:
    """Scalar factor of the closed-form term for neighbour ``j`` (vectorised over ``k``).

    For ``delta < 1`` the bound carries the factor
    ``exp(2 lambda beta_1 ((k+1)^(1-delta) - k^(1-delta)) / (1-delta))`` that comes
    from summing the product bound starting at ``k + 1``; it tends to 1 but
    without it the closed form can fall below the tail sum for moderate ``k``.
    ``verbatim=True`` leaves it out.
    """
    if cfg.q_series is not None:
        raise PrivacyConditionError("the rate form needs a stationary start for the topology chain")
    k = np.asarray(k, dtype=float)
    lam = cfg.lambda_min_plus
    if lam is None:
        return np.zeros(k.shape)
    b1, d = cfg.beta_base, cfg.delta
    eps = cfg.noise[j].growth_exponent
    active = k >= cfg.k0
    if d == 1:
        if np.any(active & (k <= 1)):
            raise ValueError("the δ = 1 rate form is undefined at k = 1")
        den = 2 * lam * b1 + 2 * eps - 1
        if not den > 0:
            raise PrivacyConditionError(f"2λ⁺β₁ + 2ε > 1 fails: 2λ⁺β₁ + 2ε - 1 = {den:.6g}")
        kk = np.where(active, k, 2.0)
        log_r = 2 * lam * b1 * np.log((kk + 1) / (kk - 1)) + 2 * eps * np.log(kk / (kk - 1))
        r = b1 / den * np.exp(log_r)
    else:
        den = 2 * lam * b1 - (d - 2 * eps) * np.power(k, d - 1)
        if np.any(active & ~(den > 0)):
            bad = float(k[active & ~(den > 0)].flat[0])
            raise PrivacyConditionError(f"2λ⁺β₁ - (δ - 2ε)k^(δ-1) > 0 fails at k = {bad:g}")
        r = b1 / np.where(den > 0, den, 1.0)
        if not verbatim:
            c = 2 * lam * b1 / (1 - d)
            r = r * np.exp(c * (np.power(k + 1, 1 - d) - np.power(k, 1 - d)))
    eta = cfg.noise[j].eta(k)
    return np.where(active, cfg.q_stationary[j] * r * cfg.beta(k) * eta, 0.0)


def fisher_bound_rate(cfg: FisherBoundConfig, k: int, j: int | None = None, verbatim: bool = False) -> np.ndarray:
    """Closed-form term for neighbour index ``j``, or the sum over all neighbours."""
    js = range(len(cfg.neighbors)) if j is None else [j]
    c = sum((float(rate_coefficient(cfg, k, jj, verbatim)) for jj in js), 0.0)
    return c * cfg.gram


def bound_trajectory(cfg: FisherBoundConfig, times: Sequence[int], form: str = "rate",
                     verbatim: bool = False) -> FisherBoundTrajectory:
    times = np.asarray(times, dtype=int)
    if form == "rate":
        coef = np.zeros(len(times))
        for j in range(len(cfg.neighbors)):
            coef += rate_coefficient(cfg, times, j, verbatim)
    elif form == "general":
        coef = np.array([general_coefficient(cfg, int(k)) for k in times])
    else:
        raise ValueError("form is 'general' or 'rate'")
    top = float(np.linalg.eigvalsh(cfg.gram)[-1]) if cfg.gram.size else 0.0
    bounds = coef[:, None, None] * cfg.gram[None]
    return FisherBoundTrajectory(times, bounds, coef * top)


def improvement_factor(family: Family | str) -> float:
    """Upper bound on (Fisher info of the sign bit) / (Fisher info of the raw value)."""
    family = Family(family)
    if family is Family.GAUSSIAN:
        return 2 / math.pi
    if family is Family.CAUCHY:
        return 8 / math.pi ** 2
    return 1.0


@dataclass(frozen=True)
class EnhancementReport:
    ok: bool
    witness: dict
    violation: int | None = None


def dynamic_enhancement_check(traj: FisherBoundTrajectory | Sequence[float], times=None) -> EnhancementReport:
    """For each time with a positive bound find the first later time after
    which every bound is strictly smaller.

    The last sample has no later point to compare with and is skipped.
    """
    if isinstance(traj, FisherBoundTrajectory):
        times, values = traj.times, np.asarray(traj.scalar_series, dtype=float)
    else:
        values = np.asarray(traj, dtype=float)
        times = np.arange(1, len(values) + 1) if times is None else np.asarray(times)
    if len(values) < 10:
        raise ValueError("need at least 10 samples")
    suffix_max = np.maximum.accumulate(values[::-1])[::-1]
    witness = {}
    for idx in range(len(values) - 1):
        v = values[idx]
        if v <= 0:
            continue
        later = suffix_max[idx + 1:] < v
        if not later.any():
            return EnhancementReport(False, witness, int(times[idx]))
        witness[int(times[idx])] = int(times[idx + 1 + int(np.argmax(later))])
    return EnhancementReport(True, witness)


@dataclass(frozen=True)
class RateFit:
    slope: float
    halfwidth: float
    intercept: float
    points: int


def rate_fit(series, k_lo: float, k_hi: float, times=None) -> RateFit:
    """Least-squares slope of ``log(value)`` on ``log(k)`` over ``[k_lo, k_hi]``.

    ``series`` is either a value per time ``k = 1, 2, ...`` or paired with
    explicit ``times``; a trajectory supplies both.
    """
    if isinstance(series, FisherBoundTrajectory):
        times, values = series.times, series.scalar_series
    else:
        values = np.asarray(series, dtype=float)
        times = np.arange(1, len(values) + 1) if times is None else np.asarray(times)
    if k_hi / k_lo < 10:
        raise ValueError("the fit window must span at least a decade")
    sel = (times >= k_lo) & (times <= k_hi)
    x, y = np.asarray(times[sel], dtype=float), np.asarray(values[sel], dtype=float)
    if np.any(y <= 0):
        raise ValueError("series must be positive on the fit window")
    if len(x) < 3:
        raise ValueError("need at least three points in the window")
    res = stats.linregress(np.log(x), np.log(y))
    half = float(stats.t.ppf(0.975, len(x) - 2) * res.stderr)
    return RateFit(float(res.slope), half, float(res.intercept), len(x))


def log_grid(k_lo: float, k_hi: float, points: int) -> np.ndarray:
    return np.unique(np.round(np.logspace(math.log10(k_lo), math.log10(k_hi), points)).astype(int))


def chain_edge_probability(transition, membership) -> float:
    """Stationary probability that the topology contains a given edge."""
    return float(stationary_distribution(transition) @ np.asarray(membership, dtype=float))
