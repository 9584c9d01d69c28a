"""Binary-quantized consensus+innovations estimator.

At each time ``k`` sensor ``i`` compresses its previous estimate to one
coordinate ``x = phi_k^T theta_hat`` (coordinate ``l = (k-1) mod n``), adds a
fresh privacy-noise draw per live neighbour and sends the sign bit
``s_ij = +1 if x + d_ij <= C_ij else -1``.  The estimate then moves by

    phi_k * sum_j alpha_ij,k a_ij,k (s_ij - s_ji)          (fusion)
    + beta_i,k Hbar_i^T (y_i,k - Hbar_i theta_hat)          (innovation)

With ``use_compression=False`` every coordinate is quantized separately and
``n`` bits go over each live edge per direction.

All arrays carry a leading "run" axis so that many Monte Carlo repeats advance
together; a single run is just the case ``R = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph_model import IndependentEdgeLinks, TopologyChainLinks
from .noise_models import Family, NoiseSchedule, schedule_feasible
from .observation_model import BernoulliEventSensors, SensorArray, cooperative_observability, spectral
from .rng import RunStreams

LinkModel = TopologyChainLinks | IndependentEdgeLinks
SensorModel = SensorArray | BernoulliEventSensors


class NonFiniteEstimate(FloatingPointError):
    def __init__(self, k: int, sensor: int, run: int | None = None):
        where = f"sensor {sensor + 1} at time k={k}"
        if run is not None:
            where += f" (run {run})"
        super().__init__(f"non-finite estimate produced by {where}")
        self.k, self.sensor, self.run = k, sensor, run


def default_warmup(beta_base: float, delta: float) -> int:
    """Smallest integer at or above ``exp(floor(ln(beta_1) / delta) + 1)``.

    Guarantees ``beta_1 < k0**delta``.
    """
    return int(math.ceil(math.exp(math.floor(math.log(beta_base) / delta) + 1)))


@dataclass(frozen=True)
class StepSizeSchedule:
    """``alpha_ij,k = alpha_base / k**gamma`` per undirected edge and
    ``beta_i,k = beta_base / k**delta`` per sensor for ``k >= k0`` (0 before)."""

    alpha_base: np.ndarray
    gamma: np.ndarray
    beta_base: np.ndarray
    delta: np.ndarray
    k0: np.ndarray

    def __post_init__(self):
        for name in ("alpha_base", "gamma", "beta_base", "delta"):
            a = np.atleast_1d(np.array(getattr(self, name), dtype=float))
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        k0 = np.atleast_1d(np.array(self.k0, dtype=int))
        k0.setflags(write=False)
        object.__setattr__(self, "k0", k0)
        if self.alpha_base.shape != self.gamma.shape:
            raise ValueError("alpha_base and gamma must have one entry per edge")
        if not (self.beta_base.shape == self.delta.shape == self.k0.shape):
            raise ValueError("beta_base, delta and k0 must have one entry per sensor")
        if np.any(self.alpha_base <= 0) or np.any(self.beta_base <= 0):
            raise ValueError("step-size bases must be positive")
        if np.any(self.k0 < 1):
            raise ValueError("k0 must be at least 1")

    @classmethod
    def uniform(cls, edges: int, sensors: int, alpha_base: float, gamma: float, beta_base: float,
                delta: float = 1.0, k0: int | None = None) -> "StepSizeSchedule":
        if k0 is None:
            k0 = default_warmup(beta_base, delta)
        return cls(np.full(edges, alpha_base), np.full(edges, gamma), np.full(sensors, beta_base),
                   np.full(sensors, delta), np.full(sensors, k0))

    def alpha(self, k) -> np.ndarray:
        return self.alpha_base / np.power(float(k), self.gamma)

    def beta(self, k) -> np.ndarray:
        return np.where(k >= self.k0, self.beta_base / np.power(float(k), self.delta), 0.0)

    def sensor_beta(self, i: int, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        val = self.beta_base[i] / np.power(k, self.delta[i])
        return np.where(k >= self.k0[i], val, 0.0)


@dataclass
class AlgorithmConfig:
    links: LinkModel
    sensors: SensorModel
    noise: Sequence[NoiseSchedule]
    steps: StepSizeSchedule
    thresholds: np.ndarray | float = 0.0
    use_compression: bool = True
    initial_estimates: np.ndarray | None = None

    edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.edges = np.asarray(self.links.edges, dtype=int).reshape(-1, 2)
        e = len(self.edges)
        n, N = self.dimension, self.sensor_count
        if self.links.vertex_count != N:
            raise ValueError(f"graph has {self.links.vertex_count} vertices but there are {N} sensors")
        self.noise = tuple(self.noise)
        if len(self.noise) != e:
            raise ValueError(f"need one noise schedule per union edge ({e}), got {len(self.noise)}")
        if self.steps.alpha_base.shape != (e,) or self.steps.beta_base.shape != (N,):
            raise ValueError("step-size schedule does not match the edge/sensor counts")
        c = np.broadcast_to(np.asarray(self.thresholds, dtype=float), (e,)).copy()
        self.thresholds = c
        if self.initial_estimates is None:
            self.initial_estimates = np.zeros((N, n))
        else:
            x0 = np.asarray(self.initial_estimates, dtype=float)
            self.initial_estimates = np.broadcast_to(x0, (N, n)).copy()

        # endpoint-indexed incidence, padded, so that fusion is a fixed-length
        # reduction independent of how many runs are stacked
        deg = np.zeros(N, dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        width = max(int(deg.max(initial=0)), 1)
        self._inc_idx = np.zeros((N, width), dtype=int)
        self._inc_sign = np.zeros((N, width))
        fill = np.zeros(N, dtype=int)
        for idx, (a, b) in enumerate(self.edges):
            self._inc_idx[a, fill[a]], self._inc_sign[a, fill[a]] = idx, 1.0
            self._inc_idx[b, fill[b]], self._inc_sign[b, fill[b]] = idx, -1.0
            fill[a] += 1
            fill[b] += 1
        self._noise_base = np.array([s.base_scale for s in self.noise], dtype=float)
        self._noise_eps = np.array([s.growth_exponent for s in self.noise], dtype=float)
        self._families = sorted({s.family for s in self.noise}, key=lambda f: f.value)
        self._family_mask = {f: np.array([s.family is f for s in self.noise]) for f in self._families}

    @property
    def dimension(self) -> int:
        return self.sensors.dimension

    @property
    def sensor_count(self) -> int:
        return self.sensors.count

    @property
    def bits_per_message(self) -> int:
        return 1 if self.use_compression else self.dimension

    def noise_scales(self, k) -> np.ndarray:
        return self._noise_base * np.power(float(k), self._noise_eps)

    def privacy_variates(self, rng: np.random.Generator, steps: int) -> np.ndarray:
        """Unit-scale noise for both directions of every edge, shape ``(steps, E, 2, b)``."""
        shape = (steps, len(self.edges), 2, self.bits_per_message)
        if len(self._families) == 1:
            return NoiseSchedule(self._families[0]).standard_variates(rng, shape)
        out = np.empty(shape)
        for fam in self._families:
            draw = NoiseSchedule(fam).standard_variates(rng, shape)
            m = self._family_mask[fam]
            out[:, m] = draw[:, m]
        return out

    def with_links(self, links: LinkModel, noise=None, steps=None) -> "AlgorithmConfig":
        """Copy with another communication model (edge-indexed fields must be resupplied
        when the union edge set changes)."""
        e = len(np.asarray(links.edges).reshape(-1, 2))
        if noise is None:
            noise = [self.noise[0] if self.noise else NoiseSchedule(Family.GAUSSIAN)] * e
        if steps is None:
            a0 = self.steps.alpha_base[0] if len(self.steps.alpha_base) else 1.0
            g0 = self.steps.gamma[0] if len(self.steps.gamma) else 0.8
            steps = StepSizeSchedule(np.full(e, a0), np.full(e, g0), self.steps.beta_base,
                                     self.steps.delta, self.steps.k0)
        return AlgorithmConfig(links, self.sensors, noise, steps, float(self.thresholds[0]) if len(self.thresholds) else 0.0,
                               self.use_compression, self.initial_estimates)


@dataclass
class EstimatorState:
    k: int
    estimates: np.ndarray
    link_state: object = None

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=float)
        if not np.all(np.isfinite(self.estimates)):
            raise ValueError("estimates must be finite")

    @classmethod
    def initial(cls, cfg: AlgorithmConfig) -> "EstimatorState":
        return cls(0, cfg.initial_estimates.copy())


def compression_vector(n: int, k: int) -> np.ndarray:
    if k < 1:
        raise ValueError("k starts at 1")
    phi = np.zeros(n)
    phi[(k - 1) % n] = 1.0
    return phi


def quantize(x: float, d: float, c: float) -> int:
    return 1 if x + d <= c else -1


@dataclass
class StepOutcome:
    estimates: np.ndarray     # (R, N, n)
    link_state: object
    weights: np.ndarray       # (R, E) live edge weights a_ij,k
    signals: np.ndarray       # (R, E, 2, b) s_ij and s_ji
    fusion: np.ndarray        # (R, N, n)
    innovation: np.ndarray    # (R, N, n)
    bits: np.ndarray          # (R, N) bits sent by each sensor


def advance(cfg: AlgorithmConfig, estimates: np.ndarray, k: int, link_state, link_u: np.ndarray,
            privacy: np.ndarray, y: np.ndarray) -> StepOutcome:
    """One iteration for a stack of runs given this step's random inputs.

    ``estimates`` is ``(R, N, n)``; ``link_u`` the uniforms consumed by the link
    model, ``privacy`` unit-scale noise ``(R, E, 2, b)`` and ``y`` the
    observations ``(R, N, m)``.
    """
    link_state, weights = cfg.links.advance(link_state, link_u)
    weights = np.asarray(weights, dtype=float)
    R, N, n = estimates.shape
    ei, ej = cfg.edges[:, 0], cfg.edges[:, 1]
    alpha = cfg.steps.alpha(k)
    scale = cfg.noise_scales(k)
    noise = privacy * scale[None, :, None, None]
    c = cfg.thresholds[None, :, None]

    if cfg.use_compression:
        l = (k - 1) % n
        x = estimates[:, :, l:l + 1]                       # (R, N, 1)
    else:
        x = estimates                                       # (R, N, n)
    s_ij = np.where(x[:, ei] + noise[:, :, 0] <= c, 1.0, -1.0)
    s_ji = np.where(x[:, ej] + noise[:, :, 1] <= c, 1.0, -1.0)
    flow = (alpha * weights)[:, :, None] * (s_ij - s_ji)   # (R, E, b)
    if len(ei):
        gathered = flow[:, cfg._inc_idx] * cfg._inc_sign[None, :, :, None]
        fused = gathered.sum(axis=2)                        # (R, N, b)
    else:
        fused = np.zeros((R, N, flow.shape[2]))
    if cfg.use_compression:
        fusion = np.zeros_like(estimates)
        fusion[:, :, l] = fused[:, :, 0]
    else:
        fusion = fused

    hbar = cfg.sensors.hbar                                 # (N, m, n)
    beta = cfg.steps.beta(k)
    resid = y - np.einsum("imn,rin->rim", hbar, estimates)
    innovation = beta[None, :, None] * np.einsum("imn,rim->rin", hbar, resid)

    if len(ei):
        live = (weights > 0)[:, cfg._inc_idx] & (cfg._inc_sign != 0)[None]
        bits = live.sum(axis=2) * cfg.bits_per_message
    else:
        bits = np.zeros((R, N), dtype=int)
    signals = np.stack([s_ij, s_ji], axis=2)
    return StepOutcome(estimates + fusion + innovation, link_state, weights, signals, fusion, innovation, bits)


def _check_finite(est: np.ndarray, k: int, run_offset: int = 0):
    bad = ~np.isfinite(est)
    if bad.any():
        r, i, _ = np.argwhere(bad)[0]
        raise NonFiniteEstimate(k, int(i), int(r) + run_offset)


def step(cfg: AlgorithmConfig, state: EstimatorState, theta, rng: np.random.Generator) -> EstimatorState:
    """Advance one run by one time step drawing every random input from ``rng``."""
    k = state.k + 1
    link_u = rng.random((1, cfg.links.uniforms_per_step))
    privacy = cfg.privacy_variates(rng, 1)
    y = cfg.sensors.draw(theta, rng, rng, 1)
    out = advance(cfg, state.estimates[None], k, state.link_state, link_u, privacy, y)
    _check_finite(out.estimates, k)
    return EstimatorState(k, out.estimates[0], out.link_state)


@dataclass
class SimulationResult:
    """Squared errors ``||theta_hat_i,k - theta||^2`` for ``k = 1..T``.

    ``mean_sq_error`` is averaged over sensors, shape ``(T, R)``.
    ``sq_error``/``bits`` are per sensor, ``(T, R, N)``, when recorded.
    """

    theta: np.ndarray
    mean_sq_error: np.ndarray
    initial_sq_error: np.ndarray
    final_estimates: np.ndarray
    total_bits: np.ndarray
    live_edge_steps: np.ndarray
    sq_error: np.ndarray | None = None
    bits: np.ndarray | None = None
    run_offset: int = 0

    @property
    def horizon(self) -> int:
        return self.mean_sq_error.shape[0]

    @property
    def runs(self) -> int:
        return self.mean_sq_error.shape[1]


CHUNK = 1024


def simulate(cfg: AlgorithmConfig, theta, horizon: int, seed: int, runs: int = 1, run_offset: int = 0,
             per_sensor: bool = False) -> SimulationResult:
    """Run ``runs`` independent repeats (indices ``run_offset ..``) for ``horizon`` steps.

    Repeat ``r`` draws only from the substreams of ``(seed, r)``, so the output of a
    repeat does not depend on which other repeats share the batch.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (cfg.dimension,):
        raise ValueError(f"theta must have shape ({cfg.dimension},)")
    streams = [RunStreams.for_run(seed, run_offset + r) for r in range(runs)]
    N = cfg.sensor_count
    est = np.repeat(cfg.initial_estimates[None], runs, axis=0)
    mse = np.empty((horizon, runs))
    per = np.empty((horizon, runs, N)) if per_sensor else None
    bits_rec = np.empty((horizon, runs, N), dtype=np.int64) if per_sensor else None
    total_bits = np.zeros((runs, N), dtype=np.int64)
    live_edges = np.zeros(runs, dtype=np.int64)
    link_state = None
    g = cfg.links.uniforms_per_step
    init_err = np.sum((est - theta) ** 2, axis=2).mean(axis=1)

    for start in range(0, horizon, CHUNK):
        steps = min(CHUNK, horizon - start)
        link_u = np.stack([s.graph.random((steps, g)) for s in streams], axis=1)
        privacy = np.stack([cfg.privacy_variates(s.privacy, steps) for s in streams], axis=1)
        ys = np.stack([cfg.sensors.draw(theta, s.observation, s.failure, steps) for s in streams], axis=1)
        for t in range(steps):
            k = start + t + 1
            out = advance(cfg, est, k, link_state, link_u[t], privacy[t], ys[t])
            est, link_state = out.estimates, out.link_state
            _check_finite(est, k, run_offset)
            err = np.sum((est - theta) ** 2, axis=2)
            mse[k - 1] = err.mean(axis=1)
            total_bits += out.bits
            live_edges += np.count_nonzero(out.weights > 0, axis=1)
            if per_sensor:
                per[k - 1] = err
                bits_rec[k - 1] = out.bits
    return SimulationResult(theta, mse, init_err, est, total_bits, live_edges, per, bits_rec, run_offset)


@dataclass
class RunResult:
    sq_error: np.ndarray       # (T, N)
    bits: np.ndarray           # (T, N)
    final_state: EstimatorState

    def write_csv(self, path):
        import csv
        T, N = self.sq_error.shape
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "sensor", "sq_error", "bits_sent"])
            for k in range(T):
                for i in range(N):
                    w.writerow([k + 1, i + 1, repr(float(self.sq_error[k, i])), int(self.bits[k, i])])


def run(cfg: AlgorithmConfig, theta, horizon: int, seed: int, run_index: int = 0) -> RunResult:
    res = simulate(cfg, theta, horizon, seed, runs=1, run_offset=run_index, per_sensor=True)
    return RunResult(res.sq_error[:, 0], res.bits[:, 0], EstimatorState(horizon, res.final_estimates[0]))


# -- assumption checks -------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class AssumptionReport:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name}" + (f"  ({c.detail})" if c.detail else "")
                for c in self.checks]


def validate_assumptions(cfg: AlgorithmConfig) -> AssumptionReport:
    """Check the connectivity, observability, step-size and privacy-bound conditions.

    Never raises; each condition is reported with the inequality that failed.
    """
    checks: list[Check] = []
    st = cfg.steps
    edges = cfg.edges
    eps = cfg._noise_eps

    checks.append(Check("union graph connected", bool(cfg.links.union_connected()),
                        "" if cfg.links.union_connected() else "the union of all topologies is disconnected"))
    obs = cooperative_observability(cfg.sensors.mean_matrices())
    checks.append(Check("cooperative observability", obs,
                        "" if obs else "sum_i Hbar_i^T Hbar_i is singular"))

    bad = [(e, g) for e, g in zip(edges, st.gamma) if not 2 * g > 1]
    checks.append(Check("Σα² < ∞", not bad, _edge_msg(bad, "2γ = {:.4g} ≤ 1")))
    bad_b = [(i, d) for i, d in enumerate(st.delta) if not 2 * d > 1]
    checks.append(Check("Σβ² < ∞", not bad_b, _sensor_msg(bad_b, "2δ = {:.4g} ≤ 1")))

    bad = [(e, g + x) for e, g, x in zip(edges, st.gamma, eps) if g + x > 1]
    bad_d = [(i, d) for i, d in enumerate(st.delta) if d > 1]
    msg = "; ".join(filter(None, [_edge_msg(bad, "γ + ε = {:.4g} > 1"), _sensor_msg(bad_d, "δ = {:.4g} > 1")]))
    checks.append(Check("Σz_k = ∞", not bad and not bad_d, msg))

    bad = [e for e, x in zip(edges, eps) if not schedule_feasible(x)]
    checks.append(Check("noise growth ε ≤ 1/2", not bad, _edge_msg([(e, None) for e in bad], "")))

    if len(edges):
        lhs = float(np.max(st.gamma + eps))
        lo, hi = float(np.min(st.delta)), float(np.max(st.delta))
        ok = lhs < lo <= hi <= 1
        checks.append(Check("rate ordering max(γ+ε) < min δ ≤ max δ ≤ 1", ok,
                            "" if ok else f"max(γ+ε) = {lhs:.4g}, min δ = {lo:.4g}, max δ = {hi:.4g}"))

    mats = cfg.sensors.mean_matrices()
    c1, c2, c6 = [], [], []
    for i, h in enumerate(mats):
        info = spectral(h)
        b0 = float(st.sensor_beta(i, st.k0[i]))
        if not b0 * info.lambda_max < 1:
            c1.append(f"sensor {i + 1}: β_k0·λmax = {b0 * info.lambda_max:.4g} ≥ 1")
        if not st.beta_base[i] < st.k0[i] ** st.delta[i]:
            c6.append(f"sensor {i + 1}: β₁ = {st.beta_base[i]:.4g} ≥ k0^δ = {st.k0[i] ** st.delta[i]:.4g}")
        if info.lambda_min_plus is None:
            continue
        for e, (a, b) in enumerate(edges):
            if i not in (a, b):
                continue
            val = 2 * info.lambda_min_plus * st.beta_base[i] + 2 * eps[e]
            if not val > 1:
                text = f"sensor {i + 1}, edge ({a + 1},{b + 1}): 2λ⁺β₁ + 2ε = {val:.4g} ≤ 1"
                c6.append(text)
                if st.delta[i] == 1:
                    c2.append(text)
    checks.append(Check("privacy condition β_k λmax(Q_i) < 1", not c1, _join(c1)))
    checks.append(Check("privacy summability 2λ⁺β₁ + 2ε > 1 (δ = 1)", not c2, _join(c2)))
    checks.append(Check("privacy rate conditions β₁ < k0^δ, 2λ⁺β₁ + 2ε > 1", not c6, _join(c6)))
    return AssumptionReport(checks)


def _join(msgs: list[str], limit: int = 3) -> str:
    more = f" (+{len(msgs) - limit} more)" if len(msgs) > limit else ""
    return "; ".join(msgs[:limit]) + more


def _edge_msg(items, fmt: str) -> str:
    if not items:
        return ""
    (a, b), v = items[0]
    more = f" (+{len(items) - 1} more)" if len(items) > 1 else ""
    body = fmt.format(v) if v is not None and fmt else "violated"
    return f"edge ({a + 1},{b + 1}): {body}{more}"


def _sensor_msg(items, fmt: str) -> str:
    if not items:
        return ""
    i, v = items[0]
    more = f" (+{len(items) - 1} more)" if len(items) > 1 else ""
    return f"sensor {i + 1}: {fmt.format(v)}{more}"
