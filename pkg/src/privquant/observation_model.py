"""Sensor observations ``y = H theta + w`` with a Bernoulli failure model.

A sensor that fails at time ``k`` reports ``H = 0`` (pure noise); otherwise
``H`` equals the sensor's active matrix.  The estimator only ever sees the mean
matrix ``Hbar = (1 - failure_probability) * active``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

RANK_TOL = 1e-10


@dataclass(frozen=True)
class SensorSpec:
    mean_matrix: np.ndarray
    active_matrix: np.ndarray
    failure_probability: float = 0.0
    obs_noise_std: float = 0.0

    def __post_init__(self):
        mean = np.atleast_2d(np.array(self.mean_matrix, dtype=float))
        active = np.atleast_2d(np.array(self.active_matrix, dtype=float))
        if mean.shape != active.shape:
            raise ValueError(f"mean matrix {mean.shape} and active matrix {active.shape} differ in shape")
        if not 0 <= self.failure_probability <= 1:
            raise ValueError("failure_probability must lie in [0, 1]")
        if self.obs_noise_std < 0:
            raise ValueError("obs_noise_std must be nonnegative")
        expected = (1 - self.failure_probability) * active
        if np.max(np.abs(expected - mean), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(mean), initial=0.0)):
            raise ValueError("mean_matrix must equal (1 - failure_probability) * active_matrix")
        mean.setflags(write=False)
        active.setflags(write=False)
        object.__setattr__(self, "mean_matrix", mean)
        object.__setattr__(self, "active_matrix", active)

    @classmethod
    def failing(cls, active_matrix, failure_probability: float = 0.0, obs_noise_std: float = 0.0) -> "SensorSpec":
        active = np.atleast_2d(np.asarray(active_matrix, dtype=float))
        return cls((1 - failure_probability) * active, active, failure_probability, obs_noise_std)

    @property
    def rows(self) -> int:
        return self.mean_matrix.shape[0]

    @property
    def dimension(self) -> int:
        return self.mean_matrix.shape[1]


def sample_measurement_matrix(spec: SensorSpec, rng: np.random.Generator) -> np.ndarray:
    if rng.random() < spec.failure_probability:
        return np.zeros_like(spec.active_matrix)
    return spec.active_matrix.copy()


def observe(spec: SensorSpec, theta, rng: np.random.Generator) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.dimension,):
        raise ValueError(f"theta has shape {theta.shape}, sensor expects ({spec.dimension},)")
    h = sample_measurement_matrix(spec, rng)
    return h @ theta + spec.obs_noise_std * rng.standard_normal(spec.rows)


@dataclass(frozen=True)
class SpectralInfo:
    Q: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    lambda_min_plus: float | None
    lambda_max: float
    rank: int


def spectral(spec: SensorSpec | np.ndarray) -> SpectralInfo:
    """Eigen-structure of ``Q = Hbar^T Hbar``.

    Eigenvalues below ``1e-10 * lambda_max`` count as zero.  With ``Hbar = 0``
    there is no positive eigenvalue and ``lambda_min_plus`` is ``None``.
    """
    hbar = spec.mean_matrix if isinstance(spec, SensorSpec) else np.atleast_2d(np.asarray(spec, float))
    q = hbar.T @ hbar
    w, v = np.linalg.eigh(q)
    lmax = float(max(w[-1], 0.0))
    positive = w > RANK_TOL * lmax if lmax > 0 else np.zeros_like(w, dtype=bool)
    w = np.where(positive, w, 0.0)
    lmin = float(w[positive].min()) if positive.any() else None
    return SpectralInfo(q, w, v, lmin, lmax, int(positive.sum()))


def cooperative_observability(specs: Sequence[SensorSpec | np.ndarray]) -> bool:
    mats = [s.mean_matrix if isinstance(s, SensorSpec) else np.atleast_2d(np.asarray(s, float)) for s in specs]
    dims = {m.shape[1] for m in mats}
    if len(dims) != 1:
        raise ValueError(f"sensors disagree on the parameter dimension: {sorted(dims)}")
    g = sum(m.T @ m for m in mats)
    w = np.linalg.eigvalsh(g)
    return bool(w[-1] > 0 and w[0] > RANK_TOL * w[-1])


# -- observation sources consumed by the simulator --------------------------

class SensorArray:
    """All sensors of a network, padded to a common row count for batching."""

    def __init__(self, specs: Sequence[SensorSpec]):
        if not specs:
            raise ValueError("need at least one sensor")
        dims = {s.dimension for s in specs}
        if len(dims) != 1:
            raise ValueError(f"sensors disagree on the parameter dimension: {sorted(dims)}")
        self.specs = tuple(specs)
        self.dimension = dims.pop()
        self.count = len(specs)
        self.rows = max(s.rows for s in specs)
        n, m = self.dimension, self.rows
        self.hbar = np.zeros((self.count, m, n))
        self.active = np.zeros((self.count, m, n))
        self.row_mask = np.zeros((self.count, m))
        for i, s in enumerate(specs):
            self.hbar[i, : s.rows] = s.mean_matrix
            self.active[i, : s.rows] = s.active_matrix
            self.row_mask[i, : s.rows] = 1.0
        self.fail_p = np.array([s.failure_probability for s in specs])
        self.noise_std = np.array([s.obs_noise_std for s in specs])

    def mean_matrices(self) -> list[np.ndarray]:
        return [s.mean_matrix for s in self.specs]

    def draw(self, theta, obs_rng, fail_rng, steps: int) -> np.ndarray:
        """Observations of one run for ``steps`` consecutive times, shape ``(steps, N, m)``."""
        theta = np.asarray(theta, dtype=float)
        clean = self.active @ theta                        # (N, m)
        working = fail_rng.random((steps, self.count)) >= self.fail_p
        noise = obs_rng.standard_normal((steps, self.count, self.rows))
        noise *= (self.noise_std[:, None] * self.row_mask)[None]
        return working[:, :, None] * clean[None] + noise


class BernoulliEventSensors:
    """Binary event data: ``H = 1`` when a participant shows up (probability
    ``participation``), and then ``y = 1`` with probability ``theta``.

    The observation noise ``w = H (event - theta)`` has mean zero, so the model
    is of the linear form with ``Hbar = participation``.
    """

    dimension = 1
    rows = 1

    def __init__(self, count: int, participation: float = 0.7):
        if not 0 < participation <= 1:
            raise ValueError("participation must be in (0, 1]")
        self.count = count
        self.participation = participation
        self.hbar = np.full((count, 1, 1), participation)

    def mean_matrices(self) -> list[np.ndarray]:
        return [np.array([[self.participation]]) for _ in range(self.count)]

    def draw(self, theta, obs_rng, fail_rng, steps: int) -> np.ndarray:
        rate = float(np.asarray(theta, dtype=float).reshape(-1)[0])
        if not 0 <= rate <= 1:
            raise ValueError("event rate must lie in [0, 1]")
        present = fail_rng.random((steps, self.count)) < self.participation
        event = obs_rng.random((steps, self.count)) < rate
        return (present & event).astype(float)[:, :, None]
