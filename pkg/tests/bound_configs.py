"""Random sensor configurations meeting every hypothesis of both bound forms."""

import numpy as np

from privquant.estimator import default_warmup
from privquant.noise_models import Family, NoiseSchedule
from privquant.privacy_analysis import FisherBoundConfig


def random_config(rng) -> FisherBoundConfig:
    """A random sensor meeting every hypothesis of both bound forms."""
    while True:
        lam = rng.uniform(0.3, 2.0)
        delta = 1.0 if rng.random() < 0.5 else rng.uniform(0.55, 0.95)
        b1 = rng.uniform(0.6, 4.0) / lam
        nbrs = int(rng.integers(1, 4))
        eps = rng.uniform(0.0, 0.5, nbrs)
        noise = tuple(NoiseSchedule(list(Family)[rng.integers(3)], rng.uniform(0.5, 2.0), e) for e in eps)
        lmax = lam * rng.uniform(1.0, 1.5)
        k0 = default_warmup(b1, delta)
        if b1 / k0 ** delta * lmax >= 1:
            continue
        if delta == 1 and np.any(2 * lam * b1 + 2 * eps <= 1):
            continue
        if delta < 1 and np.any(2 * lam * b1 - (delta - 2 * eps) * k0 ** (delta - 1) <= 0):
            continue
        q = rng.uniform(0.1, 1.0, nbrs)
        return FisherBoundConfig(0, tuple(range(1, nbrs + 1)), q, noise, b1, delta, k0, lam, lmax,
                                 np.array([[lam]]))
