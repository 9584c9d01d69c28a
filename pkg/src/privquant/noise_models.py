"""Privacy noise families with polynomially growing scale.

At time ``k`` the noise on an edge follows the zero-centred family with scale
``base_scale * k**growth_exponent``.  Besides density, CDF and sampling, each
schedule exposes the two constants the estimator's analysis relies on:

* ``eta(k) = sup_x f_k(x)^2 / (F_k(x) (1 - F_k(x)))``, the largest Fisher
  information one binary comparison can carry about its input;
* ``zeta(k) = scale(1) / scale(k)``, the rate at which the noise density near
  the origin fades, which governs the divergence condition on the step sizes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    CAUCHY = "cauchy"


@dataclass(frozen=True)
class PrivacyConstants:
    eta: float
    zeta: float


@dataclass(frozen=True)
class EtaEstimate:
    value: float
    argmax: float
    coarse_grid: bool


@dataclass(frozen=True)
class NoiseSchedule:
    family: Family
    base_scale: float = 1.0
    growth_exponent: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not self.base_scale > 0:
            raise ValueError(f"base_scale must be positive, got {self.base_scale}")
        if not self.growth_exponent >= 0:
            raise ValueError(f"growth_exponent must be nonnegative, got {self.growth_exponent}")

    def scale(self, k):
        return self.base_scale * np.power(k, self.growth_exponent, dtype=float)

    def density(self, k, x):
        s = self.scale(k)
        z = np.asarray(x, dtype=float) / s
        if self.family is Family.GAUSSIAN:
            return np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * s)
        if self.family is Family.LAPLACE:
            return np.exp(-np.abs(z)) / (2 * s)
        return 1.0 / (math.pi * s * (1 + z * z))

    def cdf(self, k, x):
        z = np.asarray(x, dtype=float) / self.scale(k)
        if self.family is Family.GAUSSIAN:
            return special.ndtr(z)
        if self.family is Family.LAPLACE:
            # both branches written with exp of a nonpositive argument, so
            # cdf(-x) and 1 - cdf(x) round identically
            half_tail = 0.5 * np.exp(-np.abs(z))
            return np.where(z < 0, half_tail, 1.0 - half_tail)
        return 0.5 + np.arctan(z) / math.pi

    def standard_variates(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Unit-scale draws; multiply by :meth:`scale` to get time-``k`` noise."""
        if self.family is Family.GAUSSIAN:
            return rng.standard_normal(shape)
        return unit_inverse_cdf(self.family, rng.random(shape))

    def sample(self, k, rng: np.random.Generator, size=None):
        return self.scale(k) * self.standard_variates(rng, size)

    def eta(self, k):
        s2 = self.scale(k) ** 2
        if self.family is Family.GAUSSIAN:
            return 2.0 / (math.pi * s2)
        if self.family is Family.LAPLACE:
            return 1.0 / s2
        return 4.0 / (math.pi ** 2 * s2)

    def zeta(self, k):
        return np.power(k, -self.growth_exponent, dtype=float)

    def constants(self, k) -> PrivacyConstants:
        return PrivacyConstants(float(self.eta(k)), float(self.zeta(k)))


def unit_inverse_cdf(family: Family, u: np.ndarray) -> np.ndarray:
    family = Family(family)
    if family is Family.GAUSSIAN:
        return special.ndtri(u)
    if family is Family.LAPLACE:
        c = u - 0.5
        return -np.sign(c) * np.log1p(-2 * np.abs(c))
    return np.tan(math.pi * (u - 0.5))


def eta_numeric(s: NoiseSchedule, k, grid_halfwidth: float, grid_points: int) -> EtaEstimate:
    """Grid maximum of ``f^2 / (F (1 - F))`` over ``[-halfwidth, halfwidth]``.

    A check on :meth:`NoiseSchedule.eta`, never used by the algorithm.
    """
    x = np.linspace(-grid_halfwidth, grid_halfwidth, int(grid_points))
    f = s.density(k, x)
    # the families are symmetric, so the upper tail is F(-x); this avoids the
    # cancellation in 1 - F(x) far from the origin
    denom = s.cdf(k, x) * s.cdf(k, -x)
    ratio = np.divide(f * f, denom, out=np.zeros_like(f), where=denom > 0)
    i = int(np.argmax(ratio))
    return EtaEstimate(float(ratio[i]), float(x[i]), coarse_grid=grid_points < 1000)


def schedule_feasible(eps: float) -> bool:
    """Whether step sizes meeting the stochastic-approximation conditions exist for
    noise scale growing like ``k**eps``."""
    if eps < 0:
        raise ValueError("growth exponent must be nonnegative")
    return eps <= 0.5


def stack_scales(schedules, k) -> np.ndarray:
    """Scale of every schedule at time ``k``."""
    return np.array([s.scale(k) for s in schedules], dtype=float)
