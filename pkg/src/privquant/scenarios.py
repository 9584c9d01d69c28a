"""Ready-made configurations for the reference experiments.

The eight-sensor network uses four sparse topologies switched by a cyclic
Markov chain; odd-numbered sensors see only the first coordinate of
``theta = (1, -1)`` and even-numbered ones only the second, and each sensor
fails half of the time.
"""

from __future__ import annotations

import numpy as np

from .estimator import AlgorithmConfig, StepSizeSchedule, default_warmup
from .graph_model import IndependentEdgeLinks, MarkovChain, TopologyChainLinks, TopologySet
from .noise_models import Family, NoiseSchedule
from .observation_model import BernoulliEventSensors, SensorArray, SensorSpec

THETA = np.array([1.0, -1.0])
EVENT_RATE = 0.2699

# 1-based edge lists; every topology is a strict subgraph and only the union
# (an 8-ring with the chords 1-5 and 3-7) is connected
TOPOLOGY_EDGES = (
    ((1, 2), (5, 6)),
    ((2, 3), (6, 7), (1, 5)),
    ((3, 4), (7, 8)),
    ((4, 5), (8, 1), (3, 7)),
)


def cyclic_transition(m: int = 4, stay: float = 0.5) -> np.ndarray:
    p = np.zeros((m, m))
    for u in range(m):
        p[u, u] = stay
        p[u, (u + 1) % m] += 1 - stay
    return p


def ring_topologies(vertex_count: int = 8, edges=TOPOLOGY_EDGES) -> TopologySet:
    return TopologySet.from_edge_lists(vertex_count, [[(a, b, 1.0) for a, b in g] for g in edges], one_based=True)


def reference_links(empty: bool = False) -> TopologyChainLinks:
    p = cyclic_transition()
    chain = MarkovChain(p, np.full(4, 0.25))
    if empty:
        topo = TopologySet(8, np.zeros((4, 8, 8)))
    else:
        topo = ring_topologies()
    return TopologyChainLinks(topo, chain)


def split_sensors(count: int, dimension: int, gain: float = 2.0, failure: float = 0.5,
                  noise_std: float = 0.1) -> SensorArray:
    """Odd sensors observe the first half of the coordinates, even ones the second half."""
    half = dimension // 2
    specs = []
    for i in range(count):
        active = np.zeros((half, dimension))
        cols = np.arange(half) if i % 2 == 0 else np.arange(half, dimension)
        active[np.arange(half), cols] = gain
        specs.append(SensorSpec.failing(active, failure, noise_std))
    return SensorArray(specs)


def reference_config(family: Family | str = Family.GAUSSIAN, noise_growth: float = 0.15,
                     alpha_base: float = 3.0, gamma: float = 0.8, beta_base: float = 3.0,
                     delta: float = 1.0, k0: int | None = None, dimension: int = 2,
                     use_compression: bool = True, communicate: bool = True) -> AlgorithmConfig:
    links = reference_links(empty=not communicate)
    e = len(links.edges)
    sensors = split_sensors(8, dimension)
    noise = [NoiseSchedule(Family(family), 1.0, noise_growth)] * e
    steps = StepSizeSchedule.uniform(e, 8, alpha_base, gamma, beta_base, delta, k0)
    return AlgorithmConfig(links, sensors, noise, steps, 0.0, use_compression)


def tradeoff_config(chi: float, nu: float, family: Family | str = Family.CAUCHY,
                    alpha_base: float = 3.0, beta_base: float | None = None) -> AlgorithmConfig:
    """Reference network with the noise growth and step sizes of a trade-off point."""
    from .experiments import tradeoff_params
    pt = tradeoff_params(nu, chi, 1.0)
    b1 = pt.beta_base if beta_base is None else beta_base
    k0 = pt.k0 if beta_base is None else None
    return reference_config(family, pt.epsilon, alpha_base, pt.gamma, b1, pt.delta, k0)


def highdim_theta(seed: int = 20240612, dimension: int = 12) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-1.0, 1.0, dimension)


def highdim_config(use_compression: bool, dimension: int = 12, **kw) -> AlgorithmConfig:
    return reference_config(dimension=dimension, use_compression=use_compression, **kw)


def event_rate_config(sensors: int = 20, participation: float = 0.7, chi: float = 1.3,
                      alpha_base: float = 0.2, beta_base: float = 0.4, p_stay: float = 0.7,
                      initial_estimate: float = 0.0) -> AlgorithmConfig:
    """Noise scale ``k^((chi-1)/2)`` and ``alpha = alpha_base / k^((2.9-chi)/2)``."""
    links = IndependentEdgeLinks.complete(sensors, p_initial=0.5, p_stay_on=p_stay, p_stay_off=p_stay)
    e = len(links.edges)
    gamma = (2.9 - chi) / 2
    eps = (chi - 1) / 2
    noise = [NoiseSchedule(Family.GAUSSIAN, 1.0, eps)] * e
    steps = StepSizeSchedule(np.full(e, alpha_base), np.full(e, gamma), np.full(sensors, beta_base),
                             np.ones(sensors), np.full(sensors, default_warmup(beta_base, 1.0)))
    return AlgorithmConfig(links, BernoulliEventSensors(sensors, participation), noise, steps, 0.0, True,
                           np.full((sensors, 1), initial_estimate))
