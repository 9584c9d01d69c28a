"""TOML configuration files.

Vertices, sensors and edges are numbered from 1 in the file.  Layout::

    seed = 7                      # optional

    [graph]
    vertices = 8
    transition = [[0.5, 0.5], [0.5, 0.5]]
    initial = [0.5, 0.5]          # optional, defaults to the stationary law
    [[graph.topology]]
    edges = [[1, 2, 1.0], [5, 6, 1.0]]     # i, j, weight (weight optional)

    [[sensor]]
    active_matrix = [[2.0, 0.0]]
    failure_probability = 0.5
    obs_noise_std = 0.1

    [noise]
    family = "gaussian"
    base_scale = 1.0
    growth_exponent = 0.15
    [[noise.edge]]                # optional per-edge override
    edge = [1, 2]
    family = "cauchy"

    [algorithm]
    dimension = 2
    use_compression = true
    threshold_default = 0.0
    initial_estimate = 0.0
    [algorithm.alpha]
    base = 3.0
    gamma = 0.8
    [algorithm.beta]
    base = 3.0
    delta = 1.0
    # k0 = 8                      # optional

    [observation]
    theta = [1.0, -1.0]

``[graph]`` may instead set ``model = "independent_edges"`` with ``edges``,
``p_initial``, ``p_stay_on`` and ``p_stay_off``; an ``[event]`` table with
``count`` and ``participation`` replaces the ``[[sensor]]`` list by binary
event sensors.  Per-edge entries ``[[algorithm.alpha.edge]]``,
``[[algorithm.threshold]]`` and per-sensor ``[[algorithm.beta.sensor]]``
override the defaults.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .estimator import AlgorithmConfig, StepSizeSchedule, default_warmup
from .graph_model import IndependentEdgeLinks, MarkovChain, TopologyChainLinks, TopologySet
from .noise_models import Family, NoiseSchedule
from .observation_model import BernoulliEventSensors, SensorArray, SensorSpec


class ConfigError(ValueError):
    pass


@dataclass
class LoadedConfig:
    algorithm: AlgorithmConfig
    theta: np.ndarray
    seed: int | None
    path: Path | None = None


def load_config(path) -> LoadedConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = build_config(data)
    cfg.path = path
    return cfg


def _get(table: dict, key: str, where: str):
    if not isinstance(table, dict) or key not in table:
        raise ConfigError(f"missing key '{where}.{key}'" if where else f"missing key '{key}'")
    return table[key]


def _edge_key(pair, where: str) -> tuple[int, int]:
    try:
        a, b = int(pair[0]) - 1, int(pair[1]) - 1
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"{where}: edge must be a pair of 1-based vertex ids") from exc
    return (min(a, b), max(a, b))


def _links(data: dict):
    g = _get(data, "graph", "")
    n = int(_get(g, "vertices", "graph"))
    model = g.get("model", "topology_chain")
    try:
        if model == "independent_edges":
            pairs = [_edge_key(e, "graph.edges") for e in _get(g, "edges", "graph")]
            return IndependentEdgeLinks(n, pairs, float(g.get("p_initial", 0.5)), float(g.get("p_stay_on", 0.7)),
                                        float(g.get("p_stay_off", 0.7)), float(g.get("weight", 1.0)))
        if model != "topology_chain":
            raise ConfigError(f"graph.model must be 'topology_chain' or 'independent_edges', got {model!r}")
        transition = np.asarray(_get(g, "transition", "graph"), dtype=float)
        tops = _get(g, "topology", "graph")
        lists = []
        for u, t in enumerate(tops):
            edges = _get(t, "edges", f"graph.topology[{u + 1}]")
            lists.append([(e[0], e[1], e[2] if len(e) > 2 else 1.0) for e in edges])
        topo = TopologySet.from_edge_lists(n, lists, one_based=True)
        chain = (MarkovChain(transition, np.asarray(g["initial"], dtype=float)) if "initial" in g
                 else MarkovChain.stationary_start(transition))
        return TopologyChainLinks(topo, chain)
    except ConfigError:
        raise
    except (ValueError, IndexError, TypeError) as exc:
        raise ConfigError(f"graph: {exc}") from exc


def _sensors(data: dict, dimension: int):
    if "event" in data:
        ev = data["event"]
        return BernoulliEventSensors(int(_get(ev, "count", "event")), float(ev.get("participation", 0.7)))
    specs = []
    for i, s in enumerate(_get(data, "sensor", "")):
        where = f"sensor[{i + 1}]"
        active = np.atleast_2d(np.asarray(_get(s, "active_matrix", where), dtype=float))
        p = float(s.get("failure_probability", 0.0))
        std = float(s.get("obs_noise_std", 0.0))
        mean = np.asarray(s["mean_matrix"], dtype=float) if "mean_matrix" in s else (1 - p) * active
        try:
            specs.append(SensorSpec(mean, active, p, std))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        if active.shape[1] != dimension:
            raise ConfigError(f"{where}: matrix has {active.shape[1]} columns but algorithm.dimension = {dimension}")
    return SensorArray(specs)


def _per_edge(edges: np.ndarray, entries, where: str, fields: dict) -> dict:
    """Start from ``fields`` defaults and apply ``[[...edge]]`` overrides; returns arrays per field."""
    index = {(int(a), int(b)): e for e, (a, b) in enumerate(edges)}
    out = {k: np.full(len(edges), v, dtype=object) for k, v in fields.items()}
    for n, entry in enumerate(entries or []):
        key = _edge_key(_get(entry, "edge", f"{where}[{n + 1}]"), where)
        if key not in index:
            raise ConfigError(f"{where}[{n + 1}]: ({key[0] + 1},{key[1] + 1}) is not an edge of the union graph")
        for k in fields:
            if k in entry:
                out[k][index[key]] = entry[k]
    return out


def build_config(data: dict) -> LoadedConfig:
    alg = _get(data, "algorithm", "")
    dim = int(_get(alg, "dimension", "algorithm"))
    links = _links(data)
    sensors = _sensors(data, dim)
    edges = np.asarray(links.edges, dtype=int).reshape(-1, 2)
    n_sensors = sensors.count

    nz = _get(data, "noise", "")
    nf = _per_edge(edges, nz.get("edge"), "noise.edge",
                   {"family": nz.get("family", "gaussian"), "base_scale": float(nz.get("base_scale", 1.0)),
                    "growth_exponent": float(nz.get("growth_exponent", 0.0))})
    try:
        noise = [NoiseSchedule(Family(f), float(b), float(g))
                 for f, b, g in zip(nf["family"], nf["base_scale"], nf["growth_exponent"])]
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from exc

    a = _get(alg, "alpha", "algorithm")
    af = _per_edge(edges, a.get("edge"), "algorithm.alpha.edge",
                   {"base": float(_get(a, "base", "algorithm.alpha")), "gamma": float(_get(a, "gamma", "algorithm.alpha"))})
    b = _get(alg, "beta", "algorithm")
    b1 = float(_get(b, "base", "algorithm.beta"))
    d = float(b.get("delta", 1.0))
    beta_base, delta, k0 = np.full(n_sensors, b1), np.full(n_sensors, d), np.zeros(n_sensors, dtype=int)
    explicit = np.zeros(n_sensors, dtype=bool)
    if "k0" in b:
        k0[:], explicit[:] = int(b["k0"]), True
    for n, entry in enumerate(b.get("sensor", [])):
        i = int(_get(entry, "sensor", f"algorithm.beta.sensor[{n + 1}]")) - 1
        if not 0 <= i < n_sensors:
            raise ConfigError(f"algorithm.beta.sensor[{n + 1}]: no sensor {i + 1}")
        beta_base[i] = float(entry.get("base", beta_base[i]))
        delta[i] = float(entry.get("delta", delta[i]))
        if "k0" in entry:
            k0[i], explicit[i] = int(entry["k0"]), True
    for i in np.flatnonzero(~explicit):
        k0[i] = default_warmup(beta_base[i], delta[i])
    try:
        steps = StepSizeSchedule(af["base"].astype(float), af["gamma"].astype(float), beta_base, delta, k0)
    except ValueError as exc:
        raise ConfigError(f"algorithm: {exc}") from exc

    th = _per_edge(edges, alg.get("threshold"), "algorithm.threshold",
                   {"value": float(alg.get("threshold_default", 0.0))})["value"].astype(float)
    x0 = alg.get("initial_estimate", 0.0)
    obs = _get(data, "observation", "")
    theta = np.atleast_1d(np.asarray(_get(obs, "theta", "observation"), dtype=float))
    if theta.shape != (dim,):
        raise ConfigError(f"observation.theta has {theta.size} entries but algorithm.dimension = {dim}")
    try:
        cfg = AlgorithmConfig(links, sensors, noise, steps, th, bool(alg.get("use_compression", True)),
                              np.asarray(x0, dtype=float))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    seed = data.get("seed", obs.get("seed"))
    return LoadedConfig(cfg, theta, None if seed is None else int(seed))
