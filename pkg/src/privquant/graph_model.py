"""Markovian switching communication graphs.

The network switches among ``M`` undirected weighted topologies on the same
vertex set.  Which topology is active at time ``k`` is the state of a
homogeneous Markov chain.  Vertices are 0-based in the Python API; the config
loader translates from the 1-based ids used in config files.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class GraphValidationError(ValueError):
    pass


class ChainError(ValueError):
    """Raised when a Markov chain has no unique limiting distribution."""


@dataclass(frozen=True)
class TopologySet:
    vertex_count: int
    adjacencies: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = []
        n = self.vertex_count
        if n < 1:
            raise GraphValidationError("vertex_count must be positive")
        if len(self.adjacencies) == 0:
            raise GraphValidationError("topology set is empty")
        for u, a in enumerate(self.adjacencies):
            a = np.array(a, dtype=float)
            if a.shape != (n, n):
                raise GraphValidationError(f"topology {u}: expected shape {(n, n)}, got {a.shape}")
            if not np.all(np.isfinite(a)):
                raise GraphValidationError(f"topology {u}: non-finite weight")
            if np.any(a < 0):
                raise GraphValidationError(f"topology {u}: negative weight")
            if np.any(np.diag(a) != 0):
                raise GraphValidationError(f"topology {u}: self-loops are not allowed")
            if not np.array_equal(a, a.T):
                raise GraphValidationError(f"topology {u}: adjacency is not symmetric")
            a.setflags(write=False)
            mats.append(a)
        object.__setattr__(self, "adjacencies", tuple(mats))

    @classmethod
    def from_edge_lists(cls, vertex_count: int, edge_lists: Sequence[Sequence[Sequence[float]]],
                        one_based: bool = False) -> "TopologySet":
        """Build from ``[[i, j, weight], ...]`` per topology (weight optional, default 1)."""
        off = 1 if one_based else 0
        mats = []
        for u, edges in enumerate(edge_lists):
            a = np.zeros((vertex_count, vertex_count))
            for e in edges:
                if len(e) not in (2, 3):
                    raise GraphValidationError(f"topology {u}: edge entry {e!r} must be [i, j] or [i, j, w]")
                i, j = int(e[0]) - off, int(e[1]) - off
                w = float(e[2]) if len(e) == 3 else 1.0
                if not (0 <= i < vertex_count and 0 <= j < vertex_count):
                    raise GraphValidationError(f"topology {u}: edge {e!r} references an unknown vertex")
                if i == j:
                    raise GraphValidationError(f"topology {u}: self-loop at vertex {e[0]}")
                a[i, j] = a[j, i] = w
            mats.append(a)
        return cls(vertex_count, tuple(mats))

    @property
    def size(self) -> int:
        return len(self.adjacencies)

    def union_adjacency(self) -> np.ndarray:
        return np.sum(self.adjacencies, axis=0)

    def union_edges(self) -> np.ndarray:
        """Unordered edges ``(i, j)`` with ``i < j`` of the union graph, shape ``(E, 2)``."""
        iu, ju = np.nonzero(np.triu(self.union_adjacency() > 0, k=1))
        return np.stack([iu, ju], axis=1).astype(int)

    def edge_weights(self) -> np.ndarray:
        """Weight of every union edge in every topology, shape ``(M, E)``."""
        e = self.union_edges()
        return np.stack([a[e[:, 0], e[:, 1]] for a in self.adjacencies])

    def containing(self, i: int, j: int) -> list[int]:
        """Indices of the topologies whose edge set contains ``(i, j)``."""
        return [u for u, a in enumerate(self.adjacencies) if a[i, j] > 0]

    def neighbors(self, i: int, u: int | None = None) -> list[int]:
        a = self.union_adjacency() if u is None else self.adjacencies[u]
        return [int(j) for j in np.nonzero(a[i] > 0)[0]]


def _connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in np.nonzero(adj[v] > 0)[0]:
            if not seen[w]:
                seen[w] = True
                queue.append(w)
    return bool(seen.all())


def validate_union_connected(t: TopologySet) -> bool:
    return _connected(t.union_adjacency())


def laplacian(t: TopologySet, u: int) -> np.ndarray:
    if not 0 <= u < t.size:
        raise IndexError(f"topology index {u} out of range [0, {t.size})")
    a = t.adjacencies[u]
    return np.diag(a.sum(axis=1)) - a


def mean_adjacency(t: TopologySet, pi: Sequence[float]) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (t.size,):
        raise ValueError(f"expected {t.size} weights, got shape {pi.shape}")
    return np.tensordot(pi, np.stack(t.adjacencies), axes=1)


@dataclass(frozen=True)
class MarkovChain:
    transition: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        p = np.array(self.transition, dtype=float)
        q = np.array(self.initial, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ChainError(f"transition matrix must be square, got shape {p.shape}")
        if np.any(p < 0) or np.any(p > 1):
            raise ChainError("transition entries must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1) > 1e-12):
            raise ChainError("transition rows must sum to 1")
        if q.shape != (p.shape[0],):
            raise ChainError(f"initial distribution must have length {p.shape[0]}")
        if np.any(q < 0) or abs(q.sum() - 1) > 1e-12:
            raise ChainError("initial distribution must be a probability vector")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "initial", q)

    @property
    def size(self) -> int:
        return self.transition.shape[0]

    @classmethod
    def stationary_start(cls, transition) -> "MarkovChain":
        p = np.asarray(transition, dtype=float)
        m = p.shape[0]
        return cls(p, stationary_distribution(cls(p, np.full(m, 1.0 / m))))


def _reachable(p: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(p.shape[0], dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in np.nonzero(p[v] > 0)[0]:
            if not seen[w]:
                seen[w] = True
                queue.append(w)
    return seen


def _period(p: np.ndarray) -> int:
    # BFS levels; the period of an irreducible chain is the gcd of
    # level[u] + 1 - level[v] over all support edges u -> v
    m = p.shape[0]
    level = np.full(m, -1)
    level[0] = 0
    queue = deque([0])
    g = 0
    while queue:
        v = queue.popleft()
        for w in np.nonzero(p[v] > 0)[0]:
            if level[w] < 0:
                level[w] = level[v] + 1
                queue.append(w)
            else:
                g = math.gcd(g, int(level[v] + 1 - level[w]))
    return g


def stationary_distribution(c: MarkovChain | np.ndarray) -> np.ndarray:
    """Unique stationary law of an irreducible aperiodic chain.

    Raises ChainError for reducible or periodic chains, whose limit
    ``lim P{m_k = u}`` is not unique or does not exist.
    """
    p = c.transition if isinstance(c, MarkovChain) else np.asarray(c, dtype=float)
    m = p.shape[0]
    if m == 1:
        return np.ones(1)
    for u in range(m):
        if not _reachable(p, u).all():
            raise ChainError(f"chain is reducible: not every state is reachable from state {u}; "
                             "restrict the topology set to one communicating class")
    d = _period(p)
    if d != 1:
        raise ChainError(f"chain is periodic with period {d}; add self-transitions to make it aperiodic")

    a = np.vstack([p.T - np.eye(m), np.ones((1, m))])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    if not np.all(np.isfinite(pi)) or np.max(np.abs(pi @ p - pi)) > 1e-10:
        pi = np.full(m, 1.0 / m)
        for _ in range(100_000):
            nxt = pi @ p
            if np.max(np.abs(nxt - pi)) <= 1e-14:
                pi = nxt
                break
            pi = nxt
        pi /= pi.sum()
        if np.max(np.abs(pi @ p - pi)) > 1e-10:
            raise FloatingPointError("stationary distribution solver did not converge")
    return pi


def state_probabilities(chain: MarkovChain, horizon: int) -> np.ndarray:
    """``p_{u,k}`` for ``k = 1..horizon`` via ``p_{k+1} = p_k P``, shape ``(horizon, M)``."""
    out = np.empty((horizon, chain.size))
    cur = chain.initial.copy()
    for k in range(horizon):
        out[k] = cur
        cur = cur @ chain.transition
    return out


@dataclass
class SwitchingGraphProcess:
    """Single-owner sampler of the topology sequence ``G_1, G_2, ...``.

    ``current_state`` is the index of the topology in force.  When it is left
    as ``None`` the first :meth:`sample_step` draws from the chain's initial
    distribution.
    """

    topologies: TopologySet
    chain: MarkovChain
    current_state: int | None = None
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.chain.size != self.topologies.size:
            raise ValueError(f"chain has {self.chain.size} states but there are "
                             f"{self.topologies.size} topologies")
        if self.current_state is not None and not 0 <= self.current_state < self.chain.size:
            raise ValueError(f"invalid state {self.current_state}")
        self._cum = _cumulative_rows(self.chain.transition)

    def sample_step(self, rng: np.random.Generator) -> int:
        u = rng.random()
        if self.current_state is None:
            row = _cumulative_rows(self.chain.initial[None, :])[0]
        else:
            row = self._cum[self.current_state]
        self.current_state = min(int(np.sum(row <= u)), self.chain.size - 1)
        return self.current_state

    def adjacency(self) -> np.ndarray:
        return self.topologies.adjacencies[self.current_state]


def _cumulative_rows(p: np.ndarray) -> np.ndarray:
    cum = np.cumsum(p, axis=1)
    cum[:, -1] = 1.0
    return cum


def edge_probability_series(p: SwitchingGraphProcess, i: int, j: int, horizon: int) -> np.ndarray:
    """``q_{ij,k} = P{(i,j) in E_k}`` for ``k = 1..horizon``."""
    members = p.topologies.containing(i, j)
    if not members:
        raise ValueError(f"({i}, {j}) is not an edge of the union graph")
    probs = state_probabilities(p.chain, horizon)
    return probs[:, members].sum(axis=1)


# -- batched link models used by the simulator ------------------------------

class TopologyChainLinks:
    """Vectorised view of a :class:`SwitchingGraphProcess` for many runs.

    State is one topology index per run.  Each step consumes one uniform per run.
    """

    uniforms_per_step = 1

    def __init__(self, topologies: TopologySet, chain: MarkovChain):
        if chain.size != topologies.size:
            raise ValueError("chain and topology set sizes differ")
        self.topologies = topologies
        self.chain = chain
        self.vertex_count = topologies.vertex_count
        self.edges = topologies.union_edges()
        self._w = topologies.edge_weights()
        self._cum = _cumulative_rows(chain.transition)
        self._cum0 = _cumulative_rows(chain.initial[None, :])[0]

    def advance(self, state, u: np.ndarray):
        u = u[:, 0]
        if state is None:
            nxt = np.sum(self._cum0[None, :] <= u[:, None], axis=1)
        else:
            nxt = np.sum(self._cum[state] <= u[:, None], axis=1)
        nxt = np.minimum(nxt, self.chain.size - 1)
        return nxt, self._w[nxt]

    def stationary_edge_probability(self) -> np.ndarray:
        pi = stationary_distribution(self.chain)
        return pi @ (self._w > 0)

    def edge_probability_series(self, horizon: int) -> np.ndarray:
        """``q`` for every union edge, shape ``(horizon, E)``."""
        return state_probabilities(self.chain, horizon) @ (self._w > 0)

    def union_connected(self) -> bool:
        return validate_union_connected(self.topologies)


class IndependentEdgeLinks:
    """Every union edge is an independent on/off two-state Markov chain.

    Equivalent in law to one global chain over the ``2^E`` edge subsets,
    without enumerating them.
    """

    def __init__(self, vertex_count: int, edges, p_initial: float = 0.5, p_stay_on: float = 0.7,
                 p_stay_off: float = 0.7, weight: float = 1.0):
        for name, v in (("p_initial", p_initial), ("p_stay_on", p_stay_on), ("p_stay_off", p_stay_off)):
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must be a probability")
        self.vertex_count = vertex_count
        self.edges = np.asarray(edges, dtype=int).reshape(-1, 2)
        self.p_initial = p_initial
        self.p_stay_on = p_stay_on
        self.p_stay_off = p_stay_off
        self.weight = weight
        self.uniforms_per_step = len(self.edges)

    @classmethod
    def complete(cls, vertex_count: int, **kw) -> "IndependentEdgeLinks":
        iu, ju = np.triu_indices(vertex_count, k=1)
        return cls(vertex_count, np.stack([iu, ju], axis=1), **kw)

    def advance(self, state, u: np.ndarray):
        if state is None:
            nxt = u < self.p_initial
        else:
            nxt = np.where(state, u < self.p_stay_on, u >= self.p_stay_off)
        return nxt, nxt * self.weight

    def stationary_edge_probability(self) -> np.ndarray:
        leave_on, leave_off = 1 - self.p_stay_on, 1 - self.p_stay_off
        if leave_on + leave_off == 0:
            q = self.p_initial
        else:
            q = leave_off / (leave_on + leave_off)
        return np.full(len(self.edges), q)

    def edge_probability_series(self, horizon: int) -> np.ndarray:
        q = np.empty(horizon)
        cur = self.p_initial
        for k in range(horizon):
            q[k] = cur
            cur = cur * self.p_stay_on + (1 - cur) * (1 - self.p_stay_off)
        return np.repeat(q[:, None], len(self.edges), axis=1)

    def union_connected(self) -> bool:
        adj = np.zeros((self.vertex_count, self.vertex_count))
        adj[self.edges[:, 0], self.edges[:, 1]] = adj[self.edges[:, 1], self.edges[:, 0]] = 1
        return _connected(adj)
