"""Seed handling.

Every run draws from four independent substreams (graph switching, privacy
noise, observation noise, sensor failures).  A substream is addressed by
``(run_index, purpose)`` through :class:`numpy.random.SeedSequence` spawn keys,
so turning one randomness source off or running the repeats in a different
order never shifts the numbers seen by another source.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass

import numpy as np

PURPOSES = ("graph", "privacy", "observation", "failure")


def fresh_seed() -> int:
    return secrets.randbits(63)


def substream(root_seed: int, run_index: int, purpose: str) -> np.random.Generator:
    code = PURPOSES.index(purpose)
    seq = np.random.SeedSequence(root_seed, spawn_key=(run_index, code))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass
class RunStreams:
    graph: np.random.Generator
    privacy: np.random.Generator
    observation: np.random.Generator
    failure: np.random.Generator

    @classmethod
    def for_run(cls, root_seed: int, run_index: int) -> "RunStreams":
        return cls(*(substream(root_seed, run_index, p) for p in PURPOSES))
