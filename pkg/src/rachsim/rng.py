"""Deterministic named random streams.

One master seed fans out into independent generators, one per consumer, so
that adding or removing draws in one part of the simulator never shifts the
sequences seen by another. Equal seed means equal streams, bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

STREAM_NAMES = (
    "placement",
    "arrivals",
    "preamble",
    "detection",
    "harq",
    "backoff",
)


@dataclass
class RandomSource:
    """Bundle of independent per-purpose generators."""

    placement: np.random.Generator
    arrivals: np.random.Generator
    preamble: np.random.Generator
    detection: np.random.Generator
    harq: np.random.Generator
    backoff: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RandomSource":
        children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
        gens = {
            name: np.random.Generator(np.random.PCG64(child))
            for name, child in zip(STREAM_NAMES, children)
        }
        return cls(**gens)

    def replaced(self, **streams) -> "RandomSource":
        """Copy with some streams substituted (testing hook)."""
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        unknown = set(streams) - set(current)
        if unknown:
            raise ValueError(f"unknown stream names: {sorted(unknown)}")
        current.update(streams)
        return RandomSource(**current)
