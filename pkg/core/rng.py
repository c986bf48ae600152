"""Seed derivation and counter-based random streams.

All randomness in the package flows through these helpers so that a
(seed, path) pair fully determines a stream, independent of thread count
or the order in which work items run.
"""
import numpy as np

# Philox counter word reserved for the replicate index; word 0 advances as
# numbers are drawn, so streams of different replicates never overlap.
_REPLICATE_WORD = 2


def child_seed(base_seed: int, *parts: int) -> int:
    """A 63-bit seed deterministically derived from base_seed and parts."""
    state = np.random.SeedSequence([int(base_seed), *map(int, parts)]).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))


def child_rng(base_seed: int, *parts: int) -> np.random.Generator:
    """A Generator keyed by base_seed and parts."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(base_seed), *map(int, parts)])))


def _philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(int(seed)).generate_state(2, np.uint64)


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Stream for one bootstrap replicate; the k-th block uses the k-th normal drawn."""
    counter = np.zeros(4, dtype=np.uint64)
    counter[_REPLICATE_WORD] = np.uint64(replicate)
    return np.random.Generator(np.random.Philox(key=_philox_key(seed), counter=counter))


def replicate_multipliers(seed: int, replicates: range, m: int) -> np.ndarray:
    """Standard normal multipliers, one row of length m per replicate index."""
    out = np.empty((len(replicates), m), dtype=float)
    for row, k in enumerate(replicates):
        out[row] = replicate_rng(seed, k).standard_normal(m)
    return out
