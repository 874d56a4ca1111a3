# Utility functions for censornet
import os

import numpy as np

from .errors import InvalidConfigError

COEFFICIENTS = ("mu", "gamma", "beta", "delta")

# Independent streams used by one replication, in spawn-key order.
STAGES = ("traits", "gregariousness", "network", "evolve", "censor")

SEED_LIMIT = 2**64


def derive_stream(seed: int, *key: int) -> np.random.Generator:
    """
    Returns a Philox (counter-based) generator keyed by ``seed`` and ``key``.

    The same (seed, key) always yields the same stream, regardless of how many
    other streams were derived before it or in which process.
    """
    if not 0 <= int(seed) < SEED_LIMIT:
        raise InvalidConfigError(f"Seed {seed} is not a 64-bit unsigned integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def stage_streams(seed: int) -> dict[str, np.random.Generator]:
    "One independent stream per replication stage"
    return {name: derive_stream(seed, i) for i, name in enumerate(STAGES)}


def draw_seed(rng: np.random.Generator) -> int:
    "Draws a fresh 64-bit unsigned seed from ``rng``."
    return int(rng.integers(0, SEED_LIMIT, dtype=np.uint64))


def round_half_away(x: np.ndarray | float) -> np.ndarray:
    """
    Rounds half away from zero, so 0.5 -> 1 and 2.5 -> 3 (numpy's ``round``
    rounds half to even).
    """
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def thread_count() -> int:
    "Worker count from CENSORNET_THREADS, defaulting to a single worker."
    raw = os.environ.get("CENSORNET_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError as e:
        raise InvalidConfigError(
            f"CENSORNET_THREADS must be a positive integer, got {raw!r}"
        ) from e
    if threads < 1:
        raise InvalidConfigError(
            f"CENSORNET_THREADS must be a positive integer, got {raw!r}"
        )
    return threads
