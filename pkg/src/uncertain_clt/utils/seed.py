"""Random seed management.

Every Monte Carlo run derives its generators from one root seed through
``numpy.random.SeedSequence.spawn``, one counter-based Philox stream per
chunk of paths, so results do not depend on how chunks are scheduled.
"""

import numpy as np

SEED_BITS = 63


def get_or_generate_seed(seed: int | None = None) -> int:
    """Root seed for a run: ``seed`` itself, or fresh OS entropy folded to 63 bits.

    A generated seed is an ordinary int, so it can be written to the run's
    report and passed back with ``--seed`` to repeat the run.
    """
    if seed is not None:
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}")
        return seed
    entropy = np.random.SeedSequence().entropy
    return int(entropy) % (1 << SEED_BITS)


def spawn_generators(seed: int, count: int) -> list[np.random.Generator]:
    """Independent Philox generators, one per chunk, derived from ``seed``.

    Args:
        seed: Root seed
        count: Number of streams

    Returns:
        Generators in chunk order
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]
