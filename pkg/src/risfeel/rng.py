"""Hierarchical, named random substreams.

Every source of randomness in the simulator is derived from a root seed
plus a path of string/int labels, so reruns with the same seed are
bit-identical regardless of execution order.
"""

from __future__ import annotations

import numpy as np


def _label_to_int(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("stream labels must be nonnegative")
        return int(label)
    return int.from_bytes(str(label).encode("utf-8"), "big")


def substream(root_seed: int, *labels) -> np.random.Generator:
    """Generator for the substream identified by (root_seed, *labels)."""
    entropy = [int(root_seed)] + [_label_to_int(x) for x in labels]
    return np.random.default_rng(np.random.SeedSequence(entropy))
