# services/rng_service.py

"""
Reproducible random streams.

Every random draw in the lab comes from a Philox counter-based generator
keyed by (seed, task_id), where

    task_id = (purpose << 32) | index

so independent tasks get independent streams no matter how work is split
or scheduled.
"""

import enum
import logging

import numpy as np

from config import settings

logger = logging.getLogger("rng_service")

UINT64_MASK = (1 << 64) - 1


class Purpose(enum.IntEnum):
    """Stream families; the value becomes the high word of task_id"""
    MC_BATCH = 1
    KERNEL_FIBER = 2
    ORBIT_RESTART = 3
    ROTATION_SEARCH = 4
    RANDOM_TUPLE = 5


def task_id(purpose: Purpose, index: int = 0) -> int:
    if not 0 <= index < (1 << 32):
        raise ValueError(f"stream index {index} does not fit in 32 bits")
    return (int(purpose) << 32) | index


def resolve_seed(seed: int = None) -> int:
    return settings.DEFAULT_SEED if seed is None else int(seed)


def stream(seed: int, purpose: Purpose, index: int = 0) -> np.random.Generator:
    """Generator for one task"""
    key = np.array([resolve_seed(seed) & UINT64_MASK, task_id(purpose, index)], dtype=np.uint64)
    logger.debug(f"Opening stream seed={seed} purpose={purpose.name} index={index}")
    return np.random.Generator(np.random.Philox(key=key))
