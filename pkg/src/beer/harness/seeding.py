"""Independent RNG streams derived from one root seed by role label."""
from __future__ import annotations

import zlib

import numpy as np

ROLES = ("init", "env", "explore", "replay", "metrics", "eval")


def role_rng(seed: int, role: str) -> np.random.Generator:
    """A generator keyed on ``(seed, crc32(role))``; streams for different roles never overlap."""
    key = zlib.crc32(role.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(key,))))


def streams(seed: int) -> dict[str, np.random.Generator]:
    return {role: role_rng(seed, role) for role in ROLES}
