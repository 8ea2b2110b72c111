"""Stable seed derivation and the portable random generator.

All randomness in the package flows from :func:`make_rng`, a numpy ``PCG64``
bit generator (PCG-XSL-RR 128/64, O'Neill 2014). Seeds for individual runs are
derived with :func:`derive_seed`, which hashes its parts with BLAKE2b so the
value is independent of Python's per-process hash randomization and can be
reproduced in any language that has BLAKE2b.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _canonical(part: object) -> str:
    if isinstance(part, float):
        # repr of a float round-trips exactly; -0.0 and 0.0 are folded
        return repr(part + 0.0)
    return str(part)


def derive_seed(*parts: object) -> int:
    """Hash ``parts`` into an unsigned 64-bit seed.

    The parts are rendered with ``str`` (``repr`` for floats), joined by
    ``"|"`` and hashed with an 8-byte BLAKE2b digest read little-endian.
    """
    text = "|".join(_canonical(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & _MASK64


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(seed & _MASK64))
