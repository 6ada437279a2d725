"""Deterministic seed derivation for scheduling-independent reproducibility."""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Map a tuple of labels to a stable 64-bit integer seed.

    SHA-256 over a canonical string encoding, so the result does not depend
    on the process, the platform, or PYTHONHASHSEED.  Distinct label tuples
    give independent streams for all practical purposes.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
