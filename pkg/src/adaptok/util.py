"""Small shared helpers: worker resolution, digests, float formatting."""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

THREADS_ENV = "ADAPTOK_THREADS"


def resolve_workers(requested: int | None = None) -> int:
    """Effective worker count: requested (or cpu count), capped by ADAPTOK_THREADS."""
    cap = os.environ.get(THREADS_ENV)
    limit = int(cap) if cap else None
    n = requested if requested is not None else (os.cpu_count() or 1)
    if limit is not None:
        n = min(n, limit)
    return max(1, n)


def sha256_file(path, chunk_size: int = 1 << 20) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        while True:
            block = f.read(chunk_size)
            if not block:
                break
            h.update(block)
    return h.hexdigest()


def digest_paths(paths) -> str:
    """Content digest over one or more files, independent of their paths."""
    h = hashlib.sha256()
    for p in sorted(Path(p) for p in paths):
        h.update(sha256_file(p).encode("ascii"))
    return h.hexdigest()[:16]


def fmt_float(x: float) -> str:
    """Serialize with 9 significant digits (round-trips float32 exactly)."""
    return format(x, ".9g")
