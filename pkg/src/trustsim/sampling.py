"""Deterministic random streams and bounded sampling primitives.

All randomness in the package flows through RandomStream. A stream is
identified by (seed, path); child streams are derived by hashing, so adding
a draw in one substream never perturbs the values of another. The same
(seed, path) always replays the same sequence.
"""

from __future__ import annotations

import hashlib
import math
from statistics import NormalDist

import numpy as np

from .errors import InvalidBounds

# Rejection attempts before switching to the inverse-CDF fallback.
MAX_REJECTS = 1000


def derive_seed(root_seed, *labels) -> int:
    """Stable 64-bit seed from a root seed and a label path."""
    text = "/".join(str(part) for part in (root_seed, *labels))
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class RandomStream:
    """Hierarchical deterministic random stream.

    The underlying numpy Generator is created lazily and is stateful, so
    repeated draws on one stream advance as usual, while `child` streams
    are statistically independent and order-insensitive.
    """

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, *path):
        self.seed = int(seed)
        self.path = tuple(str(part) for part in path)
        self._gen = None

    def child(self, *labels) -> "RandomStream":
        return RandomStream(self.seed, *self.path, *labels)

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = np.random.default_rng(derive_seed(self.seed, *self.path))
        return self._gen

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, path={'/'.join(self.path)!r})"


def truncated_gaussian(mean, sd, lo, hi, rng: np.random.Generator) -> float:
    """One draw from a Gaussian truncated to [lo, hi].

    Rejection sampling, capped at MAX_REJECTS attempts; extreme truncations
    fall back to inverse-CDF transform sampling. sd == 0 degenerates to
    clamp(mean, lo, hi).
    """
    if not lo < hi:
        raise InvalidBounds(f"need lo < hi, got [{lo}, {hi}]")
    if sd < 0:
        raise InvalidBounds(f"sd must be >= 0, got {sd}")
    if sd == 0:
        return float(min(max(mean, lo), hi))
    for _ in range(MAX_REJECTS):
        x = rng.normal(mean, sd)
        if lo <= x <= hi:
            return float(x)
    dist = NormalDist(mean, sd)
    c_lo, c_hi = dist.cdf(lo), dist.cdf(hi)
    u = rng.random()
    p = c_lo + u * (c_hi - c_lo)
    # far-tail intervals can collapse to cdf values of exactly 0 or 1
    p = min(max(p, math.nextafter(0.0, 1.0)), math.nextafter(1.0, 0.0))
    x = dist.inv_cdf(p)
    return float(min(max(x, lo), hi))


def categorical(probs, rng: np.random.Generator) -> int:
    """Index sampled from an unnormalized non-negative weight vector."""
    weights = np.asarray(probs, dtype=float)
    if weights.ndim != 1 or weights.size == 0:
        raise InvalidBounds("categorical needs a non-empty 1-d weight vector")
    if np.any(weights < 0):
        raise InvalidBounds("categorical weights must be non-negative")
    total = float(weights.sum())
    if total <= 0:
        raise InvalidBounds("categorical weights sum to zero")
    u = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return int(weights.size - 1)  # guards float round-off at the top edge
