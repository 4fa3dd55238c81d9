"""Counter-based random streams (Philox4x32-10).

Every trajectory of a Monte-Carlo run owns the substream addressed by
``(master_seed, stream_index)``. Draws are a pure function of
``(master_seed, stream_index, draw_index)``, so results do not depend on
how trajectories are chunked or which thread evaluates them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream", "philox4x32", "stream_normals", "derive_seed"]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ROUNDS = 10


def philox4x32(counter, key):
    """Apply the Philox4x32-10 bijection.

    Parameters
    ----------
    counter : array_like of uint32, shape (4, ...)
        Counter words, word 0 first.
    key : array_like of uint32, shape (2, ...)
        Key words; broadcast against the counter.

    Returns
    -------
    ndarray of uint32, shape (4, ...)
    """
    c = np.asarray(counter, dtype=np.uint64) & _MASK32
    k = np.asarray(key, dtype=np.uint64) & _MASK32
    c0, c1, c2, c3 = c[0], c[1], c[2], c[3]
    k0, k1 = k[0], k[1]
    for r in range(_ROUNDS):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack(np.broadcast_arrays(c0, c1, c2, c3)).astype(np.uint32)


def _key_words(master_seed: int):
    seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
    return np.array([seed & 0xFFFFFFFF, seed >> 32], dtype=np.uint64)


def stream_normals(master_seed: int, streams, n_draws: int, first_draw: int = 0):
    """Standard normal draws for many streams at once.

    Row ``i`` holds draws ``first_draw .. first_draw + n_draws - 1`` of stream
    ``streams[i]``. Each Philox block yields two normals via Box-Muller, so
    ``first_draw`` must be even.

    Returns
    -------
    ndarray of float64, shape (len(streams), n_draws)
    """
    if first_draw % 2:
        raise ValueError("first_draw must be even")
    streams = np.atleast_1d(np.asarray(streams, dtype=np.uint64))
    n_blocks = (n_draws + 1) // 2
    if n_blocks == 0 or streams.size == 0:
        return np.zeros((streams.size, n_draws))
    blocks = np.arange(first_draw // 2, first_draw // 2 + n_blocks, dtype=np.uint64)
    ctr0 = np.broadcast_to(blocks[None, :], (streams.size, n_blocks))
    ctr1 = np.zeros_like(ctr0)
    ctr2 = np.broadcast_to((streams & _MASK32)[:, None], ctr0.shape)
    ctr3 = np.broadcast_to((streams >> _SHIFT32)[:, None], ctr0.shape)
    key = _key_words(master_seed).reshape(2, 1, 1)
    w = philox4x32(np.stack([ctr0, ctr1, ctr2, ctr3]), key).astype(np.uint64)
    # 53-bit uniforms on [0, 1)
    u1 = ((w[0] >> np.uint64(5)) * np.uint64(1 << 26) + (w[1] >> np.uint64(6))) * 2.0**-53
    u2 = ((w[2] >> np.uint64(5)) * np.uint64(1 << 26) + (w[3] >> np.uint64(6))) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = 2.0 * np.pi * u2
    out = np.empty((streams.size, 2 * n_blocks))
    out[:, 0::2] = radius * np.cos(angle)
    out[:, 1::2] = radius * np.sin(angle)
    return out[:, :n_draws]


def derive_seed(master_seed: int, *path: int) -> int:
    """Derive a child 64-bit seed from ``master_seed`` and an index path."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class RngStream:
    """Sequential view of one counter-based substream.

    Not safe to share between concurrent consumers; create one per consumer.
    """

    master_seed: int
    stream_index: int
    _next_draw: int = field(default=0, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        if not 0 <= int(self.stream_index) < 2**64:
            raise ValueError("stream_index must fit in 64 bits")

    def normal(self, size: int | None = None):
        """Next ``size`` standard normals (a float when ``size`` is None)."""
        n = 1 if size is None else int(size)
        # keep the cursor block-aligned so every draw index is reproducible
        values = stream_normals(self.master_seed, [self.stream_index], n, self._next_draw)[0]
        self._next_draw += n + (n % 2)
        return float(values[0]) if size is None else values

    def reset(self) -> None:
        self._next_draw = 0
