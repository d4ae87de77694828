"""Counter-based random streams.

Noise for trial ``draw`` of stream ``stream`` under key ``key`` is a pure
function of those three integers, so trials can run in any order and on any
number of workers without changing a single bit of output.

The generator is Philox4x32-10 (Salmon et al., "Parallel random numbers: as
easy as 1, 2, 3"), vectorized over counters with numpy. Gaussians come from
the Box-Muller transform applied to 53-bit uniforms.

Counter layout per draw: ``(block, draw_lo, draw_hi, stream)``, where
``block`` enumerates 4-word output blocks within one draw. Each block yields
two uniforms and therefore two normals.
"""
from __future__ import annotations

import hashlib

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
ROUNDS = 10


def philox4x32(counter: np.ndarray, key: tuple[int, int], rounds: int = ROUNDS) -> np.ndarray:
    """Apply the Philox4x32 bijection to an array of counters.

    ``counter`` has shape ``(..., 4)`` with uint32 words; ``key`` is a pair of
    32-bit words. Returns an array of the same shape.
    """
    ctr = np.asarray(counter, dtype=np.uint32)
    c0, c1, c2, c3 = (ctr[..., i].astype(np.uint64) for i in range(4))
    k0 = np.uint32(key[0] & 0xFFFFFFFF)
    k1 = np.uint32(key[1] & 0xFFFFFFFF)
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = np.uint32(k0 + _W0)
                k1 = np.uint32(k1 + _W1)
            p0 = _M0 * c0
            p1 = _M1 * c2
            hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
            hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
            c0, c1, c2, c3 = (
                hi1 ^ c1 ^ np.uint64(k0),
                lo1,
                hi0 ^ c3 ^ np.uint64(k1),
                lo0,
            )
    return np.stack([c0, c1, c2, c3], axis=-1).astype(np.uint32)


def derive_key(*parts: int) -> int:
    """Hash a tuple of integers into a 64-bit key (blake2b)."""
    payload = ",".join(str(int(p)) for p in parts).encode()
    digest = hashlib.blake2b(payload, digest_size=8, person=b"weaknoise").digest()
    return int.from_bytes(digest, "little")


def uniforms(key: int, stream: int, draws, count: int) -> np.ndarray:
    """Uniforms on [0, 1) with 53-bit resolution, shape ``(len(draws), count)``.

    ``count`` is rounded up internally to a multiple of 2; the excess is cut.
    """
    draws = np.atleast_1d(np.asarray(draws, dtype=np.uint64))
    blocks = (count + 1) // 2
    ctr = np.empty((draws.size, blocks, 4), dtype=np.uint32)
    ctr[..., 0] = np.arange(blocks, dtype=np.uint32)[None, :]
    ctr[..., 1] = (draws & _MASK32).astype(np.uint32)[:, None]
    ctr[..., 2] = (draws >> _SHIFT32).astype(np.uint32)[:, None]
    ctr[..., 3] = np.uint32(stream & 0xFFFFFFFF)
    out = philox4x32(ctr, (key & 0xFFFFFFFF, (key >> 32) & 0xFFFFFFFF)).astype(np.uint64)
    # two 53-bit uniforms per block: (w0>>5, w1>>6) and (w2>>5, w3>>6)
    a = (out[..., 0::2] >> np.uint64(5)) * np.uint64(1 << 26) + (out[..., 1::2] >> np.uint64(6))
    u = a.astype(np.float64) * (1.0 / 9007199254740992.0)
    return u.reshape(draws.size, 2 * blocks)[:, :count]


def standard_normals(key: int, stream: int, draws, count: int) -> np.ndarray:
    """Standard normal samples of shape ``(len(draws), count)``.

    Box-Muller on the uniform pairs of each block. ``1 - u`` keeps the log
    argument in (0, 1].
    """
    draws = np.atleast_1d(np.asarray(draws, dtype=np.uint64))
    blocks = (count + 1) // 2
    u = uniforms(key, stream, draws, 2 * blocks).reshape(draws.size, blocks, 2)
    radius = np.sqrt(-2.0 * np.log1p(-u[..., 0]))
    angle = 2.0 * np.pi * u[..., 1]
    z = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)
    return z.reshape(draws.size, 2 * blocks)[:, :count]
