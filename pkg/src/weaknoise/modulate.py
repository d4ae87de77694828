"""Modulators ``f_n: [0,1]^d -> R^n`` under the power constraint ``|x|^2 <= nP``.

Three kinds:

* ``quantize_and_code``: quantize each component uniformly with ``M_i``
  levels, map the index tuple to a message, send that message's codeword
  from a random codebook on the power shell.
* ``linear`` (d = 1): ``(2u - 1) sqrt(nP) s`` along a fixed unit vector.
* ``spiral2d`` (d = 1, n = 2): Archimedean spiral inside the disk of
  radius ``sqrt(2P)``, ending on its rim; the textbook threshold-effect
  mapping.

Quantizer cells are reconstructed at their centers ``(j + 1/2) / M``.
"""
from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CodebookCollision, DimensionMismatch, EmptyPath, OutOfRange

KINDS = ("linear", "quantize_and_code", "spiral2d")

CODEBOOK_MAGIC = b"WNCB"
CODEBOOK_VERSION = 1
_HEADER = struct.Struct("<4sIQQdQ")


@dataclass(frozen=True)
class ModulatorSpec:
    kind: str
    n: int
    d: int
    P: float
    levels: tuple[int, ...] | None = None
    seed: int = 0
    turns: float = 1.0  # spiral2d only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown modulator kind {self.kind!r}")
        if self.n < 1 or self.d < 1 or not self.P > 0:
            raise ValueError("need n >= 1, d >= 1, P > 0")
        if self.kind == "quantize_and_code":
            if self.levels is None:
                raise ValueError("quantize_and_code needs levels")
            levels = tuple(int(m) for m in self.levels)
            if len(levels) != self.d:
                raise DimensionMismatch(f"{len(levels)} level counts for d={self.d}")
            if min(levels) < 1:
                raise ValueError("level counts must be positive")
            object.__setattr__(self, "levels", levels)
        elif self.d != 1:
            raise DimensionMismatch(f"{self.kind} modulates a scalar parameter")
        if self.kind == "spiral2d" and self.n != 2:
            raise DimensionMismatch("spiral2d lives in n = 2")

    @property
    def size(self) -> int:
        return math.prod(self.levels) if self.levels else 0


@dataclass(frozen=True, eq=False)
class Codebook:
    codewords: np.ndarray  # (M, n)
    P: float
    seed: int = 0
    levels: tuple[int, ...] | None = None

    def __post_init__(self):
        levels = self.levels if self.levels is not None else (len(self.codewords),)
        if math.prod(levels) != len(self.codewords):
            raise ValueError(f"levels {levels} do not multiply to M={len(self.codewords)}")
        object.__setattr__(self, "levels", tuple(int(m) for m in levels))

    @property
    def M(self) -> int:
        return self.codewords.shape[0]

    @functools.cached_property
    def sqnorms(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.codewords, self.codewords)

    @property
    def n(self) -> int:
        return self.codewords.shape[1]

    def message(self, index_tuple) -> int:
        """Row-major message id of a quantizer index tuple."""
        return int(np.ravel_multi_index(tuple(np.asarray(index_tuple).T), self.levels))

    def messages(self, index_tuples) -> np.ndarray:
        idx = np.asarray(index_tuples).reshape(-1, len(self.levels))
        return np.ravel_multi_index(tuple(idx.T), self.levels)

    def index_tuple(self, message) -> np.ndarray:
        return np.stack(np.unravel_index(message, self.levels), axis=-1)

    def check_distinct(self):
        if np.unique(self.codewords, axis=0).shape[0] != self.M:
            raise CodebookCollision(f"codebook with M={self.M}, n={self.n} has repeated codewords")


@dataclass(frozen=True)
class Quantized:
    index: int
    reconstruction: float


def quantize(u, M: int):
    """Vectorized uniform quantizer: ``(indices, reconstructions)``."""
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)) or np.any(np.isnan(u)):
        raise OutOfRange("parameter components must lie in [0, 1]")
    idx = np.minimum(np.floor(u * M).astype(np.int64), M - 1)
    return idx, (idx + 0.5) / M


def uniform_quantize(u: float, M: int) -> Quantized:
    if M < 1:
        raise ValueError("M must be positive")
    idx, rec = quantize(u, M)
    return Quantized(int(idx), float(rec))


def cell_centers(index_tuples, levels) -> np.ndarray:
    return (np.asarray(index_tuples) + 0.5) / np.asarray(levels, dtype=float)


def build_codebook(M: int, n: int, P: float, seed: int = 0, levels=None) -> Codebook:
    """i.i.d. Gaussian codewords projected onto the sphere of radius sqrt(nP)."""
    if M < 1 or n < 1:
        raise ValueError("need M >= 1 and n >= 1")
    g = np.random.default_rng(seed).standard_normal((M, n))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    return Codebook(g * (math.sqrt(n * P) / norms), P, seed, levels)


def write_codebook(path, cb: Codebook) -> None:
    """Flat little-endian dump: header then M*n float64 values, row-major."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CODEBOOK_MAGIC, CODEBOOK_VERSION, cb.M, cb.n, float(cb.P), int(cb.seed)))
        fh.write(np.ascontiguousarray(cb.codewords, dtype="<f8").tobytes())


def read_codebook(path, levels=None) -> Codebook:
    raw = Path(path).read_bytes()
    magic, version, M, n, P, seed = _HEADER.unpack_from(raw)
    if magic != CODEBOOK_MAGIC:
        raise ValueError(f"not a codebook file (magic {magic!r})")
    if version != CODEBOOK_VERSION:
        raise ValueError(f"unsupported codebook version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * M * n:
        raise ValueError(f"expected {8 * M * n} payload bytes, found {len(body)}")
    words = np.frombuffer(body, dtype="<f8").reshape(M, n).astype(float)
    return Codebook(words, P, seed, levels)


@functools.lru_cache(maxsize=16)
def codebook_for(spec: ModulatorSpec) -> Codebook:
    cb = build_codebook(spec.size, spec.n, spec.P, spec.seed, spec.levels)
    cb.check_distinct()
    return cb


def linear_direction(n: int) -> np.ndarray:
    """Fixed unit vector of the linear modulator."""
    return np.full(n, 1.0 / math.sqrt(n))


def modulate_many(spec: ModulatorSpec, U) -> np.ndarray:
    """Signals for a batch of parameter points, shape ``(k, n)``."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None] if spec.d == 1 else U[None, :]
    if U.shape[-1] != spec.d:
        raise DimensionMismatch(f"points have {U.shape[-1]} components, modulator expects {spec.d}")
    if np.any((U < 0) | (U > 1)):
        raise OutOfRange("parameter components must lie in [0, 1]")
    if spec.kind == "quantize_and_code":
        cb = codebook_for(spec)
        idx = np.stack([quantize(U[:, i], m)[0] for i, m in enumerate(spec.levels)], axis=-1)
        return cb.codewords[cb.messages(idx)]
    u = U[:, 0]
    if spec.kind == "linear":
        amp = (2 * u - 1) * math.sqrt(spec.n * spec.P)
        return amp[:, None] * linear_direction(spec.n)[None, :]
    # r grows linearly from R/(1+turns) to R, so neighbouring turns (and the
    # innermost turn and the origin) are all R/(1+turns) apart
    theta = 2 * math.pi * spec.turns * u
    r = math.sqrt(2 * spec.P) * (1 + spec.turns * u) / (1 + spec.turns)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def modulate(spec: ModulatorSpec, u) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (spec.d,):
        raise DimensionMismatch(f"expected a point with {spec.d} components, got shape {u.shape}")
    return modulate_many(spec, u[None, :])[0]


def message_of(spec: ModulatorSpec, u) -> int:
    """Message sent for ``u`` by a quantize-and-code modulator."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    idx = [int(quantize(u[i], m)[0]) for i, m in enumerate(spec.levels)]
    return codebook_for(spec).message(idx)


def locus_polyline_length(spec: ModulatorSpec, path) -> float:
    """Length of the polyline through ``f_n(path[0]), f_n(path[1]), ...``."""
    path = np.asarray(path, dtype=float)
    if path.ndim == 1:
        path = path[:, None]
    if len(path) < 2:
        raise EmptyPath("a locus path needs at least two points")
    x = modulate_many(spec, path)
    return float(np.linalg.norm(np.diff(x, axis=0), axis=1).sum())
