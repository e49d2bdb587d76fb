"""Packed-bit and subset-lattice kernels.

Subjects live in 64-bit word bitmasks (bit i of word w = subject 64*w + i);
feature subsets live in plain integers (bit j = feature j). The lattice
transforms operate in place on arrays whose last axis is indexed by the
subset integer, giving the d * 2^(d-1) add schedule.
"""

from __future__ import annotations

import numpy as np

WORD = 64


def pack_bool(mask: np.ndarray) -> np.ndarray:
    """Pack a boolean vector into little-endian uint64 words."""
    mask = np.asarray(mask, dtype=bool)
    packed = np.packbits(mask, bitorder="little")
    pad = (-len(packed)) % 8
    if pad:
        packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
    return packed.view(np.uint64)


def unpack_words(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pack_bool` for a vector of n subjects."""
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")
    return bits[:n].astype(bool)


def popcount_words(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


def word_count(n: int) -> int:
    return (n + WORD - 1) // WORD


def all_ones_words(n: int) -> np.ndarray:
    words = np.full(word_count(n), np.uint64(0xFFFFFFFFFFFFFFFF))
    tail = n % WORD
    if tail:
        words[-1] = np.uint64((1 << tail) - 1)
    return words


def subset_sizes(d: int) -> np.ndarray:
    """Popcount of every subset integer below 2^d."""
    return np.bitwise_count(np.arange(1 << d, dtype=np.uint32)).astype(np.int64)


def _views(table: np.ndarray, d: int, j: int):
    if not table.flags.c_contiguous:
        raise ValueError("lattice transforms need a C-contiguous table")
    lead = table.shape[:-1]
    v = table.reshape(*lead, 1 << (d - 1 - j), 2, 1 << j)
    return v[..., 0, :], v[..., 1, :]


def superset_sum_inplace(table: np.ndarray, d: int) -> np.ndarray:
    """table[u] <- sum over supersets w of u of table[w], along the last axis."""
    for j in range(d):
        lo, hi = _views(table, d, j)
        lo += hi
    return table


def subset_sum_inplace(table: np.ndarray, d: int) -> np.ndarray:
    """table[u] <- sum over subsets v of u of table[v] (zeta transform)."""
    for j in range(d):
        lo, hi = _views(table, d, j)
        hi += lo
    return table


def mobius_inplace(table: np.ndarray, d: int) -> np.ndarray:
    """Invert :func:`subset_sum_inplace`: signed inclusion-exclusion over subsets."""
    for j in range(d):
        lo, hi = _views(table, d, j)
        hi -= lo
    return table
