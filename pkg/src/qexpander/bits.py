"""Bit sets stored as Python ints.

Bit ``i`` of the integer is set when element ``i`` belongs to the set.  XOR is
symmetric difference, AND is intersection, ``int.bit_count`` is the weight.
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np


def from_indices(indices: Iterable[int]) -> int:
    out = 0
    for i in indices:
        out |= 1 << int(i)
    return out


def to_indices(bits: int) -> list[int]:
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return out


def iter_indices(bits: int) -> Iterator[int]:
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


def weight(bits: int) -> int:
    return bits.bit_count()


def from_bool_array(arr) -> int:
    """Pack a 0/1 vector into an int (element 0 is the least significant bit)."""
    arr = np.asarray(arr, dtype=bool)
    if arr.size == 0:
        return 0
    return int.from_bytes(np.packbits(arr, bitorder="little").tobytes(), "little")


def to_bool_array(bits: int, n: int) -> np.ndarray:
    nbytes = (n + 7) // 8
    raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def subset_of(a: int, b: int) -> bool:
    return a & ~b == 0
