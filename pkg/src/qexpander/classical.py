"""Classical linear codes over GF(2) described by a factor graph.

Matrix rows are packed into Python ints, bit ``j`` of row ``i`` being entry
``H[i, j]``.  Columns are materialised on demand.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from qexpander import bits
from qexpander.errors import BudgetExceeded, DimensionMismatch, DomainError
from qexpander.graphs import BipartiteGraph


@dataclass(frozen=True)
class ParityMatrix:
    n_rows: int
    n_cols: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.n_rows:
            raise DimensionMismatch("row count mismatch")
        limit = 1 << self.n_cols
        if any(r < 0 or r >= limit for r in self.rows):
            raise DimensionMismatch("row has bits beyond n_cols")

    @classmethod
    def from_dense(cls, h) -> "ParityMatrix":
        h = np.atleast_2d(np.asarray(h, dtype=np.uint8) % 2)
        return cls(h.shape[0], h.shape[1], tuple(bits.from_bool_array(r) for r in h))

    @classmethod
    def from_graph(cls, g: BipartiteGraph) -> "ParityMatrix":
        """Rows are right vertices (checks), columns are left vertices (bits)."""
        return cls(g.n_right, g.n_left, tuple(bits.from_indices(a) for a in g.adj_right))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            out[i] = bits.to_bool_array(r, self.n_cols)
        return out

    @cached_property
    def columns(self) -> tuple[int, ...]:
        cols = [0] * self.n_cols
        for i, r in enumerate(self.rows):
            for j in bits.iter_indices(r):
                cols[j] |= 1 << i
        return tuple(cols)

    @property
    def row_weights(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    @property
    def col_weights(self) -> list[int]:
        return [c.bit_count() for c in self.columns]

    def transpose(self) -> "ParityMatrix":
        return ParityMatrix(self.n_cols, self.n_rows, self.columns)

    def apply(self, x: int) -> int:
        """``H x`` as a bit set over the rows."""
        out = 0
        for j in bits.iter_indices(x):
            out ^= self.columns[j]
        return out

    @cached_property
    def row_basis(self) -> "ReducedBasis":
        return ReducedBasis.from_vectors(self.rows)

    @cached_property
    def column_basis(self) -> "ReducedBasis":
        return ReducedBasis.from_vectors(self.columns)

    def dumps(self) -> str:
        lines = [f"H {self.n_rows} {self.n_cols}"]
        for r in self.rows:
            lines.append("".join("1" if (r >> j) & 1 else "0" for j in range(self.n_cols)))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ParityMatrix":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        head = lines[0].split()
        if head[0] != "H":
            raise DomainError("parity matrix file must start with 'H rows cols'")
        n_rows, n_cols = int(head[1]), int(head[2])
        body = lines[1:]
        if len(body) != n_rows or any(len(b) != n_cols for b in body):
            raise DimensionMismatch("matrix body does not match header")
        return cls(n_rows, n_cols, tuple(int(b[::-1], 2) if b else 0 for b in body))

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def read(cls, path) -> "ParityMatrix":
        return cls.loads(Path(path).read_text())


@dataclass(frozen=True)
class ReducedBasis:
    """Echelon basis keyed by pivot bit; supports membership and reduction."""

    pivots: dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_vectors(cls, vectors: Iterable[int]) -> "ReducedBasis":
        pivots: dict[int, int] = {}
        for v in vectors:
            v = _reduce(v, pivots)
            if v:
                pivots[v.bit_length() - 1] = v
        return cls(pivots)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, v: int) -> int:
        return _reduce(v, self.pivots)

    def contains(self, v: int) -> bool:
        return self.reduce(v) == 0


def _reduce(v: int, pivots: dict[int, int]) -> int:
    # each pivot vector has its key as leading bit, so one top-down pass suffices
    pos = v.bit_length()
    while True:
        rest = v & ((1 << pos) - 1)
        if not rest:
            return v
        top = rest.bit_length() - 1
        p = pivots.get(top)
        if p is not None:
            v ^= p
        pos = top


def rank_gf2(m: ParityMatrix | Iterable[int]) -> int:
    rows = m.rows if isinstance(m, ParityMatrix) else m
    return ReducedBasis.from_vectors(rows).rank


def kernel_basis(m: ParityMatrix) -> list[int]:
    """Basis of ``{x : H x = 0}`` via column elimination with tracking."""
    pivots: dict[int, tuple[int, int]] = {}
    kernel = []
    for j, col in enumerate(m.columns):
        combo = 1 << j
        v = col
        while v:
            top = v.bit_length() - 1
            if top in pivots:
                pv, pc = pivots[top]
                v ^= pv
                combo ^= pc
            else:
                pivots[top] = (v, combo)
                break
        if v == 0:
            kernel.append(combo)
    return kernel


@dataclass(frozen=True)
class ClassicalCode:
    """Factor graph view of a classical code: left = bits, right = checks."""

    graph: BipartiteGraph

    @cached_property
    def matrix(self) -> ParityMatrix:
        return ParityMatrix.from_graph(self.graph)

    @cached_property
    def column_masks(self) -> tuple[int, ...]:
        return tuple(bits.from_indices(a) for a in self.graph.adj_left)

    @property
    def n_bits(self) -> int:
        return self.graph.n_left

    @property
    def n_checks(self) -> int:
        return self.graph.n_right


def syndrome(code: ClassicalCode | ParityMatrix, e: int) -> int:
    cols = code.column_masks if isinstance(code, ClassicalCode) else code.columns
    out = 0
    for v in bits.iter_indices(e):
        out ^= cols[v]
    return out


@dataclass
class BitFlipResult:
    estimate: int
    weights: list[int]
    flips: list[int]
    outcome: str  # "converged" | "stalled" | "iteration_cap"

    @property
    def converged(self) -> bool:
        return self.outcome == "converged"


def bitflip_decode(code: ClassicalCode, sigma: int, max_iters: Optional[int] = None) -> BitFlipResult:
    """Sweep bits in ascending order, flipping any bit that lowers the syndrome weight.

    The sweep restarts from bit 0 after each flip.  A nonzero residual with no
    improving bit is reported as ``stalled`` rather than raised.
    """
    cols = code.column_masks
    if max_iters is None:
        max_iters = sigma.bit_count() + 1
    est = 0
    weights = [sigma.bit_count()]
    flips: list[int] = []
    while sigma:
        if len(flips) >= max_iters:
            return BitFlipResult(est, weights, flips, "iteration_cap")
        for v, col in enumerate(cols):
            if 2 * (col & sigma).bit_count() > col.bit_count():
                sigma ^= col
                est ^= 1 << v
                flips.append(v)
                weights.append(sigma.bit_count())
                break
        else:
            return BitFlipResult(est, weights, flips, "stalled")
    return BitFlipResult(est, weights, flips, "converged")


def min_distance_bruteforce(m: ParityMatrix, weight_cap: int, budget: int = 10**7) -> Optional[int]:
    """Smallest weight of a nonzero ``x`` with ``H x = 0`` and ``|x| <= weight_cap``.

    Returns ``None`` when no such codeword exists below the cap.
    """
    n = m.n_cols
    cols = m.columns
    spent = 0
    for w in range(1, min(weight_cap, n) + 1):
        spent += math.comb(n, w)
        if spent > budget:
            raise BudgetExceeded(f"weight {w} enumeration exceeds budget {budget}")
        for combo in itertools.combinations(range(n), w):
            acc = 0
            for j in combo:
                acc ^= cols[j]
            if acc == 0:
                return w
    return None
