"""Hypergraph product of a classical code with itself.

Conventions (recorded in every bundle manifest under ``ordering``):

* the seed matrix ``H`` has one row per right vertex ``b`` (``n_B`` rows) and one
  column per left vertex ``a`` (``n_A`` columns);
* qubits are the ``A²`` block, row-major ``(α, a) -> α n_A + a``, followed by the
  ``B²`` block, ``(b, β) -> n_A² + b n_B + β``;
* rows of ``H_X`` (Z-type generators, the X-syndrome checks) are ``A×B``
  row-major, rows of ``H_Z`` (X-type generators) are ``B×A`` row-major.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from qexpander import bits
from qexpander.classical import ParityMatrix, kernel_basis, rank_gf2
from qexpander.errors import BudgetExceeded, DimensionMismatch, DomainError, InvariantViolation
from qexpander.graphs import (
    BipartiteGraph,
    ExpansionParams,
    Graph,
    four_cycle_count,
    read_graph,
    sample_biregular,
    write_graph,
)

ORDERING = "qubits:A2-rowmajor,B2-rowmajor;HX-rows:AxB;HZ-rows:BxA"
BUNDLE_SCHEMA = 1


@dataclass(frozen=True)
class Side:
    """Everything needed to decode one error type.

    For ``X`` errors the syndrome comes from ``H_X`` and flips are drawn from
    rows of ``H_Z``; the ``Z`` side swaps the two matrices.
    """

    name: str
    checks: ParityMatrix
    generators: ParityMatrix

    @property
    def n_qubits(self) -> int:
        return self.checks.n_cols

    def syndrome(self, e: int) -> int:
        return self.checks.apply(e)

    def equivalent(self, e: int, e_hat: int) -> bool:
        return self.generators.row_basis.contains(e ^ e_hat)

    def reachable(self, sigma: int) -> bool:
        return self.checks.column_basis.contains(sigma)

    @cached_property
    def check_masks(self) -> tuple[int, ...]:
        """Per-qubit bit set of adjacent checks."""
        return self.checks.columns


@dataclass(frozen=True)
class CssCode:
    seed_graph: BipartiteGraph
    h: ParityMatrix
    hx: ParityMatrix
    hz: ParityMatrix
    params: Optional[ExpansionParams] = None
    build_seed: Optional[int] = None

    @property
    def n_a(self) -> int:
        return self.seed_graph.n_left

    @property
    def n_b(self) -> int:
        return self.seed_graph.n_right

    @property
    def d_a(self) -> int:
        return self.seed_graph.d_left

    @property
    def d_b(self) -> int:
        return self.seed_graph.d_right

    @property
    def n(self) -> int:
        return self.hx.n_cols

    def qubit_a(self, alpha: int, a: int) -> int:
        return alpha * self.n_a + a

    def qubit_b(self, b: int, beta: int) -> int:
        return self.n_a * self.n_a + b * self.n_b + beta

    def side(self, name: str) -> Side:
        if name == "X":
            return Side("X", self.hx, self.hz)
        if name == "Z":
            return Side("Z", self.hz, self.hx)
        raise DomainError(f"side must be X or Z, got {name!r}")

    @cached_property
    def rank_hx(self) -> int:
        return rank_gf2(self.hx)

    @cached_property
    def rank_hz(self) -> int:
        return rank_gf2(self.hz)

    @cached_property
    def k(self) -> int:
        return self.n - self.rank_hx - self.rank_hz

    @cached_property
    def rank_h(self) -> int:
        return rank_gf2(self.h)

    @property
    def code_id(self) -> str:
        s = "x" if self.build_seed is None else str(self.build_seed)
        return f"hgp-{self.n_a}x{self.n_b}-d{self.d_a}.{self.d_b}-s{s}"


def hypergraph_product(g: BipartiteGraph, params: Optional[ExpansionParams] = None, build_seed=None) -> CssCode:
    """``H_X = (I ⊗ H, Hᵀ ⊗ I)`` and ``H_Z = (H ⊗ I, I ⊗ Hᵀ)`` for ``H`` read off ``g``."""
    h_dense = g.to_matrix()
    n_b, n_a = h_dense.shape
    if n_a == 0 or n_b == 0:
        raise DimensionMismatch("seed graph has an empty side")
    hx = np.hstack([np.kron(np.eye(n_a, dtype=np.uint8), h_dense), np.kron(h_dense.T, np.eye(n_b, dtype=np.uint8))])
    hz = np.hstack([np.kron(h_dense, np.eye(n_a, dtype=np.uint8)), np.kron(np.eye(n_b, dtype=np.uint8), h_dense.T)])
    if np.any((hx.astype(np.int64) @ hz.T.astype(np.int64)) % 2):
        raise InvariantViolation("H_X H_Z^T != 0")
    code = CssCode(g, ParityMatrix.from_dense(h_dense), ParityMatrix.from_dense(hx), ParityMatrix.from_dense(hz), params, build_seed)
    _audit_weights(code)
    return code


def _audit_weights(code: CssCode) -> None:
    gen_cap = code.d_a + code.d_b
    deg_cap = 2 * max(code.d_a, code.d_b)
    for m in (code.hx, code.hz):
        if max(m.row_weights) > gen_cap:
            raise InvariantViolation("generator weight exceeds d_A + d_B")
    col = np.array(code.hx.col_weights) + np.array(code.hz.col_weights)
    if col.max() > deg_cap:
        raise InvariantViolation("qubit in more than 2 max(d_A, d_B) generators")


def build_code(n_a: int, n_b: int, d_a: int, d_b: int, seed: int, params: Optional[ExpansionParams] = None,
               no_4cycles: bool = False) -> CssCode:
    g = sample_biregular(n_a, n_b, d_a, d_b, seed, no_4cycles=no_4cycles)
    return hypergraph_product(g, params, build_seed=seed)


def adjacency_degree_bound(d_a: int, d_b: int) -> int:
    """Degree bound of the qubit adjacency graph.

    The B² block gives ``d_B² + 2 d_B (d_A - 1)``; the A² block the same with
    the degrees swapped.  The first dominates whenever ``d_B >= d_A``.
    """
    return max(d_b * d_b + 2 * d_b * (d_a - 1), d_a * d_a + 2 * d_a * (d_b - 1))


def adjacency_graph(code: CssCode) -> Graph:
    """Qubits joined when they share an X-type or Z-type generator."""
    adj: list[set[int]] = [set() for _ in range(code.n)]
    for m in (code.hx, code.hz):
        for row in m.rows:
            support = bits.to_indices(row)
            for q in support:
                adj[q].update(support)
    for q in range(code.n):
        adj[q].discard(q)
    return Graph(code.n, tuple(tuple(sorted(a)) for a in adj), adjacency_degree_bound(code.d_a, code.d_b))


@dataclass(frozen=True)
class CodeParams:
    n: int
    k: int
    n_a: int
    n_b: int
    d_a: int
    d_b: int
    r: Fraction
    w0_bound: int
    t_ssf_bound: int
    d_min_exact: Optional[int] = None
    d_x: Optional[int] = None
    d_z: Optional[int] = None


def w0_bound(d_b: int, gamma_a, gamma_b, n_a: int, n_b: int) -> int:
    return math.floor(Fraction(1, 3 * (1 + d_b)) * min(Fraction(gamma_a) * n_a, Fraction(gamma_b) * n_b))


def t_ssf_value(r, beta, gamma_a, gamma_b, n_a: int, n_b: int) -> Fraction:
    beta = Fraction(beta)
    if beta <= 0:
        raise DomainError("beta must be positive")
    return Fraction(r) * beta / (1 + beta) * min(Fraction(gamma_a) * n_a, Fraction(gamma_b) * n_b)


def code_params(code: CssCode, gamma_a, gamma_b, beta, distance_budget: int = 1 << 16) -> CodeParams:
    r = Fraction(code.d_a, code.d_b)
    t_ssf = math.floor(t_ssf_value(r, beta, gamma_a, gamma_b, code.n_a, code.n_b))
    w0 = w0_bound(code.d_b, gamma_a, gamma_b, code.n_a, code.n_b)
    try:
        d_x = css_distance(code.side("X"), distance_budget)
        d_z = css_distance(code.side("Z"), distance_budget)
        d_min = min(x for x in (d_x, d_z) if x is not None) if (d_x or d_z) else None
    except BudgetExceeded:
        d_x = d_z = d_min = None
    return CodeParams(code.n, code.k, code.n_a, code.n_b, code.d_a, code.d_b, r, w0, t_ssf, d_min, d_x, d_z)


def css_distance(side: Side, budget: int) -> Optional[int]:
    """Minimum weight of a logical error for one side, by walking the kernel of the check matrix.

    Returns ``None`` when every kernel vector is a stabilizer (``k = 0``).
    """
    basis = kernel_basis(side.checks)
    if (1 << len(basis)) > budget:
        raise BudgetExceeded(f"2^{len(basis)} kernel vectors exceed budget {budget}")
    stab = side.generators.row_basis
    best = None
    word = 0
    for i in range(1, 1 << len(basis)):
        # Gray code: flip the basis vector at the lowest set bit of i
        word ^= basis[(i & -i).bit_length() - 1]
        w = word.bit_count()
        if (best is None or w < best) and not stab.contains(word):
            best = w
    return best


# --------------------------------------------------------------------------
# bundles


def save_bundle(code: CssCode, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_graph(code.seed_graph, d / "graph.txt")
    code.hx.write(d / "hx.txt")
    code.hz.write(d / "hz.txt")
    manifest = {
        "schema_version": BUNDLE_SCHEMA,
        "ordering": ORDERING,
        "n_a": code.n_a,
        "n_b": code.n_b,
        "d_a": code.d_a,
        "d_b": code.d_b,
        "n": code.n,
        "k": code.k,
        "rank_h": code.rank_h,
        "rank_deficient": code.rank_h < min(code.n_a, code.n_b),
        "build_seed": code.build_seed,
        "seed_4cycles": four_cycle_count(code.seed_graph),
        "expansion_params": code.params.to_json() if code.params else None,
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return d


def load_bundle(directory) -> CssCode:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    if manifest.get("ordering") != ORDERING:
        raise DomainError(f"bundle ordering {manifest.get('ordering')!r} not supported")
    g = read_graph(d / "graph.txt")
    params = ExpansionParams.from_json(manifest["expansion_params"]) if manifest.get("expansion_params") else None
    code = hypergraph_product(g, params, manifest.get("build_seed"))
    for name, m in (("hx.txt", code.hx), ("hz.txt", code.hz)):
        path = d / name
        if path.exists() and ParityMatrix.read(path) != m:
            raise InvariantViolation(f"{name} does not match the product of graph.txt")
    return code
