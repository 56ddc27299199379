"""Bipartite and plain graphs plus the connected-set machinery used everywhere else.

Vertices are dense integers starting at 0.  Vertex sets handed to the fast
paths are Python-int bit sets (see :mod:`qexpander.bits`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from qexpander import bits
from qexpander.errors import (
    BudgetExceeded,
    DimensionMismatch,
    DomainError,
    InvariantViolation,
    SizeOverflow,
    Unsatisfiable,
)

DEFAULT_ENUM_BUDGET = 10**8
BIREGULAR_RETRY_CAP = 10_000


@dataclass(frozen=True)
class BipartiteGraph:
    """Factor graph with ``n_left`` left vertices and ``n_right`` right vertices.

    ``adj_left[u]`` lists the right neighbours of left vertex ``u``, sorted.
    """

    n_left: int
    n_right: int
    d_left: int
    d_right: int
    adj_left: tuple[tuple[int, ...], ...]
    adj_right: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        if len(self.adj_left) != self.n_left:
            raise DimensionMismatch("adj_left has wrong length")
        if not self.adj_right:
            object.__setattr__(self, "adj_right", invert_adjacency(self.adj_left, self.n_right))
        self._check()

    def _check(self):
        for u, nbrs in enumerate(self.adj_left):
            if len(set(nbrs)) != len(nbrs):
                raise InvariantViolation(f"left vertex {u} has repeated neighbours")
            if len(nbrs) > self.d_left:
                raise InvariantViolation(f"left vertex {u} exceeds degree {self.d_left}")
            if any(not 0 <= v < self.n_right for v in nbrs):
                raise DimensionMismatch(f"left vertex {u} has out-of-range neighbour")
        for v, nbrs in enumerate(self.adj_right):
            if len(nbrs) > self.d_right:
                raise InvariantViolation(f"right vertex {v} exceeds degree {self.d_right}")
        if invert_adjacency(self.adj_right, self.n_left) != self.adj_left:
            raise InvariantViolation("adj_left and adj_right describe different edge sets")

    @classmethod
    def from_edges(cls, n_left, n_right, edges, d_left=None, d_right=None):
        adj = [[] for _ in range(n_left)]
        for u, v in edges:
            adj[u].append(v)
        adj_left = tuple(tuple(sorted(a)) for a in adj)
        adj_right = invert_adjacency(adj_left, n_right)
        if d_left is None:
            d_left = max((len(a) for a in adj_left), default=0)
        if d_right is None:
            d_right = max((len(a) for a in adj_right), default=0)
        return cls(n_left, n_right, d_left, d_right, adj_left, adj_right)

    @classmethod
    def from_matrix(cls, h) -> "BipartiteGraph":
        """Graph whose left side indexes the columns of ``h`` and right side its rows."""
        h = np.asarray(h, dtype=np.uint8) % 2
        rows, cols = np.nonzero(h)
        return cls.from_edges(h.shape[1], h.shape[0], zip(cols.tolist(), rows.tolist()))

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adj_left) for v in nbrs]

    @property
    def is_biregular(self) -> bool:
        return all(len(a) == self.d_left for a in self.adj_left) and all(
            len(a) == self.d_right for a in self.adj_right
        )

    def transpose(self) -> "BipartiteGraph":
        return BipartiteGraph(
            self.n_right, self.n_left, self.d_right, self.d_left, self.adj_right, self.adj_left
        )

    def to_matrix(self) -> np.ndarray:
        """Dense 0/1 matrix with rows = right vertices and columns = left vertices."""
        h = np.zeros((self.n_right, self.n_left), dtype=np.uint8)
        for u, v in self.edges:
            h[v, u] = 1
        return h

    def neighbourhood(self, side: str, vertices: Iterable[int]) -> set[int]:
        adj = self.adj_left if side == "left" else self.adj_right
        out: set[int] = set()
        for v in vertices:
            out.update(adj[v])
        return out


def invert_adjacency(adj: Sequence[Sequence[int]], n_other: int) -> tuple[tuple[int, ...], ...]:
    inv: list[list[int]] = [[] for _ in range(n_other)]
    for u, nbrs in enumerate(adj):
        for v in nbrs:
            inv[v].append(u)
    return tuple(tuple(sorted(a)) for a in inv)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with sorted neighbour lists."""

    n: int
    adj: tuple[tuple[int, ...], ...]
    d_max: int = -1

    def __post_init__(self):
        if len(self.adj) != self.n:
            raise DimensionMismatch("adjacency has wrong length")
        deg = max((len(a) for a in self.adj), default=0)
        if self.d_max < 0:
            object.__setattr__(self, "d_max", deg)
        elif deg > self.d_max:
            raise InvariantViolation(f"degree {deg} exceeds declared bound {self.d_max}")
        for u, nbrs in enumerate(self.adj):
            if u in nbrs:
                raise InvariantViolation(f"self-loop at {u}")
            for v in nbrs:
                if u not in self.adj[v]:
                    raise InvariantViolation(f"asymmetric edge {u}-{v}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], d_max: int = -1) -> "Graph":
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                continue
            adj[u].add(v)
            adj[v].add(u)
        return cls(n, tuple(tuple(sorted(a)) for a in adj), d_max)

    @classmethod
    def from_networkx(cls, g) -> "Graph":
        nodes = sorted(g.nodes())
        index = {v: i for i, v in enumerate(nodes)}
        return cls.from_edges(len(nodes), ((index[u], index[v]) for u, v in g.edges()))

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adj) for v in nbrs if u < v]

    @cached_property
    def nbmask(self) -> tuple[int, ...]:
        return tuple(bits.from_indices(a) for a in self.adj)

    def boundary(self, x: int) -> int:
        """Bit set of vertices adjacent to ``x`` but outside it."""
        out = 0
        for v in bits.iter_indices(x):
            out |= self.nbmask[v]
        return out & ~x


@dataclass(frozen=True)
class ExpansionParams:
    gamma_left: Fraction
    delta_left: Fraction
    gamma_right: Fraction
    delta_right: Fraction

    def __post_init__(self):
        for name in ("gamma_left", "delta_left", "gamma_right", "delta_right"):
            value = Fraction(getattr(self, name))
            if not 0 < value <= 1:
                raise DomainError(f"{name}={value} outside (0, 1]")
            object.__setattr__(self, name, value)

    def to_json(self) -> dict:
        return {k: str(getattr(self, k)) for k in ("gamma_left", "delta_left", "gamma_right", "delta_right")}

    @classmethod
    def from_json(cls, data: dict) -> "ExpansionParams":
        return cls(**{k: Fraction(v) for k, v in data.items()})


# --------------------------------------------------------------------------
# sampling


def sample_biregular(n_left: int, n_right: int, d_left: int, d_right: int, seed: int,
                     no_4cycles: bool = False) -> BipartiteGraph:
    """Random simple biregular bipartite graph.

    Stubs are matched uniformly (configuration model).  Repeated edges are then
    removed by random edge switches; the pairing is thrown away and redrawn when
    the switch budget runs out.  With ``no_4cycles`` further switches remove
    every pair of left vertices sharing two right neighbours.
    """
    if n_left * d_left != n_right * d_right:
        raise DimensionMismatch(f"{n_left}*{d_left} != {n_right}*{d_right}")
    if d_left > n_right or d_right > n_left:
        raise DimensionMismatch("degree larger than the opposite side")
    rng = np.random.default_rng(seed)
    n_edges = n_left * d_left
    left_stubs = np.repeat(np.arange(n_left), d_left)
    right_stubs = np.repeat(np.arange(n_right), d_right)
    attempts = 0
    while attempts < BIREGULAR_RETRY_CAP:
        attempts += 1
        right = rng.permutation(right_stubs)
        pairs = list(zip(left_stubs.tolist(), right.tolist()))
        attempts, ok = _repair_multi_edges(pairs, rng, attempts)
        if ok and no_4cycles:
            attempts, ok = _remove_4cycles(pairs, n_left, n_right, rng, attempts)
        if ok:
            return BipartiteGraph.from_edges(n_left, n_right, pairs, d_left, d_right)
    raise Unsatisfiable(f"no simple ({d_left},{d_right}) graph after {BIREGULAR_RETRY_CAP} attempts")


def _repair_multi_edges(pairs, rng, attempts):
    n = len(pairs)
    counts: dict[tuple[int, int], int] = {}
    for e in pairs:
        counts[e] = counts.get(e, 0) + 1
    while attempts < BIREGULAR_RETRY_CAP:
        dup = next((i for i, e in enumerate(pairs) if counts[e] > 1), None)
        if dup is None:
            return attempts, True
        attempts += 1
        j = int(rng.integers(n))
        (u1, v1), (u2, v2) = pairs[dup], pairs[j]
        a, b = (u1, v2), (u2, v1)
        if u1 == u2 or v1 == v2 or a in counts and counts[a] > 0 or b in counts and counts[b] > 0:
            continue
        for e in (pairs[dup], pairs[j]):
            counts[e] -= 1
        pairs[dup], pairs[j] = a, b
        counts[a] = counts.get(a, 0) + 1
        counts[b] = counts.get(b, 0) + 1
    return attempts, False


def _four_cycles(pairs, n_left, n_right) -> tuple[int, np.ndarray]:
    h = np.zeros((n_right, n_left), dtype=np.int64)
    for u, v in pairs:
        h[v, u] = 1
    shared = h.T @ h
    np.fill_diagonal(shared, 0)
    return int((shared * (shared - 1) // 2).sum() // 2), shared


def four_cycle_count(g: "BipartiteGraph") -> int:
    """Number of 4-cycles, i.e. sum over left pairs of C(shared right neighbours, 2)."""
    return _four_cycles(list(g.edges), g.n_left, g.n_right)[0]


def _remove_4cycles(pairs, n_left, n_right, rng, attempts):
    """Greedy edge switches that strictly lower the number of 4-cycles."""
    count, shared = _four_cycles(pairs, n_left, n_right)
    present = set(pairs)
    n = len(pairs)
    while count and attempts < BIREGULAR_RETRY_CAP:
        attempts += 1
        bad_left = np.flatnonzero((shared > 1).any(axis=1))
        u = int(rng.choice(bad_left))
        i = int(rng.choice([k for k, (a, _) in enumerate(pairs) if a == u]))
        j = int(rng.integers(n))
        (u1, v1), (u2, v2) = pairs[i], pairs[j]
        a, b = (u1, v2), (u2, v1)
        if u1 == u2 or v1 == v2 or a in present or b in present:
            continue
        trial = list(pairs)
        trial[i], trial[j] = a, b
        new_count, new_shared = _four_cycles(trial, n_left, n_right)
        if new_count < count:
            present -= {pairs[i], pairs[j]}
            present |= {a, b}
            pairs[:] = trial
            count, shared = new_count, new_shared
    return attempts, count == 0


# --------------------------------------------------------------------------
# expansion


@dataclass(frozen=True)
class AuditReport:
    mode: str
    side: str
    verified_up_to: int
    counterexample: Optional[tuple[int, ...]] = None
    checked: int = 0

    @property
    def expanding(self) -> bool:
        return self.counterexample is None


def _violates(g: BipartiteGraph, side: str, subset, delta: Fraction) -> bool:
    d = g.d_left if side == "left" else g.d_right
    return len(g.neighbourhood(side, subset)) < (1 - delta) * d * len(subset)


def expansion_audit(
    g: BipartiteGraph,
    side: str,
    gamma,
    delta,
    s_max: int,
    mode: str = "exhaustive",
    probes: int = 1000,
    seed: int = 0,
    budget: int = 10**7,
) -> AuditReport:
    """Check ``|Γ(S)| ≥ (1-δ) d |S|`` for subsets ``S`` of one side with ``|S| ≤ s_max``.

    Exhaustive mode certifies (or returns the first violating set in order of
    size, then lexicographic order).  Probe mode samples random subsets and can
    only refute.
    """
    gamma, delta = Fraction(gamma), Fraction(delta)
    if side not in ("left", "right"):
        raise DomainError(f"side must be left or right, got {side!r}")
    n = g.n_left if side == "left" else g.n_right
    if mode == "exhaustive":
        if s_max > math.floor(gamma * n):
            raise DomainError(f"s_max={s_max} exceeds floor(gamma*n)={math.floor(gamma * n)}")
        total = sum(math.comb(n, s) for s in range(1, s_max + 1))
        if total > budget:
            raise BudgetExceeded(f"{total} subsets exceed budget {budget}")
        checked = 0
        for s in range(1, s_max + 1):
            for subset in itertools.combinations(range(n), s):
                checked += 1
                if _violates(g, side, subset, delta):
                    return AuditReport(mode, side, s - 1, subset, checked)
        return AuditReport(mode, side, s_max, None, checked)
    if mode == "probe":
        rng = np.random.default_rng(seed)
        best = None
        for i in range(probes):
            s = int(rng.integers(1, s_max + 1))
            subset = tuple(sorted(rng.choice(n, size=s, replace=False).tolist()))
            if _violates(g, side, subset, delta) and (best is None or len(subset) < len(best)):
                best = subset
        return AuditReport(mode, side, 0, best, probes)
    raise DomainError(f"unknown audit mode {mode!r}")


# --------------------------------------------------------------------------
# connected sets


def connected_components(g: Graph, s: Iterable[int]) -> list[frozenset[int]]:
    """Partition ``s`` into the connected components of the subgraph it induces."""
    members = set(s)
    parts = []
    for start in sorted(members):
        if start not in members:
            continue
        members.discard(start)
        comp = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in g.adj[u]:
                if v in members:
                    members.discard(v)
                    comp.add(v)
                    stack.append(v)
        parts.append(frozenset(comp))
    return parts


def components_mask(g: Graph, s: int) -> list[int]:
    """Bit-set flavour of :func:`connected_components`."""
    parts = []
    nb = g.nbmask
    while s:
        low = s & -s
        comp = low
        frontier = low
        s ^= low
        while frontier:
            reach = 0
            for v in bits.iter_indices(frontier):
                reach |= nb[v]
            frontier = reach & s
            s &= ~frontier
            comp |= frontier
        parts.append(comp)
    return parts


def enumerate_connected_sets(
    g: Graph,
    s_max: int,
    visitor: Optional[Callable[[int], None]] = None,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> list[int]:
    """Count connected vertex sets of every size ``1..s_max``.

    Each set is generated exactly once: it is grown from its smallest vertex
    and only absorbs vertices from the exclusive neighbourhood of the current
    set that are larger than that anchor.  ``visitor`` receives each set as a
    bit set, in a deterministic order.
    """
    if s_max < 1:
        raise DomainError("s_max must be at least 1")
    counts = [0] * s_max
    nb = g.nbmask
    total = 0

    def grow(sub, closed, ext, above, size):
        nonlocal total
        counts[size - 1] += 1
        total += 1
        if total > budget:
            raise BudgetExceeded(f"more than {budget} connected sets")
        if visitor is not None:
            visitor(sub)
        if size == s_max:
            return
        while ext:
            low = ext & -ext
            ext ^= low
            w = low.bit_length() - 1
            new_ext = ext | (nb[w] & ~closed & above)
            grow(sub | low, closed | nb[w] | low, new_ext, above, size + 1)

    full = (1 << g.n) - 1
    for v in range(g.n):
        above = full & ~((1 << (v + 1)) - 1)
        low = 1 << v
        grow(low, low | nb[v], nb[v] & above, above, 1)
    return counts


def raney_count_bound(n_vertices: int, d: int, s: int) -> Fraction:
    """Tree-encoding bound on the number of connected sets of size ``s``.

    Exact rational value of ``|V| d / (s (s(d-2)+2)) * C(s(d-1), s-1)``.
    """
    if d < 2 or s < 1:
        raise DomainError("need d >= 2 and s >= 1")
    return Fraction(n_vertices * d * math.comb(s * (d - 1), s - 1), s * (s * (d - 2) + 2))


def complete_tree(d: int, height: int, cap: int = 10**7) -> Graph:
    """Complete (d-1)-ary tree with ``height`` levels, root = vertex 0.

    Children of vertex ``i`` are ``(d-1) i + 1 .. (d-1) i + (d-1)`` so the
    vertices of each level are contiguous.
    """
    if d < 3 or height < 1:
        raise DomainError("need d >= 3 and height >= 1")
    b = d - 1
    n = (b**height - 1) // (d - 2)
    if n > cap:
        raise SizeOverflow(f"tree with {n} vertices exceeds cap {cap}")
    edges = [(i, (i - 1) // b) for i in range(1, n)]
    return Graph.from_edges(n, edges, d_max=d)


def tree_level(d: int, depth: int) -> range:
    b = d - 1
    start = (b**depth - 1) // (d - 2)
    return range(start, start + b**depth)


# --------------------------------------------------------------------------
# text format


def _data_lines(text: str) -> list[list[str]]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line.split())
    return out


def dumps_graph(g) -> str:
    if isinstance(g, BipartiteGraph):
        lines = [f"BIPARTITE {g.n_left} {g.n_right} {g.d_left} {g.d_right}"]
        lines += [f"{u} {v}" for u, v in sorted(g.edges)]
    else:
        lines = [f"GRAPH {g.n}"]
        lines += [f"{u} {v}" for u, v in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def loads_graph(text: str):
    rows = _data_lines(text)
    if not rows:
        raise DomainError("empty graph file")
    head, body = rows[0], rows[1:]
    edges = [(int(a), int(b)) for a, b in body]
    if head[0] == "BIPARTITE":
        n_left, n_right, d_left, d_right = map(int, head[1:5])
        return BipartiteGraph.from_edges(n_left, n_right, edges, d_left, d_right)
    if head[0] == "GRAPH":
        return Graph.from_edges(int(head[1]), edges)
    raise DomainError(f"unknown graph header {head[0]!r}")


def read_graph(path) -> "Graph | BipartiteGraph":
    return loads_graph(Path(path).read_text())


def write_graph(g, path) -> None:
    Path(path).write_text(dumps_graph(g))


# --------------------------------------------------------------------------
# fixtures used by tests and experiments


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def circular_ladder(rungs: int) -> Graph:
    """Prism graph: two concentric cycles joined by rungs (3-regular)."""
    edges = []
    for i in range(rungs):
        j = (i + 1) % rungs
        edges += [(i, j), (rungs + i, rungs + j), (i, rungs + i)]
    return Graph.from_edges(2 * rungs, edges)


def torus_grid(rows: int, cols: int) -> Graph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            edges.append((v, r * cols + (c + 1) % cols))
            edges.append((v, ((r + 1) % rows) * cols + c))
    return Graph.from_edges(rows * cols, edges)


def random_regular_graph(n: int, d: int, seed: int) -> Graph:
    import networkx as nx

    return Graph.from_networkx(nx.random_regular_graph(d, n, seed=seed))
