"""Error samplers and an empirical check of the local stochastic inclusion bound.

All randomness comes from :func:`stream_rng`, keyed by ``(seed, trial, tag)``,
so a trial's errors do not depend on which worker runs it or in what order.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from qexpander import bits
from qexpander.errors import BudgetExceeded, DomainError, InfeasibleKnobs
from qexpander.graphs import Graph, enumerate_connected_sets
from qexpander.stats import wilson_lower

NOISE_SCHEMA = 1
KINDS = ("iid", "cluster_burst")


def _tag(tag) -> int:
    return tag if isinstance(tag, int) else zlib.crc32(str(tag).encode())


def stream_rng(seed: int, trial: int = 0, tag="noise") -> np.random.Generator:
    """Counter-based generator for one ``(seed, trial, tag)`` stream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial), _tag(tag)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "iid"
    p: float = 0.01
    burst_size: int = 1
    anchor_rate: Optional[float] = None
    seed: int = 0
    schema_version: int = NOISE_SCHEMA

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown noise kind {self.kind!r}")
        if not 0 <= self.p < 1:
            raise DomainError("p must lie in [0, 1)")
        if self.burst_size < 1:
            raise DomainError("burst_size must be >= 1")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "NoiseSpec":
        if data.get("schema_version", NOISE_SCHEMA) != NOISE_SCHEMA:
            raise DomainError(f"noise schema {data.get('schema_version')} not supported")
        return cls(**data)


def _check_p(p: float) -> None:
    if not 0 <= p < 1:
        raise DomainError("p must lie in [0, 1)")


def sample_iid_array(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    _check_p(p)
    return rng.random(n) < p


def sample_iid(n: int, p: float, seed: int, trial: int = 0, tag="noise") -> int:
    """Each of ``n`` positions independently with probability ``p``, as a bit set."""
    return bits.from_bool_array(sample_iid_array(n, p, stream_rng(seed, trial, tag)))


def depolarizing_marginals(p_depol: float) -> tuple[float, float]:
    """X-side and Z-side flip rates of a depolarizing channel with total rate ``p``."""
    _check_p(p_depol)
    return 2 * p_depol / 3, 2 * p_depol / 3


def pauli_marginals(p_x: float, p_y: float, p_z: float) -> tuple[float, float]:
    """X-side rate ``p_X + p_Y`` and Z-side rate ``p_Y + p_Z`` of a Pauli channel."""
    for v in (p_x, p_y, p_z):
        _check_p(v)
    if p_x + p_y + p_z >= 1:
        raise DomainError("Pauli rates must sum below 1")
    return p_x + p_y, p_y + p_z


# --------------------------------------------------------------------------
# clustered bursts


def bfs_burst(g: Graph, v: int, size: int) -> tuple[int, ...]:
    """First ``size`` vertices reached by BFS from ``v``, neighbours in ascending order."""
    seen = [v]
    marked = {v}
    head = 0
    while head < len(seen) and len(seen) < size:
        for u in g.adj[seen[head]]:
            if u not in marked:
                marked.add(u)
                seen.append(u)
                if len(seen) == size:
                    break
        head += 1
    return tuple(seen)


@dataclass(frozen=True)
class BurstCertificate:
    """Inclusion bound ``P(F ⊆ E) <= (M a^{1/b})^{|F|} <= p^{|F|}``.

    ``M`` is the largest number of bursts containing a single vertex.  If
    ``F ⊆ E`` then each ``u ∈ F`` is covered by some anchor whose burst holds
    ``u``; there are at most ``M^{|F|}`` such assignments and each one needs
    at least ``|F|/b`` distinct anchors, each present with probability ``a``.
    """

    burst_size: int
    multiplicity: int
    anchor_rate: float
    p: float

    @property
    def base(self) -> float:
        return self.multiplicity * self.anchor_rate ** (1 / self.burst_size)

    def bound(self, f_size: int) -> float:
        return self.base ** f_size

    def to_json(self) -> dict:
        return {**asdict(self), "base": self.base, "rule": "P(F in E) <= (M a^(1/b))^|F|"}


@dataclass(frozen=True)
class BurstTable:
    bursts: np.ndarray  # (n, b) vertex ids, padded with the anchor itself
    certificate: BurstCertificate


def max_anchor_rate(p: float, multiplicity: int, burst_size: int) -> float:
    return (p / multiplicity) ** burst_size


def burst_table(g: Graph, p: float, burst_size: int, anchor_rate: Optional[float] = None) -> BurstTable:
    _check_p(p)
    if burst_size < 1:
        raise InfeasibleKnobs("burst size must be >= 1")
    bursts = [bfs_burst(g, v, burst_size) for v in range(g.n)]
    cover = np.zeros(g.n, dtype=np.int64)
    table = np.empty((g.n, burst_size), dtype=np.int64)
    for v, b in enumerate(bursts):
        cover[list(b)] += 1
        table[v] = list(b) + [v] * (burst_size - len(b))
    m = int(cover.max()) if g.n else 1
    cap = max_anchor_rate(p, m, burst_size)
    a = cap if anchor_rate is None else anchor_rate
    if not 0 <= a <= cap * (1 + 1e-12):
        raise InfeasibleKnobs(f"anchor rate {a} exceeds (p/M)^b = {cap} with M = {m}")
    return BurstTable(table, BurstCertificate(burst_size, m, a, p))


def sample_cluster_burst_array(table: BurstTable, rng: np.random.Generator) -> np.ndarray:
    n = table.bursts.shape[0]
    anchors = rng.random(n) < table.certificate.anchor_rate
    out = np.zeros(n, dtype=bool)
    out[table.bursts[anchors].ravel()] = True
    return out


def sample_cluster_burst(g: Graph, p: float, burst_size: int, seed: int, trial: int = 0,
                         anchor_rate: Optional[float] = None, tag="noise") -> tuple[int, BurstCertificate]:
    table = burst_table(g, p, burst_size, anchor_rate)
    e = sample_cluster_burst_array(table, stream_rng(seed, trial, tag))
    return bits.from_bool_array(e), table.certificate


def exact_burst_inclusion(table: BurstTable, f: int) -> float:
    """``P(F ⊆ E)`` by summing over all anchor sets; only for tiny graphs."""
    n = table.bursts.shape[0]
    if n > 16:
        raise BudgetExceeded("exact burst inclusion is limited to 16 vertices")
    a = table.certificate.anchor_rate
    masks = [bits.from_indices(set(map(int, row))) for row in table.bursts]
    total = 0.0
    for anchors in range(1 << n):
        cov = 0
        for v in bits.iter_indices(anchors):
            cov |= masks[v]
        if f & ~cov == 0:
            k = anchors.bit_count()
            total += a ** k * (1 - a) ** (n - k)
    return total


def make_sampler(spec: NoiseSpec, n: int, graph: Optional[Graph] = None) -> Callable[[np.random.Generator], np.ndarray]:
    """Bool-array sampler for ``spec``; cluster bursts need the adjacency graph."""
    if spec.kind == "iid":
        return lambda rng: sample_iid_array(n, spec.p, rng)
    if graph is None:
        raise DomainError("cluster_burst noise needs a graph")
    table = burst_table(graph, spec.p, spec.burst_size, spec.anchor_rate)
    return lambda rng: sample_cluster_burst_array(table, rng)


# --------------------------------------------------------------------------
# empirical verifier


@dataclass
class LsViolation:
    subset: tuple[int, ...]
    count: int
    lower: float
    bound: float


@dataclass
class LsReport:
    p: float
    trials: int
    n_sets: int
    confidence: float
    violations: list[LsViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def ls_empirical_check(
    sampler: Callable[[np.random.Generator], np.ndarray],
    p: float,
    g: Graph,
    f_max: int,
    trials: int,
    seed: int,
    n_disconnected: int = 100,
    confidence: float = 0.99,
    budget: int = 200_000,
) -> LsReport:
    """Compare empirical ``P(F ⊆ E)`` with ``p^{|F|}`` for connected ``F`` and random disconnected ``F``.

    A violation is reported when the one-sided Wilson lower bound exceeds
    ``p^{|F|}``; the per-set level is Bonferroni-corrected over all sets.
    """
    sets: list[int] = []

    def visit(s: int) -> None:
        sets.append(s)

    enumerate_connected_sets(g, f_max, visit, budget=budget)
    rng = stream_rng(seed, 0, "ls-subsets")
    seen = set(sets)
    for _ in range(n_disconnected):
        size = int(rng.integers(2, max(f_max, 2) + 1))
        s = bits.from_indices(rng.choice(g.n, size=min(size, g.n), replace=False).tolist())
        if s not in seen:
            seen.add(s)
            sets.append(s)

    samples = np.empty((trials, g.n), dtype=bool)
    for t in range(trials):
        samples[t] = sampler(stream_rng(seed, t, "ls-sample"))
    cols = np.packbits(samples, axis=0)  # (ceil(trials/8), n)

    level = 1 - (1 - confidence) / max(len(sets), 1)
    report = LsReport(p, trials, len(sets), confidence)
    for s in sets:
        idx = bits.to_indices(s)
        acc = np.bitwise_and.reduce(cols[:, idx], axis=1)
        k = int(np.bitwise_count(acc).sum())
        bound = p ** len(idx)
        lo = wilson_lower(k, trials, level)
        if lo > bound:
            report.violations.append(LsViolation(tuple(idx), k, lo, bound))
    return report
