"""Small-set-flip decoding.

Each iteration picks, over every generator support ``x`` and every nonempty
``F ⊆ x``, the flip maximising the per-qubit syndrome decrease

    Δ(σ, F) = (2 |σ(F) ∩ σ| − |σ(F)|) / |F|

and applies it if the loop guard holds.  ``alg2`` uses the guard
``Δ >= β d_B``; ``alg1`` only asks for a decrease of at least one.

The catalog keeps, per generator, the syndromes of all its subsets as bit
masks over the generator's local checks (the union of the check
neighbourhoods of its qubits).  Those masks fit in an int64, so a whole
generator is scored with a couple of vectorised popcounts.  After a flip only
generators sharing a local check with the changed checks are rescored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from qexpander import bits
from qexpander.errors import (
    BudgetExceeded,
    DomainError,
    InvariantViolation,
    NegativeBeta,
    UnreachableSyndrome,
)
from qexpander.hgp import CodeParams, CssCode, Side, t_ssf_value

MAX_SUPPORT = 30
MAX_LOCAL_CHECKS = 62
DEFAULT_CATALOG_BUDGET = 50_000_000
TIE_BREAK = "size,generator,mask"

CONVERGED = "converged"
STALLED = "stalled"
FLIP_CAP = "flip_cap_hit"


# --------------------------------------------------------------------------
# parameters


def beta0(d_a: int, d_b: int, delta_a, delta_b, require_positive: bool = False) -> tuple[Fraction, Fraction]:
    """Return ``(r, β₀)`` with ``β₀ = r/2 [1 − 4(δ_A + δ_B + (δ_B − δ_A)²)]``, exactly."""
    da, db = Fraction(delta_a), Fraction(delta_b)
    if not (0 < da < 1 and 0 < db < 1):
        raise DomainError("expansion defects must lie in (0, 1)")
    r = Fraction(d_a, d_b)
    b0 = r / 2 * (1 - 4 * (da + db + (db - da) ** 2))
    if require_positive and b0 <= 0:
        raise NegativeBeta(f"beta0 = {b0} <= 0: expansion too weak for a guarantee")
    return r, b0


def t_ssf_bound(params: CodeParams, beta, gamma_a, gamma_b) -> int:
    return math.floor(t_ssf_value(params.r, beta, gamma_a, gamma_b, params.n_a, params.n_b))


@dataclass(frozen=True)
class DecoderParams:
    beta: Fraction = Fraction(1, 4)
    mode: str = "alg2"
    beta0: Optional[Fraction] = None
    r: Optional[Fraction] = None
    guarantee: bool = False
    tie_break: str = TIE_BREAK
    max_flips: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "beta", Fraction(self.beta))
        if self.beta0 is not None:
            object.__setattr__(self, "beta0", Fraction(self.beta0))
        if self.mode not in ("alg1", "alg2"):
            raise DomainError(f"mode must be alg1 or alg2, got {self.mode!r}")
        if not 0 < self.beta <= 1:
            raise DomainError("beta must lie in (0, 1]")
        if self.tie_break != TIE_BREAK:
            raise DomainError(f"unknown tie-break rule {self.tie_break!r}")
        if self.guarantee:
            if self.beta0 is None or self.beta0 <= 0:
                raise NegativeBeta("guarantee mode needs a positive beta0")
            if self.beta > self.beta0:
                raise DomainError("guarantee mode needs beta <= beta0")

    @property
    def alpha(self) -> Fraction:
        return self.beta / (1 + self.beta)


# --------------------------------------------------------------------------
# catalog


@dataclass(frozen=True, eq=False)
class FlipCatalog:
    """Every nonempty subset of every generator support, with its syndrome.

    Array shapes: ``G`` generators, ``W`` max support size, ``L`` max local
    checks, ``S = 2^W − 1`` subsets.  Subset columns are ordered by
    ``(|F|, mask)`` and shared by all generators; subsets touching padding
    are marked invalid.
    """

    side: Side
    d_guard: int
    support: np.ndarray  # (G, W) qubit ids, -1 padded
    local: np.ndarray  # (G, L) check ids, n_checks padded
    sub_mask: np.ndarray  # (S,) subset mask over support positions
    sub_size: np.ndarray  # (S,)
    sub_syn: np.ndarray  # (G, S) local syndrome masks
    sub_weight: np.ndarray  # (G, S) |σ(F)|
    valid: np.ndarray  # (G, S) bool
    check_gens: np.ndarray  # (n_checks, K) generators touching each check, G padded
    lcm: int

    @property
    def n_generators(self) -> int:
        return self.support.shape[0]

    @property
    def n_checks(self) -> int:
        return self.side.checks.n_rows

    @property
    def n_entries(self) -> int:
        return int(self.valid.sum())

    def entry_qubits(self, g: int, j: int) -> tuple[int, ...]:
        m = int(self.sub_mask[j])
        return tuple(int(self.support[g, i]) for i in bits.iter_indices(m))

    def entry_syndrome(self, g: int, j: int) -> int:
        """Global check bit set of subset ``j`` of generator ``g``."""
        out = 0
        m = int(self.sub_syn[g, j])
        for i in bits.iter_indices(m):
            out |= 1 << int(self.local[g, i])
        return out

    def entries(self):
        for g in range(self.n_generators):
            for j in np.flatnonzero(self.valid[g]):
                yield g, int(j)


def build_flip_catalog(code: CssCode, side: str = "X", budget: int = DEFAULT_CATALOG_BUDGET) -> FlipCatalog:
    sv = code.side(side)
    gens = [bits.to_indices(r) for r in sv.generators.rows]
    w = max(len(s) for s in gens)
    if w > MAX_SUPPORT:
        raise BudgetExceeded(f"generator weight {w} exceeds {MAX_SUPPORT}")
    n_sub = (1 << w) - 1
    if n_sub * len(gens) > budget:
        raise BudgetExceeded(f"{n_sub * len(gens)} catalog entries exceed budget {budget}")
    cols = sv.checks.columns
    n_checks = sv.checks.n_rows
    local_sets = [sorted(set().union(*(bits.to_indices(cols[q]) for q in s))) for s in gens]
    lmax = max(len(x) for x in local_sets)
    if lmax > MAX_LOCAL_CHECKS:
        raise BudgetExceeded(f"{lmax} local checks do not fit a 64-bit mask")
    G = len(gens)
    support = np.full((G, w), -1, dtype=np.int64)
    local = np.full((G, max(lmax, 1)), n_checks, dtype=np.int64)
    qmask = np.zeros((G, w), dtype=np.int64)
    for g, (s, loc) in enumerate(zip(gens, local_sets)):
        support[g, : len(s)] = s
        local[g, : len(loc)] = loc
        pos = {c: i for i, c in enumerate(loc)}
        for i, q in enumerate(s):
            qmask[g, i] = sum(1 << pos[c] for c in bits.iter_indices(cols[q]))

    masks = np.arange(1, n_sub + 1, dtype=np.int64)
    sizes = np.bitwise_count(masks).astype(np.int64)
    order = np.lexsort((masks, sizes))
    masks, sizes = masks[order], sizes[order]

    # subset syndromes by peeling the lowest bit: syn[m] = syn[m & (m-1)] ^ col[low(m)]
    by_mask = np.zeros((G, n_sub + 1), dtype=np.int64)
    for m in range(1, n_sub + 1):
        low = (m & -m).bit_length() - 1
        by_mask[:, m] = by_mask[:, m & (m - 1)] ^ qmask[:, low]
    sub_syn = by_mask[:, masks]
    weights = np.array([len(s) for s in gens], dtype=np.int64)
    valid = (masks[None, :] >> weights[:, None]) == 0

    touching: list[list[int]] = [[] for _ in range(n_checks)]
    for g, loc in enumerate(local_sets):
        for c in loc:
            touching[c].append(g)
    k = max((len(t) for t in touching), default=1) or 1
    check_gens = np.full((n_checks + 1, k), G, dtype=np.int64)
    for c, t in enumerate(touching):
        check_gens[c, : len(t)] = t

    return FlipCatalog(
        side=sv,
        d_guard=code.d_b,
        support=support,
        local=local,
        sub_mask=masks,
        sub_size=sizes,
        sub_syn=sub_syn,
        sub_weight=np.bitwise_count(sub_syn).astype(np.int64),
        valid=valid,
        check_gens=check_gens,
        lcm=math.lcm(*range(1, w + 1)),
    )


def delta(sigma: int, f_syndrome: int, f_size: int) -> Fraction:
    if f_size <= 0:
        raise DomainError("delta needs a nonempty flip")
    return Fraction(2 * (sigma & f_syndrome).bit_count() - f_syndrome.bit_count(), f_size)


# --------------------------------------------------------------------------
# scoring


class _Scorer:
    """Per-generator best composite score under the current syndrome.

    The composite is ``num · (lcm/|F|) · (W+1) + (W − |F|)``: ordering by it is
    ordering by Δ, then by smaller ``|F|``.  Subset columns are pre-sorted by
    ``(|F|, mask)``, so ``argmax`` (first occurrence) finishes the tie-break
    inside a generator, and an ``argmax`` over generators picks the smallest
    generator index among equals.
    """

    NEG = np.iinfo(np.int64).min

    def __init__(self, cat: FlipCatalog):
        self.cat = cat
        w = cat.support.shape[1]
        self.w = w
        scale = (cat.lcm // cat.sub_size) * (w + 1)
        self.scale = scale
        self.tail = w - cat.sub_size
        self.best = np.full(cat.n_generators, self.NEG, dtype=np.int64)
        self.arg = np.zeros(cat.n_generators, dtype=np.int64)
        self.shifts = np.arange(cat.local.shape[1], dtype=np.int64)

    def rescore(self, sig: np.ndarray, gens: np.ndarray) -> None:
        cat = self.cat
        loc = sig[cat.local[gens]].astype(np.int64)
        state = (loc << self.shifts).sum(axis=1)
        inter = np.bitwise_count(cat.sub_syn[gens] & state[:, None]).astype(np.int64)
        num = 2 * inter - cat.sub_weight[gens]
        comp = num * self.scale + self.tail
        comp = np.where(cat.valid[gens], comp, self.NEG)
        j = comp.argmax(axis=1)
        self.arg[gens] = j
        self.best[gens] = comp[np.arange(len(gens)), j]

    def pick(self) -> tuple[int, int]:
        g = int(self.best.argmax())
        return g, int(self.arg[g])


def _numerator(cat: FlipCatalog, sig: np.ndarray, g: int, j: int) -> int:
    loc = cat.local[g]
    state = int((sig[loc].astype(np.int64) << np.arange(len(loc), dtype=np.int64)).sum())
    m = int(cat.sub_syn[g, j])
    return 2 * (m & state).bit_count() - m.bit_count()


def _guard(num: int, size: int, params: DecoderParams, d_guard: int) -> bool:
    if params.mode == "alg1":
        return num >= 1
    b = params.beta
    return num * b.denominator >= b.numerator * d_guard * size


def default_max_flips(weight: int, params: DecoderParams, d_guard: int) -> int:
    if params.mode == "alg1":
        return weight + 1
    return math.ceil(Fraction(weight) / (params.beta * d_guard)) + 1


# --------------------------------------------------------------------------
# decoding


@dataclass
class DecodeRun:
    sigma0: int
    flips: list[tuple[int, ...]]
    weights: list[int]
    e_hat: int
    termination: str
    mode: str
    beta: Fraction
    sigma_final: int = 0
    steps: list[tuple[int, int]] = field(default_factory=list)  # (generator, subset column)

    @property
    def converged(self) -> bool:
        return self.termination == CONVERGED

    @property
    def n_flips(self) -> int:
        return len(self.flips)

    def support(self, e: Optional[int] = None) -> int:
        """``U``: union of the flips, plus the injected error when known."""
        u = 0 if e is None else e
        for f in self.flips:
            u |= bits.from_indices(f)
        return u

    def syndromes(self, side: Side) -> list[int]:
        out = [self.sigma0]
        s = self.sigma0
        for f in self.flips:
            s ^= side.syndrome(bits.from_indices(f))
            out.append(s)
        return out

    def to_json(self) -> dict:
        return {
            "sigma0": bits.to_indices(self.sigma0),
            "flips": [list(f) for f in self.flips],
            "weights": self.weights,
            "termination": self.termination,
            "mode": self.mode,
            "beta": str(self.beta),
            "e_hat": bits.to_indices(self.e_hat),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict, side: Optional[Side] = None) -> "DecodeRun":
        sigma0 = bits.from_indices(data["sigma0"])
        flips = [tuple(f) for f in data["flips"]]
        run = cls(sigma0, flips, list(data["weights"]), bits.from_indices(data["e_hat"]),
                  data["termination"], data["mode"], Fraction(data["beta"]))
        if side is not None:
            run.sigma_final = run.syndromes(side)[-1]
        return run


def decode_ssf(
    catalog: FlipCatalog,
    sigma: int,
    params: DecoderParams = DecoderParams(),
    full_scan: bool = False,
) -> DecodeRun:
    """Run the flip loop from syndrome ``sigma`` (a bit set over checks)."""
    cat = catalog
    d_guard = cat.d_guard
    w0 = sigma.bit_count()
    cap_is_default = params.max_flips is None
    cap = default_max_flips(w0, params, d_guard) if cap_is_default else params.max_flips

    sig = np.zeros(cat.n_checks + 1, dtype=bool)
    sig[:-1] = bits.to_bool_array(sigma, cat.n_checks)
    weight = w0
    scorer = _Scorer(cat)
    all_gens = np.arange(cat.n_generators)
    if weight:
        scorer.rescore(sig, all_gens)

    flips: list[tuple[int, ...]] = []
    steps: list[tuple[int, int]] = []
    weights = [weight]
    e_hat = 0
    termination = CONVERGED
    while weight:
        if full_scan:
            scorer.rescore(sig, all_gens)
        g, j = scorer.pick()
        size = int(cat.sub_size[j])
        num = _numerator(cat, sig, g, j)
        if not _guard(num, size, params, d_guard):
            termination = STALLED
            break
        if len(flips) >= cap:
            if cap_is_default:
                raise InvariantViolation(f"flip count exceeded the bound {cap}")
            termination = FLIP_CAP
            break
        changed = cat.local[g, bits.to_indices(int(cat.sub_syn[g, j]))]
        sig[changed] ^= True
        weight -= num
        qs = cat.entry_qubits(g, j)
        for q in qs:
            e_hat ^= 1 << q
        flips.append(qs)
        steps.append((g, j))
        weights.append(weight)
        if not full_scan and weight:
            dirty = np.unique(cat.check_gens[changed])
            dirty = dirty[dirty < cat.n_generators]
            scorer.rescore(sig, dirty)

    final = bits.from_bool_array(sig[:-1])
    if final.bit_count() != weight:
        raise InvariantViolation("tracked syndrome weight drifted")
    if termination == STALLED and not cat.side.reachable(sigma):
        raise UnreachableSyndrome("syndrome is outside the column space of the check matrix")
    run = DecodeRun(sigma, flips, weights, e_hat, termination, params.mode, params.beta, final, steps)
    if params.mode == "alg2" and run.n_flips * params.beta * d_guard > w0:
        raise InvariantViolation("flip count exceeds |sigma0| / (beta d_B)")
    return run


def check_equivalence(code: CssCode, e: int, e_hat: int, side: str = "X") -> bool:
    return code.side(side).equivalent(e, e_hat)


def find_progress_move(catalog: FlipCatalog, sigma: int, params: DecoderParams) -> Optional[tuple[int, int]]:
    """First ``(generator, subset column)`` meeting the loop guard, scanning in catalog order."""
    cat = catalog
    sig = np.zeros(cat.n_checks + 1, dtype=bool)
    sig[:-1] = bits.to_bool_array(sigma, cat.n_checks)
    shifts = np.arange(cat.local.shape[1], dtype=np.int64)
    state = (sig[cat.local].astype(np.int64) << shifts).sum(axis=1)
    num = 2 * np.bitwise_count(cat.sub_syn & state[:, None]).astype(np.int64) - cat.sub_weight
    if params.mode == "alg1":
        ok = num >= 1
    else:
        b = params.beta
        ok = num * b.denominator >= b.numerator * cat.d_guard * cat.sub_size[None, :]
    ok &= cat.valid
    hits = np.argwhere(ok)
    if len(hits) == 0:
        return None
    g, j = hits[0]
    return int(g), int(j)


# --------------------------------------------------------------------------
# independent checks


def _side_subsets(side: Side, g: int):
    """All nonempty subsets of generator ``g`` as ``(size, mask, qubits, syndrome)`` from raw matrices."""
    supp = bits.to_indices(side.generators.rows[g])
    cols = side.checks.columns
    for mask in range(1, 1 << len(supp)):
        qs = [supp[i] for i in range(len(supp)) if mask >> i & 1]
        syn = 0
        for q in qs:
            syn ^= cols[q]
        yield len(qs), mask, tuple(qs), syn


def verify_trace(side: Side, run: DecodeRun, d_guard: int, params: DecoderParams) -> None:
    """Replay ``run`` against the raw parity matrices.

    Checks, step by step: the syndrome update, that the chosen flip is a
    subset of some generator, that its Δ is maximal over every subset of every
    generator, that it is the first maximiser under the tie-break, and that
    it meets the guard.  Also checks that the loop stopped for the right
    reason.  Raises :class:`InvariantViolation` on the first failure.
    """
    sigma = run.sigma0
    n_gen = side.generators.n_rows
    for i, f in enumerate(run.flips + [None]):
        best = None
        best_key = None
        for g in range(n_gen):
            for size, mask, qs, syn in _side_subsets(side, g):
                d = delta(sigma, syn, size)
                key = (d, -size, -g, -mask)
                if best_key is None or key > best_key:
                    best_key, best = key, (qs, syn, d, size)
        if best is None:
            raise InvariantViolation("code has no generators")
        qs, syn, d, size = best
        if params.mode == "alg1":
            allowed = d * size >= 1
        else:
            allowed = d >= params.beta * d_guard
        if f is None:
            if sigma == 0:
                if run.termination != CONVERGED:
                    raise InvariantViolation("zero syndrome but run not marked converged")
            elif run.termination == STALLED and allowed:
                raise InvariantViolation("run stalled although a guarded move existed")
            elif run.termination == CONVERGED:
                raise InvariantViolation("run marked converged with nonzero syndrome")
            break
        if sigma == 0:
            raise InvariantViolation(f"step {i} flips after convergence")
        if tuple(f) != qs:
            raise InvariantViolation(f"step {i}: flip {f} is not the tie-broken maximiser {qs}")
        if not allowed:
            raise InvariantViolation(f"step {i}: flip does not meet the guard")
        new = sigma ^ syn
        if run.weights[i + 1] != new.bit_count() or sigma.bit_count() - new.bit_count() != d * size:
            raise InvariantViolation(f"step {i}: syndrome weights disagree")
        sigma = new
    e_hat = 0
    for f in run.flips:
        e_hat ^= bits.from_indices(f)
    if e_hat != run.e_hat:
        raise InvariantViolation("e_hat is not the XOR of the flips")


@dataclass
class TStarReport:
    t_star: int
    checked: dict[int, int]
    first_failure: Optional[int] = None
    max_flip_ratio: Fraction = Fraction(0)


def exhaustive_tstar(code: CssCode, catalog: FlipCatalog, params: DecoderParams, w_max: Optional[int] = None,
                     budget: int = 1 << 20) -> TStarReport:
    """Largest ``t`` such that every error of weight ``<= t`` decodes to an equivalent estimate."""
    import itertools

    side = catalog.side
    n = side.n_qubits
    w_max = n if w_max is None else min(w_max, n)
    spent = 0
    checked: dict[int, int] = {}
    ratio = Fraction(0)
    for w in range(1, w_max + 1):
        spent += math.comb(n, w)
        if spent > budget:
            raise BudgetExceeded(f"weight {w} exceeds the enumeration budget")
        count = 0
        for combo in itertools.combinations(range(n), w):
            e = bits.from_indices(combo)
            s = side.syndrome(e)
            run = decode_ssf(catalog, s, params)
            if s:
                ratio = max(ratio, Fraction(run.n_flips) * params.beta * catalog.d_guard / s.bit_count())
            count += 1
            if not (run.converged and side.equivalent(e, run.e_hat)):
                checked[w] = count
                return TStarReport(w - 1, checked, bits.from_indices(combo), ratio)
        checked[w] = count
    return TStarReport(w_max, checked, None, ratio)
