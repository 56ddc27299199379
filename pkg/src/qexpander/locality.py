"""Replay audits of decoder runs against the locality argument.

For a run on an error ``E`` with support ``U`` (``E`` plus every flipped
qubit), each connected component ``K`` of ``U`` in the adjacency graph should
carry its own valid execution: the flips inside ``K``, fed with syndromes
restricted to the checks ``C_K`` touching ``K``, must still be admissible
argmax moves and must stop where the full run stopped.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from qexpander import bits
from qexpander.errors import PreconditionViolated, ReplayMismatch
from qexpander.graphs import Graph, components_mask
from qexpander.hgp import CssCode, Side
from qexpander.percolation import max_conn_alpha_exact
from qexpander.ssf import DecodeRun, DecoderParams, FlipCatalog, decode_ssf


def check_neighbourhood(side: Side, k: int) -> int:
    """``C_K``: checks adjacent to some qubit of ``k``."""
    cols = side.checks.columns
    out = 0
    for q in bits.iter_indices(k):
        out |= cols[q]
    return out


def catalog_numerators(cat: FlipCatalog, sigma: int) -> np.ndarray:
    """``|F| Δ(σ, F)`` for every catalog slot, shape ``(G, S)``; invalid slots are meaningless."""
    sig = np.zeros(cat.n_checks + 1, dtype=bool)
    sig[:-1] = bits.to_bool_array(sigma, cat.n_checks)
    shifts = np.arange(cat.local.shape[1], dtype=np.int64)
    state = (sig[cat.local].astype(np.int64) << shifts).sum(axis=1)
    return 2 * np.bitwise_count(cat.sub_syn & state[:, None]).astype(np.int64) - cat.sub_weight


def _subset_of(cat: FlipCatalog, k: int) -> np.ndarray:
    """Mask of catalog slots whose qubits all lie in ``k``."""
    kb = np.zeros(cat.side.n_qubits + 1, dtype=bool)
    kb[:-1] = bits.to_bool_array(k, cat.side.n_qubits)
    inside = kb[cat.support]  # padding (-1) reads the trailing False
    inside_mask = (inside.astype(np.int64) << np.arange(cat.support.shape[1], dtype=np.int64)).sum(axis=1)
    return (cat.sub_mask[None, :] & ~inside_mask[:, None]) == 0


def verify_syndrome_restriction(side: Side, w: int, k: int, u: int) -> bool:
    """``σ(W ∩ K) = σ(W) ∩ C_K`` for ``W ⊆ U`` and a component ``K`` of ``U``."""
    if w & ~u:
        raise PreconditionViolated("w is not contained in the support U")
    return side.syndrome(w & k) == side.syndrome(w) & check_neighbourhood(side, k)


def verify_delta_restriction(cat: FlipCatalog, sigma: int, k: int) -> bool:
    """``Δ(σ ∩ C_K, F) <= Δ(σ, F)`` for every entry, with equality when ``F ⊆ K``."""
    full = catalog_numerators(cat, sigma)
    restricted = catalog_numerators(cat, sigma & check_neighbourhood(cat.side, k))
    valid = cat.valid
    if np.any((restricted > full) & valid):
        return False
    inside = _subset_of(cat, k) & valid
    return bool(np.all(restricted[inside] == full[inside]))


def _meets_guard(num, size, params: DecoderParams, d_guard: int):
    if params.mode == "alg1":
        return num >= 1
    b = params.beta
    return num * b.denominator >= b.numerator * d_guard * size


@dataclass
class ComponentRecord:
    qubits: list[int]
    checks: list[int]
    flip_indices: list[int]
    flags: dict[str, bool] = field(default_factory=dict)


@dataclass
class LocalityReport:
    components: list[ComponentRecord]
    dichotomy: bool
    support_contains_error: bool
    support_ratio_ok: bool
    support_size: int
    error_size: int
    flip_total: int
    passed: bool = True

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def verify_locality(
    code: CssCode,
    cat: FlipCatalog,
    e: int,
    run: DecodeRun,
    params: DecoderParams,
    graph: Graph,
) -> LocalityReport:
    """Split ``run`` by the components of its support and replay each piece.

    Per component ``K`` the checks are: (i) the XOR of the flips inside ``K``
    equals ``Ê ∩ K``; (ii) those flips together with ``E ∩ K`` cover ``K``;
    (iii) each flip maximises ``Δ`` against the restricted syndrome
    ``σ_{i_j} ∩ C_K`` over the whole catalog; (iv) each meets the guard;
    (v) nothing meets the guard at the final restricted syndrome.  The
    restricted input must equal ``σ(E ∩ K)``.  Raises :class:`ReplayMismatch`
    at the first failure.
    """
    side = cat.side
    sigmas = run.syndromes(side)
    if sigmas[0] != side.syndrome(e):
        raise ReplayMismatch("input", 0, "run input is not the syndrome of e")
    u = run.support(e)
    comps = components_mask(graph, u)
    flip_masks = [bits.from_indices(f) for f in run.flips]

    owner = []
    for i, f in enumerate(flip_masks):
        hits = [c for c, k in enumerate(comps) if f & k]
        if len(hits) != 1 or f & ~comps[hits[0]]:
            raise ReplayMismatch("dichotomy", i, "flip straddles a component boundary")
        owner.append(hits[0])

    records = []
    for c, k in enumerate(comps):
        ck = check_neighbourhood(side, k)
        idx = [i for i, o in enumerate(owner) if o == c]
        rec = ComponentRecord(bits.to_indices(k), bits.to_indices(ck), idx)
        if sigmas[0] & ck != side.syndrome(e & k):
            raise ReplayMismatch("input", 0, f"component {c}: restricted input differs from σ(E ∩ K)")
        acc = 0
        cover = e & k
        for i in idx:
            acc ^= flip_masks[i]
            cover |= flip_masks[i]
        if acc != run.e_hat & k:
            raise ReplayMismatch("i", idx[-1] if idx else 0, f"component {c}: flips do not XOR to Ê ∩ K")
        rec.flags["i"] = True
        if cover != k:
            raise ReplayMismatch("ii", 0, f"component {c}: flips and E ∩ K do not cover K")
        rec.flags["ii"] = True
        for j, i in enumerate(idx):
            s_j = sigmas[i] & ck
            nums = catalog_numerators(cat, s_j)
            g, col = run.steps[i]
            num = int(nums[g, col])
            size = int(cat.sub_size[col])
            # exact Δ comparison: num/size >= other/other_size
            better = (nums * size > num * cat.sub_size[None, :]) & cat.valid
            if better.any():
                raise ReplayMismatch("iii", i, f"component {c}: restricted flip is not a Δ maximiser")
            if not _meets_guard(num, size, params, cat.d_guard):
                raise ReplayMismatch("iv", i, f"component {c}: restricted flip misses the guard")
            if sigmas[i + 1] & ck != s_j ^ side.syndrome(flip_masks[i]):
                raise ReplayMismatch("iii", i, f"component {c}: restricted syndrome update differs")
        rec.flags["iii"] = rec.flags["iv"] = True
        final = sigmas[-1] & ck
        nums = catalog_numerators(cat, final)
        if np.any(_meets_guard(nums, cat.sub_size[None, :], params, cat.d_guard) & cat.valid) and run.termination != "flip_cap_hit":
            raise ReplayMismatch("v", len(run.flips), f"component {c}: a guarded move remains at the end")
        rec.flags["v"] = True
        records.append(rec)

    contains = e & ~u == 0
    flip_total = sum(len(f) for f in run.flips)
    ratio_ok = True
    if params.mode == "alg2":
        # |U| <= |E| + Σ|F_i| and β d_B Σ|F_i| <= |σ0|
        if u.bit_count() > e.bit_count() + flip_total:
            ratio_ok = False
        if params.beta * cat.d_guard * flip_total > sigmas[0].bit_count():
            ratio_ok = False
        max_deg = max(side.checks.col_weights)
        if max_deg <= cat.d_guard and u.bit_count() > (1 + params.beta) / params.beta * (e & u).bit_count():
            ratio_ok = False
    report = LocalityReport(records, True, contains, ratio_ok, u.bit_count(), e.bit_count(), flip_total)
    report.passed = contains and ratio_ok
    if not contains:
        raise ReplayMismatch("support", 0, "E is not contained in U")
    if not ratio_ok:
        raise ReplayMismatch("support_ratio", 0, "support exceeds (1+β)/β |E|")
    return report


@dataclass
class CriterionResult:
    applicable: bool
    corrected: bool
    maxconn: int
    run: Optional[DecodeRun] = None

    @property
    def counterexample(self) -> bool:
        return self.applicable and not self.corrected


def verify_correction_criterion(
    code: CssCode,
    cat: FlipCatalog,
    e: int,
    params: DecoderParams,
    t: int,
    graph: Graph,
    budget: int = 10**7,
) -> CriterionResult:
    """If ``MaxConn_α(E) <= t`` with ``α = β/(1+β)``, decoding ``σ(E)`` must succeed.

    ``MaxConn`` is searched without a size cap: a capped search at ``t+1``
    could miss a larger qualifying set when no set of size exactly ``t+1``
    qualifies.  The search stops at the first qualifying set larger than
    ``t``, so ``maxconn`` is exact when the criterion applies and a lower
    bound above ``t`` otherwise.
    """
    alpha = params.beta / (1 + params.beta)
    side = cat.side
    mc = max_conn_alpha_exact(graph, e, alpha, target=t + 1, budget=budget).value
    run = decode_ssf(cat, side.syndrome(e), params)
    ok = run.converged and side.equivalent(e, run.e_hat)
    return CriterionResult(mc <= t, ok, mc, run)
