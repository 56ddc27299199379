"""α-percolation: exact and sampled ``MaxConn_α``, closed-form thresholds and tail bounds.

``MaxConn_α(E)`` is the largest connected vertex set ``X`` with
``|X ∩ E| >= α |X|``.  The bounds below hold for any graph of maximum degree
``d``; everything involving tiny probabilities is evaluated in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from qexpander import bits
from qexpander.errors import BudgetExceeded, DomainError, InvariantViolation
from qexpander.graphs import Graph, complete_tree, tree_level
from qexpander.noise import stream_rng
from qexpander.stats import wilson_interval

LN2 = math.log(2)


# --------------------------------------------------------------------------
# elementary bounds


def entropy(x: float) -> float:
    """Binary entropy in bits; ``h(0) = h(1) = 0``."""
    if not 0 <= x <= 1:
        raise DomainError("entropy argument must lie in [0, 1]")
    if x == 0 or x == 1:
        return 0.0
    return -(x * math.log2(x) + (1 - x) * math.log2(1 - x))


def kl(a: float, p: float) -> float:
    """``D(a || p)`` in bits between Bernoulli laws."""
    if not (0 <= a <= 1 and 0 < p < 1):
        raise DomainError("kl needs a in [0, 1] and p in (0, 1)")
    out = 0.0
    if a > 0:
        out += a * math.log2(a / p)
    if a < 1:
        out += (1 - a) * math.log2((1 - a) / (1 - p))
    return out


def log2_K(d: int) -> float:
    if d < 3:
        raise DomainError("K(d) needs d >= 3")
    return math.log2(d - 1) + (d - 2) * math.log1p(1 / (d - 2)) / LN2


def K_d(d: int) -> float:
    """Growth rate ``(d-1)(1 + 1/(d-2))^{d-2}`` of connected-set counts."""
    return 2.0 ** log2_K(d)


def binom_entropy_bound(n: int, k: int) -> float:
    """``2^{n h(k/n)}``, an upper bound on ``C(n, k)``."""
    if not 0 <= k <= n or n < 1:
        raise DomainError("need 0 <= k <= n and n >= 1")
    return 2.0 ** (n * entropy(k / n))


def chernoff_tail(s: int, k: int, p: float) -> float:
    """``2^{-s D(k/s || p)}``, bounding ``P(Bin(s, p) >= k)`` for ``k >= s p``."""
    if s < 1 or not 0 <= k <= s:
        raise DomainError("need 0 <= k <= s and s >= 1")
    if k < s * p:
        raise DomainError("Chernoff form needs k >= s p")
    return 2.0 ** (-s * kl(k / s, p))


def binomial_tail_exact(s: int, k: int, p: Fraction) -> Fraction:
    p = Fraction(p)
    return sum((math.comb(s, m) * p**m * (1 - p) ** (s - m) for m in range(k, s + 1)), Fraction(0))


# --------------------------------------------------------------------------
# thresholds


@dataclass(frozen=True)
class PercParams:
    alpha: float
    d: int
    t: int = 1

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise DomainError("alpha must lie in (0, 1]")
        if self.d < 3:
            raise DomainError("d must be >= 3")

    @property
    def h(self) -> float:
        return entropy(self.alpha)

    @property
    def K(self) -> float:
        return K_d(self.d)

    @property
    def p_ls(self) -> float:
        return p_ls(self.d, self.alpha)

    @property
    def p_iid(self) -> float:
        return p_iid(self.d, self.alpha)


def log2_p_ls(d: int, alpha: float) -> float:
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    return (-entropy(alpha) - log2_K(d)) / alpha


def p_ls(d: int, alpha: float) -> float:
    """``(2^{-h(α)} / K(d))^{1/α}``."""
    return 2.0 ** log2_p_ls(d, alpha)


def bound_ls(n_vertices: int, p: float, d: int, alpha: float, t: int) -> tuple[float, float]:
    """``C |V| (p / p_ls)^{α t}`` and the prefactor ``C``."""
    if p < 0:
        raise DomainError("p must be nonnegative")
    pl = p_ls(d, alpha)
    if p >= pl:
        raise DomainError(f"p = {p} is not below p_ls = {pl}")
    if p == 0:
        c = 1.0
        return 0.0, c
    ratio_a = 2.0 ** (alpha * (math.log2(p) - log2_p_ls(d, alpha)))
    inv_c = (1 - 2.0 ** (entropy(alpha) / alpha) * p) * (1 - ratio_a)
    c = 1 / inv_c
    value = c * n_vertices * 2.0 ** (alpha * t * (math.log2(p) - log2_p_ls(d, alpha)))
    return value, c


def log_q_iid(p: float, d: int, alpha: float) -> float:
    """Natural log of ``q = (1-p)^{d-1-α} p^α 2^{h(α)} K(d)``."""
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    return (d - 1 - alpha) * math.log1p(-p) + alpha * math.log(p) + (entropy(alpha) + log2_K(d)) * LN2


def q_iid(p: float, d: int, alpha: float) -> float:
    if p == 0:
        return 0.0
    return math.exp(log_q_iid(p, d, alpha))


def p_iid(d: int, alpha: float, rel_tol: float = 1e-15) -> float:
    """Root of ``q(p) = 1`` in ``(0, α/(d-1)]`` by bisection on ``log p``."""
    hi = alpha / (d - 1)
    if log_q_iid(hi, d, alpha) < -1e-12:
        raise InvariantViolation("q(α/(d-1)) < 1: no root in the bracket")
    lo = min(p_ls(d, alpha), hi / 2)
    while log_q_iid(lo, d, alpha) > 0:
        lo /= 2
    llo, lhi = math.log(lo), math.log(hi)
    for _ in range(400):
        mid = (llo + lhi) / 2
        if mid in (llo, lhi) or lhi - llo <= rel_tol:
            break
        if log_q_iid(math.exp(mid), d, alpha) < 0:
            llo = mid
        else:
            lhi = mid
    return math.exp((llo + lhi) / 2)


def p_iid_minus_p_ls(d: int, alpha: float) -> float:
    """``p_iid - p_ls`` without cancellation.

    ``q(p) = 1`` is equivalent to ``p = p_ls (1-p)^{-(d-1-α)/α}``, so the gap
    is ``p_ls · expm1(-(d-1-α)/α · log1p(-p_iid))``.
    """
    pi = p_iid(d, alpha)
    return p_ls(d, alpha) * math.expm1(-(d - 1 - alpha) / alpha * math.log1p(-pi))


def bound_iid(n_vertices: int, p: float, d: int, alpha: float, t: int) -> float:
    """``|V| ((d-1)/(d-2))^2 q^t / (1-q)`` for independent noise."""
    if p < 0:
        raise DomainError("p must be nonnegative")
    if p == 0:
        return 0.0
    lq = log_q_iid(p, d, alpha)
    if lq >= 0:
        raise DomainError(f"q = {math.exp(lq)} >= 1 at p = {p}")
    return n_vertices * ((d - 1) / (d - 2)) ** 2 * math.exp(t * lq) / -math.expm1(lq)


# --------------------------------------------------------------------------
# exact MaxConn


@dataclass(frozen=True)
class MaxConn:
    value: int
    cap_hit: bool
    witness: int = 0
    visited: int = 0


def _qualifies(m: int, size: int, alpha: Fraction) -> bool:
    return m * alpha.denominator >= alpha.numerator * size


def max_conn_alpha_exact(
    g: Graph,
    e: int,
    alpha,
    size_cap: Optional[int] = None,
    target: Optional[int] = None,
    budget: int = 10**7,
) -> MaxConn:
    """Largest connected ``X`` with ``|X ∩ e| >= α |X|`` and ``|X| <= size_cap``.

    Every qualifying set contains a vertex of ``e``, so sets are grown only
    from ``e``-roots, each set from its smallest vertex in an order ranking
    ``e`` first.  A branch is cut when its non-``e`` count already exceeds
    what any qualifying superset could hold: at most ``(1-α) cap`` and at
    most ``(1-α)/α`` times the ``e``-vertices still reachable.  With
    ``target`` set the search stops at the first qualifying set of that size.
    """
    alpha = Fraction(alpha).limit_denominator(10**9) if not isinstance(alpha, Fraction) else alpha
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    n = g.n
    cap = n if size_cap is None else min(size_cap, n)
    if e == 0 or cap == 0:
        return MaxConn(0, False)
    # relabel so that e-vertices come first
    e_list = bits.to_indices(e)
    rest = [v for v in range(n) if not (e >> v) & 1]
    order = e_list + rest
    rank = {v: i for i, v in enumerate(order)}
    nb = [0] * n
    for v in range(n):
        m = 0
        for u in g.adj[v]:
            m |= 1 << rank[u]
        nb[rank[v]] = m
    n_e = len(e_list)
    emask = (1 << n_e) - 1
    full = (1 << n) - 1
    an, ad = alpha.numerator, alpha.denominator
    # non-e count allowed at size cap: floor((1-α) cap)
    non_cap = ((ad - an) * cap) // ad

    best = 0
    best_set = 0
    visited = 0
    done = False

    def grow(sub, closed, ext, above, size, m):
        nonlocal best, best_set, visited, done
        visited += 1
        if visited > budget:
            raise BudgetExceeded(f"more than {budget} connected sets visited")
        if size > best and m * ad >= an * size:
            best, best_set = size, sub
            if target is not None and size >= target:
                done = True
                return
        if size == cap:
            return
        while ext and not done:
            low = ext & -ext
            ext ^= low
            w = low.bit_length() - 1
            is_e = w < n_e
            new_m = m + is_e
            new_size = size + 1
            non_e = new_size - new_m
            if non_e > non_cap:
                continue
            new_closed = closed | nb[w] | low
            new_ext = ext | (nb[w] & ~closed & above)
            avail = new_m + ((new_ext | (above & ~new_closed)) & emask).bit_count()
            # qualifying superset X': non_e * α <= (1-α) |X' ∩ e| <= (1-α) avail
            if non_e * an > (ad - an) * avail:
                continue
            grow(sub | low, new_closed, new_ext, above, new_size, new_m)

    for r in range(n_e):
        if done:
            break
        above = full & ~((1 << (r + 1)) - 1)
        low = 1 << r
        grow(low, low | nb[r], nb[r] & above, above, 1, 1)

    witness = 0
    for i in bits.iter_indices(best_set):
        witness |= 1 << order[i]
    return MaxConn(best, 0 < best == cap < n, witness, visited)


def max_conn_alpha_bruteforce(g: Graph, e: int, alpha) -> int:
    """Check every vertex subset; only for tiny graphs."""
    if g.n > 20:
        raise BudgetExceeded("brute force limited to 20 vertices")
    from qexpander.graphs import components_mask

    alpha = Fraction(alpha)
    best = 0
    for x in range(1, 1 << g.n):
        s = x.bit_count()
        if s <= best or not _qualifies((x & e).bit_count(), s, alpha):
            continue
        if len(components_mask(g, x)) == 1:
            best = s
    return best


def max_conn_alpha_tree(g: Graph, e: int, alpha) -> int:
    """Exact ``MaxConn_α`` on a forest by a subtree-size DP.

    ``best[v][s]`` is the largest ``|X ∩ e|`` over connected ``X`` of size ``s``
    whose top vertex is ``v``; children are merged by max-plus convolution.
    """
    alpha = Fraction(alpha)
    n = g.n
    if len(g.edges) > n - 1:
        raise DomainError("graph is not a forest")
    parent = [-1] * n
    order = []
    seen = [False] * n
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        stack = [root]
        while stack:
            v = stack.pop()
            order.append(v)
            for u in g.adj[v]:
                if not seen[u]:
                    seen[u] = True
                    parent[u] = v
                    stack.append(u)
    if len(order) != n:
        raise InvariantViolation("traversal missed vertices")
    neg = -(10**9)
    tables: list[Optional[np.ndarray]] = [None] * n
    result = 0
    for v in reversed(order):
        cur = np.array([neg, (e >> v) & 1], dtype=np.int64)
        for u in g.adj[v]:
            if parent[u] != v:
                continue
            ch = tables[u]
            tables[u] = None
            merged = np.full(len(cur) + len(ch) - 1, neg, dtype=np.int64)
            merged[: len(cur)] = cur
            for i in range(1, len(cur)):
                if cur[i] <= neg // 2:
                    continue
                np.maximum(merged[i + 1 : i + len(ch)], cur[i] + ch[1:], out=merged[i + 1 : i + len(ch)])
            cur = merged
        tables[v] = cur
        sizes = np.arange(len(cur))
        ok = cur * alpha.denominator >= alpha.numerator * sizes
        ok[0] = False
        if ok.any():
            result = max(result, int(sizes[ok].max()))
    return result


def alpha_closure(g: Graph, x: int, e: int) -> int:
    """Grow ``x`` by vertices of ``∂x ∩ e`` until none remain."""
    nb = g.nbmask
    out = x
    frontier = x
    while frontier:
        reach = 0
        for v in bits.iter_indices(frontier):
            reach |= nb[v]
        frontier = reach & e & ~out
        out |= frontier
    return out


# --------------------------------------------------------------------------
# exact oracle on cycles (α = 1)


def cycle_run_tail_exact(n: int, p: float, t: int) -> float:
    """``P(longest cyclic run of occupied vertices >= t)`` on ``C_n`` with independent occupation ``p``.

    Cyclic strings with every run shorter than ``t`` and at least one empty
    vertex are exactly the closed walks of the run-length transfer matrix, so
    their probability is ``tr(T^n)``.
    """
    if t < 1 or n < 3:
        raise DomainError("need t >= 1 and n >= 3")
    if t > n:
        return 0.0 if p < 1 else 1.0
    T = np.zeros((t, t))
    T[:, 0] = 1 - p
    for i in range(t - 1):
        T[i, i + 1] = p
    below = float(np.trace(np.linalg.matrix_power(T, n)))
    return 1.0 - below


# --------------------------------------------------------------------------
# Monte Carlo tail


@dataclass
class TailEstimate:
    hits: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float
    cap_hits: int = 0


def maxconn_at_least(g: Graph, e: int, alpha, t: int, size_cap: Optional[int] = None, budget: int = 10**7) -> tuple[bool, bool]:
    """Whether ``MaxConn_α(e) >= t``; second value flags a cap hit.

    Without ``size_cap`` the search is unbounded in size and stops at the
    first qualifying set of size ``>= t``; a cap of exactly ``t`` would miss
    larger qualifying sets when none of size ``t`` exists.
    """
    alpha = Fraction(alpha)
    if e.bit_count() < alpha * t:
        return False, False
    cap = g.n if size_cap is None else size_cap
    if alpha == 1:
        from qexpander.graphs import components_mask

        big = max((c.bit_count() for c in components_mask(g, e)), default=0)
        return big >= t, False
    res = max_conn_alpha_exact(g, e, alpha, size_cap=cap, target=t, budget=budget)
    return res.value >= t, res.cap_hit


def estimate_maxconn_tail(
    g: Graph,
    sampler: Callable[[np.random.Generator], np.ndarray],
    alpha,
    t: int,
    trials: int,
    size_cap: Optional[int] = None,
    seed: int = 0,
    confidence: float = 0.99,
    trial_offset: int = 0,
) -> TailEstimate:
    """Fraction of sampled errors with ``MaxConn_α >= t`` and its Wilson interval."""
    hits = 0
    caps = 0
    for i in range(trials):
        e = bits.from_bool_array(sampler(stream_rng(seed, trial_offset + i, "maxconn")))
        hit, cap = maxconn_at_least(g, e, alpha, t, size_cap)
        hits += hit
        caps += cap
    lo, hi = wilson_interval(hits, trials, confidence)
    return TailEstimate(hits, trials, hits / trials if trials else 0.0, lo, hi, caps)


# --------------------------------------------------------------------------
# tree construction


def smallest_ell(alpha) -> int:
    """Smallest integer strictly above ``1/α``."""
    inv = 1 / Fraction(alpha)
    return math.floor(inv) + 1


def survival_probability(offspring: int, p: float) -> float:
    """``1 - s*`` with ``s*`` the smallest fixed point of ``(1 - p + p s)^offspring``."""
    if not 0 <= p <= 1:
        raise DomainError("p must lie in [0, 1]")
    if p == 1:
        return 1.0
    if offspring * p <= 1:
        return 0.0
    s = 0.0
    for _ in range(100_000):
        nxt = (1 - p + p * s) ** offspring
        if abs(nxt - s) < 1e-16:
            break
        s = nxt
    # polish with Newton on f(s) - s from the iterate
    for _ in range(50):
        f = (1 - p + p * s) ** offspring - s
        df = offspring * p * (1 - p + p * s) ** (offspring - 1) - 1
        if df == 0:
            break
        step = f / df
        s -= step
        if abs(step) < 1e-17:
            break
    return 1.0 - s


def simulate_survival(offspring: int, p: float, trials: int, seed: int, generations: int = 200,
                      alive_cap: int = 10_000) -> tuple[int, int]:
    """Galton–Watson lineages with ``Binomial(offspring, p)`` children from one ancestor.

    A lineage counts as surviving once it reaches ``alive_cap`` individuals
    (its extinction chance is then below ``s*^cap``) or is alive after
    ``generations`` steps.
    """
    rng = stream_rng(seed, 0, "branching")
    pop = np.ones(trials, dtype=np.int64)
    survived = np.zeros(trials, dtype=bool)
    for _ in range(generations):
        live = (pop > 0) & ~survived
        if not live.any():
            break
        pop[live] = rng.binomial(offspring * pop[live], p)
        survived |= pop >= alive_cap
    survived |= pop > 0
    return int(survived.sum()), trials


@dataclass
class TreeExperiment:
    d: int
    ell: int
    c: int
    k: int
    p: float
    n_vertices: int
    trials: int
    ev_fraction: float
    s_alpha_fraction: float
    s_size_mean: float
    maxconn_mean: Optional[float]
    survival_hits: int
    survival_trials: int
    survival_estimate: float
    survival_ci: tuple[float, float]
    survival_analytic: float
    alpha: Optional[float] = None
    notes: dict = field(default_factory=dict)


def _path_event(d: int, c: int, k: int, e: np.ndarray) -> np.ndarray:
    """For each vertex at depth ``(c-1)k``, the largest ``|E ∩ path|`` over downward paths of ``k`` vertices."""
    b = d - 1
    depth_top = (c - 1) * k
    bottom = c * k - 1
    lvl = tree_level(d, bottom)
    best = e[lvl.start : lvl.stop].astype(np.int64)
    for depth in range(bottom - 1, depth_top - 1, -1):
        lv = tree_level(d, depth)
        best = e[lv.start : lv.stop].astype(np.int64) + best.reshape(-1, b).max(axis=1)
    return best


def tree_lower_bound_experiment(
    d: int,
    ell: int,
    c: int,
    k: int,
    p: float,
    trials: int,
    seed: int,
    alpha: Optional[float] = None,
    lineages: int = 100_000,
    exact_maxconn: bool = True,
) -> TreeExperiment:
    """Sample independent errors on the complete ``(d-1)``-ary tree of height ``ck``.

    Reports the fraction of depth-``(c-1)k`` vertices whose event holds (some
    downward path of ``k`` vertices carries at least ``k/ℓ`` errors), how often
    the resulting set ``S`` is an α-subset, the exact ``MaxConn_α`` when the
    tree is small, and the survival of the ``Binomial((d-1)^ℓ, p)`` branching
    process against its fixed-point value.
    """
    if alpha is not None:
        ell = smallest_ell(alpha)
    height = c * k
    g = complete_tree(d, height)
    top = (c - 1) * k
    n_upper = (((d - 1) ** top) - 1) // (d - 2)
    rng = stream_rng(seed, 0, "tree")
    ev_total = 0
    alpha_ok = 0
    s_sizes = []
    maxconn = []
    n_top = (d - 1) ** top
    a_frac = Fraction(alpha).limit_denominator(10**6) if alpha is not None else None
    for _ in range(trials):
        e = rng.random(g.n) < p
        best = _path_event(d, c, k, e)
        holds = best * ell >= k
        ev_total += int(holds.sum())
        s_size = n_upper + k * int(holds.sum())
        # paths chosen by argmax carry exactly best[v] errors
        s_err = int(e[:n_upper].sum()) + int(best[holds].sum())
        s_sizes.append(s_size)
        if a_frac is not None and s_err * a_frac.denominator >= a_frac.numerator * s_size:
            alpha_ok += 1
        if exact_maxconn and a_frac is not None and g.n <= 5000:
            maxconn.append(max_conn_alpha_tree(g, bits.from_bool_array(e), a_frac))
    offspring = (d - 1) ** ell
    hits, n_lin = simulate_survival(offspring, p, lineages, seed)
    lo, hi = wilson_interval(hits, n_lin, 0.99)
    return TreeExperiment(
        d=d, ell=ell, c=c, k=k, p=p, n_vertices=g.n, trials=trials,
        ev_fraction=ev_total / (trials * n_top),
        s_alpha_fraction=alpha_ok / trials if a_frac is not None else float("nan"),
        s_size_mean=float(np.mean(s_sizes)),
        maxconn_mean=float(np.mean(maxconn)) if maxconn else None,
        survival_hits=hits, survival_trials=n_lin, survival_estimate=hits / n_lin,
        survival_ci=(lo, hi), survival_analytic=survival_probability(offspring, p),
        alpha=alpha,
    )
