import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qexpander import bits
from qexpander.errors import DomainError, InfeasibleKnobs
from qexpander.graphs import circular_ladder, cycle_graph, path_graph
from qexpander.noise import (
    NoiseSpec,
    bfs_burst,
    burst_table,
    depolarizing_marginals,
    exact_burst_inclusion,
    ls_empirical_check,
    make_sampler,
    pauli_marginals,
    sample_cluster_burst,
    sample_cluster_burst_array,
    sample_iid,
    stream_rng,
)
from qexpander.stats import wilson_interval


@given(st.integers(0, 2**63), st.integers(0, 10**6))
def test_streams_reproducible(seed, trial):
    a = stream_rng(seed, trial, "x").random(8)
    b = stream_rng(seed, trial, "x").random(8)
    assert (a == b).all()
    assert not (a == stream_rng(seed, trial + 1, "x").random(8)).all()
    assert not (a == stream_rng(seed, trial, "y").random(8)).all()


def test_iid_rate_within_ci():
    n, p, trials = 50, 0.1, 4000
    hits = sum(sample_iid(n, p, 7, t).bit_count() for t in range(trials))
    lo, hi = wilson_interval(hits, n * trials, 0.999)
    assert lo <= p <= hi


def test_marginals():
    assert depolarizing_marginals(0.3) == pytest.approx((0.2, 0.2))
    assert pauli_marginals(0.1, 0.05, 0.2) == pytest.approx((0.15, 0.25))
    with pytest.raises(DomainError):
        pauli_marginals(0.5, 0.3, 0.3)


def test_bfs_burst_order():
    g = path_graph(6)
    assert bfs_burst(g, 2, 3) == (2, 1, 3)
    assert bfs_burst(g, 0, 4) == (0, 1, 2, 3)
    assert bfs_burst(g, 5, 10) == (5, 4, 3, 2, 1, 0)


def test_spec_validation():
    with pytest.raises(DomainError):
        NoiseSpec(kind="nope")
    with pytest.raises(DomainError):
        NoiseSpec(p=1.0)
    spec = NoiseSpec(kind="cluster_burst", p=0.2, burst_size=2)
    assert NoiseSpec.from_json(spec.to_json()) == spec


def test_infeasible_anchor_rate():
    g = cycle_graph(10)
    table = burst_table(g, 0.2, 2)
    cap = table.certificate.anchor_rate
    assert cap == pytest.approx((0.2 / table.certificate.multiplicity) ** 2)
    with pytest.raises(InfeasibleKnobs):
        burst_table(g, 0.2, 2, anchor_rate=cap * 1.01)


@pytest.mark.parametrize("g,b", [(cycle_graph(10), 2), (path_graph(10), 3), (circular_ladder(5), 2)])
def test_burst_certificate_dominates_exact_inclusion(g, b):
    p = 0.4
    table = burst_table(g, p, b)
    cert = table.certificate
    for size in range(1, 5):
        for f in itertools.combinations(range(g.n), size):
            exact = exact_burst_inclusion(table, bits.from_indices(f))
            assert exact <= cert.bound(size) * (1 + 1e-9)
            assert cert.bound(size) <= p**size * (1 + 1e-9)


def test_burst_sampler_matches_exact_inclusion():
    g = cycle_graph(8)
    table = burst_table(g, 0.5, 2)
    trials = 20000
    rng = stream_rng(3, 0, "burst")
    draws = np.array([sample_cluster_burst_array(table, rng) for _ in range(trials)])
    for f in [(0,), (0, 1), (0, 4), (2, 3, 4)]:
        k = int(draws[:, list(f)].all(axis=1).sum())
        lo, hi = wilson_interval(k, trials, 0.999)
        assert lo <= exact_burst_inclusion(table, bits.from_indices(f)) <= hi


def test_sample_cluster_burst_seeded():
    g = path_graph(12)
    a, cert = sample_cluster_burst(g, 0.3, 2, seed=4, trial=9)
    b, _ = sample_cluster_burst(g, 0.3, 2, seed=4, trial=9)
    assert a == b and cert.burst_size == 2


def test_ls_check_passes_for_iid_and_bursts():
    g = path_graph(12)
    for spec in (NoiseSpec(p=0.3), NoiseSpec(kind="cluster_burst", p=0.3, burst_size=2)):
        rep = ls_empirical_check(make_sampler(spec, g.n, g), spec.p, g, f_max=3, trials=5000, seed=1)
        assert rep.ok, rep.violations[:3]


def test_ls_check_flags_correlated_noise():
    g = path_graph(12)

    def all_or_nothing(rng):
        return np.full(12, rng.random() < 0.3)

    rep = ls_empirical_check(all_or_nothing, 0.3, g, f_max=3, trials=5000, seed=1)
    assert not rep.ok
