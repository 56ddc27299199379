from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qexpander import bits
from qexpander.errors import PreconditionViolated, ReplayMismatch
from qexpander.graphs import components_mask
from qexpander.hgp import adjacency_graph
from qexpander.locality import (
    catalog_numerators,
    check_neighbourhood,
    verify_correction_criterion,
    verify_delta_restriction,
    verify_locality,
    verify_syndrome_restriction,
)
from qexpander.ssf import DecodeRun, DecoderParams, build_flip_catalog, decode_ssf, delta


@pytest.fixture(scope="module")
def setup(small_code):
    return small_code, {s: build_flip_catalog(small_code, s) for s in "XZ"}, adjacency_graph(small_code)


def random_error(n, seed, p):
    return bits.from_bool_array(np.random.default_rng(seed).random(n) < p)


@given(st.integers(0, 10**6), st.sampled_from("XZ"), st.floats(0.01, 0.1))
def test_syndrome_restriction(setup, seed, side, p):
    code, cats, g = setup
    u = random_error(code.n, seed, p)
    w = u & random_error(code.n, seed + 1, 0.5)
    for k in components_mask(g, u):
        assert verify_syndrome_restriction(cats[side].side, w, k, u)


def test_syndrome_restriction_precondition(setup):
    code, cats, g = setup
    with pytest.raises(PreconditionViolated):
        verify_syndrome_restriction(cats["X"].side, 0b11, 0b1, 0b1)


@given(st.integers(0, 10**6), st.sampled_from("XZ"))
def test_delta_restriction(setup, seed, side):
    code, cats, g = setup
    cat = cats[side]
    e = random_error(code.n, seed, 0.05)
    sigma = cat.side.syndrome(e)
    for k in components_mask(g, e):
        assert verify_delta_restriction(cat, sigma, k)


def test_numerators_match_fraction_delta(setup):
    code, cats, g = setup
    cat = cats["X"]
    sigma = cat.side.syndrome(random_error(code.n, 3, 0.08))
    nums = catalog_numerators(cat, sigma)
    for gi, j in list(cat.entries())[::53]:
        size = int(cat.sub_size[j])
        assert Fraction(int(nums[gi, j]), size) == delta(sigma, cat.entry_syndrome(gi, j), size)


@pytest.mark.parametrize("params", [DecoderParams(), DecoderParams(mode="alg1")], ids=["alg2", "alg1"])
def test_locality_replay_random_runs(setup, params):
    code, cats, g = setup
    for i in range(80):
        for side in "XZ":
            cat = cats[side]
            e = random_error(code.n, 1000 + i, 0.04)
            run = decode_ssf(cat, cat.side.syndrome(e), params)
            rep = verify_locality(code, cat, e, run, params, g)
            assert rep.passed
            assert sum(len(c.qubits) for c in rep.components) == run.support(e).bit_count()
            for c in rep.components:
                assert all(c.flags.values())


def test_replay_rejects_foreign_input(setup):
    code, cats, g = setup
    cat = cats["X"]
    params = DecoderParams()
    e = bits.from_indices([1, 40])
    run = decode_ssf(cat, cat.side.syndrome(e), params)
    with pytest.raises(ReplayMismatch):
        verify_locality(code, cat, e ^ (1 << 70), run, params, g)


def test_replay_rejects_non_maximal_flip(setup):
    code, cats, g = setup
    cat = cats["X"]
    params = DecoderParams(mode="alg1")
    for seed in range(200):
        e = random_error(code.n, seed, 0.05)
        run = decode_ssf(cat, cat.side.syndrome(e), params)
        if run.n_flips >= 1:
            break
    gi, j = run.steps[0]
    # swap the first step for a weaker subset of the same generator
    alt = next(jj for jj in np.flatnonzero(cat.valid[gi]) if jj != j)
    qs = cat.entry_qubits(gi, int(alt))
    forged = DecodeRun(run.sigma0, [qs] + run.flips[1:], run.weights, run.e_hat, run.termination,
                       run.mode, run.beta, steps=[(gi, int(alt))] + run.steps[1:])
    with pytest.raises(ReplayMismatch):
        verify_locality(code, cat, e, forged, params, g)


def test_check_neighbourhood(setup):
    code, cats, g = setup
    side = cats["Z"].side
    k = bits.from_indices([0, 99])
    assert check_neighbourhood(side, k) == side.checks.columns[0] | side.checks.columns[99]


def test_correction_criterion_chain(chain_code):
    g = adjacency_graph(chain_code)
    params = DecoderParams()
    for side in "XZ":
        cat = build_flip_catalog(chain_code, side)
        for q in range(chain_code.n):
            res = verify_correction_criterion(chain_code, cat, 1 << q, params, 1, g)
            # a single error already sits in a qualifying set of size 1/α = 5
            assert not res.applicable and res.maxconn > 1 and res.corrected
        res = verify_correction_criterion(chain_code, cat, 0, params, 1, g)
        assert res.applicable and res.corrected and not res.counterexample
