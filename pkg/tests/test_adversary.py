import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdpcomp import linops
from qdpcomp.adversary import (
    GlobalTest, LoStarTest, OneWayLoccTest, falsify, measurement_test_from_json, parity_test,
    sample_lostar, sample_oneway_locc,
)
from qdpcomp.channels import (
    PHI_PLUS, NeighborRelation, bell_joint, bell_relation, compose_tensor, depolarizing, identity,
    ket, product_relation, proj, random_channel,
)
from qdpcomp.ensembles import random_density
from qdpcomp.errors import DimensionMismatch
from qdpcomp import accountant as acc
from qdpcomp.reproduce import certified_delta

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def spectrum_in_unit_interval(m):
    w = np.linalg.eigvalsh(m)
    return w.min() >= -1e-10 and w.max() <= 1 + 1e-10


def test_oneway_single_outcome_is_product_test():
    rng = np.random.default_rng(0)
    t = sample_oneway_locc([2, 3], 1, rng)
    assert np.allclose(t.operator(), np.kron(np.eye(2), t.conditional_effects[0]))


def test_oneway_always_accept():
    rng = np.random.default_rng(1)
    first = sample_oneway_locc([3, 2], 3, rng).first_povm
    t = OneWayLoccTest(first, [np.eye(2)] * 3)
    assert np.allclose(t.operator(), np.eye(6))


def test_oneway_validation():
    with pytest.raises(ValueError):
        OneWayLoccTest([np.eye(2) * 0.5], [np.eye(2)])
    with pytest.raises(DimensionMismatch):
        OneWayLoccTest([np.eye(2)], [np.eye(2), np.eye(2)])
    with pytest.raises(DimensionMismatch):
        sample_oneway_locc([2, 2, 2], None, np.random.default_rng(0))


@settings(max_examples=50, deadline=None)
@given(seed=seeds, outcomes=st.integers(1, 5), reverse=st.booleans())
def test_oneway_factorization_and_range(seed, outcomes, reverse):
    rng = np.random.default_rng(seed)
    t = sample_oneway_locc([2, 3], outcomes, rng, reverse=reverse)
    m = t.operator()
    assert spectrum_in_unit_interval(m)
    xi1, xi2 = random_density(2, rng), random_density(3, rng)
    assert abs(linops.expectation(m, np.kron(xi1, xi2)) - t.product_acceptance(xi1, xi2)) <= 1e-10


def test_lostar_constant_weight_is_identity():
    t = sample_lostar([2, 3], np.random.default_rng(2))
    ones = LoStarTest(t.local_povms, np.ones_like(t.weights))
    assert np.allclose(ones.operator(), np.eye(6))
    zeros = LoStarTest(t.local_povms, np.zeros_like(t.weights))
    assert np.array_equal(zeros.operator(), np.zeros((6, 6)))


def test_parity_fixture_operator():
    expected = proj(ket("01")) + proj(ket("10"))
    assert np.array_equal(parity_test().operator(), expected)


def test_lostar_validation():
    basis = (proj([1, 0]), proj([0, 1]))
    with pytest.raises(ValueError):
        LoStarTest((basis,), np.array([1.5, 0.0]))
    with pytest.raises(DimensionMismatch):
        LoStarTest((basis, basis), np.zeros(2))


@settings(max_examples=40, deadline=None)
@given(seed=seeds, extremal=st.booleans())
def test_lostar_expectation_identity_and_range(seed, extremal):
    rng = np.random.default_rng(seed)
    dims = [2, 2, 2]
    t = sample_lostar(dims, rng, extremal=extremal)
    m = t.operator()
    assert spectrum_in_unit_interval(m)
    states = [random_density(d, rng) for d in dims]
    joint = linops.tensor_all(states)
    assert abs(linops.expectation(m, joint) - t.expected_weight(states)) <= 1e-10


def test_serialization_round_trip():
    rng = np.random.default_rng(3)
    for t in (sample_oneway_locc([2, 2], None, rng), sample_lostar([2, 2], rng), parity_test(),
              GlobalTest(proj(PHI_PLUS), "bell")):
        back = measurement_test_from_json(t.to_json())
        assert np.allclose(back.operator(), t.operator())
        assert type(back) is type(t)


def test_falsify_no_go_configuration():
    rep = falsify(10.0, 0.9, bell_joint(), bell_relation(), "all-povm", trials=50, seed=1)
    assert rep.found
    assert rep.worst_margin == pytest.approx(0.1, abs=1e-9)
    back = measurement_test_from_json(rep.witness["test"])
    assert np.allclose(back.operator(), proj(PHI_PLUS))


def test_falsify_trivial_relation():
    same = NeighborRelation([(proj(ket("0")), proj(ket("0")))])
    rep = falsify(0.0, 0.0, identity(2), same, "all-povm", trials=100, seed=0)
    assert not rep.found


def test_falsify_is_deterministic():
    ch = compose_tensor([depolarizing(0.4), depolarizing(0.6)])
    rel = product_relation([bell_relation()] * 2)
    a = falsify(0.5, 0.1, ch, rel, "one-way-locc", trials=200, seed=9, out_dims=[2, 2])
    b = falsify(0.5, 0.1, ch, rel, "one-way-locc", trials=200, seed=9, out_dims=[2, 2])
    assert a.to_json() == b.to_json()


def test_falsify_local_classes_need_split():
    with pytest.raises(DimensionMismatch):
        falsify(0.0, 0.0, identity(4), NeighborRelation([(np.eye(4) / 4, np.eye(4) / 4)]),
                "lo-star", trials=1, out_dims=None)


def test_falsify_detects_understated_delta():
    # a claim that is too strong must be caught by the deterministic fixtures alone
    ch = compose_tensor([depolarizing(0.4), depolarizing(0.6)])
    rel = product_relation([bell_relation()] * 2)
    for cls in ("one-way-locc", "lo-star", "all-povm"):
        rep = falsify(0.1, 0.0, ch, rel, cls, trials=0, seed=0, out_dims=[2, 2])
        assert rep.found, cls


def test_basic_composition_small_batch():
    rng = np.random.default_rng(4)
    c1, c2 = random_channel(2, 2, 2, rng), random_channel(2, 2, 2, rng)
    r1 = NeighborRelation([(random_density(2, rng), random_density(2, rng))])
    r2 = NeighborRelation([(random_density(2, rng), random_density(2, rng))])
    e1, e2 = 0.3, 0.2
    res = acc.basic_compose_locc([(e1, certified_delta(c1, r1, e1)), (e2, certified_delta(c2, r2, e2))])
    rep = falsify(res.eps, res.delta, compose_tensor([c1, c2]), product_relation([r1, r2]),
                  "one-way-locc", trials=300, seed=5, out_dims=[2, 2])
    assert not rep.found
    assert rep.worst_margin <= 0
