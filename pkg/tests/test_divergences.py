import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdpcomp import linops
from qdpcomp.channels import (
    PHI_MINUS, PHI_PLUS, NeighborRelation, bell_joint, bell_relation, compose_tensor, depolarizing,
    identity, ket, marginal_channel, proj, random_channel,
)
from qdpcomp.divergences import (
    INF, classical_kl, classical_renyi, d_mmgf, d_petz, d_sandwiched, default_eps_grid, delta_min,
    jensen_moment_check, log_mmgf, measured_outcome_pairs, measured_renyi_lower, mmgf,
    mmgf_exponential_form, optimal_test, privacy_curve, privacy_loss_operator, verify_qdp,
)
from qdpcomp.ensembles import random_density, random_measurement_operator, random_psd
from qdpcomp.errors import DimensionMismatch, DomainError

seeds = st.integers(min_value=0, max_value=2**31 - 1)
P = np.diag([0.75, 0.25])
Q = np.diag([0.25, 0.75])
D2 = 0.8472978603872037  # log(0.75^2/0.25 + 0.25^2/0.75) = log(7/3)


def test_delta_min_examples():
    for eps in (0.0, 1.0, 10.0):
        assert delta_min(proj(PHI_PLUS), proj(PHI_MINUS), eps) == pytest.approx(1.0, abs=1e-12)
    rho = random_density(3, np.random.default_rng(0))
    assert delta_min(rho, rho, 0.0) <= 1e-12
    assert delta_min(P, Q, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert delta_min(P, Q, math.log(3)) <= 1e-12
    with pytest.raises(DimensionMismatch):
        delta_min(np.eye(2) / 2, np.eye(3) / 3, 0.0)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=st.integers(2, 8))
def test_delta_min_monotone_and_optimal(seed, d):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(d, rng), random_density(d, rng)
    grid = np.linspace(0, 3, 13)
    vals = [delta_min(rho, sigma, e) for e in grid]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    eps = float(rng.uniform(0, 2))
    h = rho - math.exp(eps) * sigma
    best = delta_min(rho, sigma, eps)
    for _ in range(50):
        assert linops.expectation(random_measurement_operator(d, rng), h) <= best + 1e-9
    assert abs(linops.expectation(optimal_test(rho, sigma, eps), h) - best) <= 1e-9


def test_verify_qdp_examples():
    joint = bell_joint()
    rel = bell_relation()
    marg = marginal_channel(joint, [2, 2], [0])
    assert verify_qdp(marg, rel, 0.0, 0.0).passed
    v = verify_qdp(joint, rel, 10.0, 0.99)
    assert not v.passed
    assert np.allclose(v.witness, proj(PHI_PLUS), atol=1e-12)
    assert v.margin == pytest.approx(0.01, abs=1e-12)
    assert verify_qdp(identity(2), rel, 0.0, 1.0).passed
    report = v.to_json()
    assert set(report) >= {"pass", "worst_pair_index", "witness", "margin"}


def test_verify_qdp_checks_both_orientations():
    rel = NeighborRelation([(np.diag([0.9, 0.1]), np.diag([0.5, 0.5]))])
    # forward needs e^eps >= 1.8, reverse needs e^eps >= 5
    assert not verify_qdp(None, rel, math.log(2), 0.0).passed
    assert verify_qdp(None, rel, math.log(5), 0.0).passed


def test_privacy_curve_examples():
    same = NeighborRelation([(proj(ket("0")), proj(ket("0")))])
    curve = privacy_curve(identity(2), same)
    assert all(d == 0 for _, d in curve.points)
    pts = dict(privacy_curve(depolarizing(0.5), bell_relation(), [0.0, math.log(3)]).points)
    assert pts[0.0] == pytest.approx(0.5)
    assert pts[math.log(3)] == pytest.approx(0.0, abs=1e-12)
    full = privacy_curve(random_channel(2, 2, 2, np.random.default_rng(3)), bell_relation())
    ds = [d for _, d in full.points]
    assert len(ds) == len(default_eps_grid()) == 42
    assert all(b <= a for a, b in zip(ds, ds[1:]))
    assert full.to_csv().splitlines()[0] == "eps,delta"


def test_privacy_loss_operator_examples():
    rho = random_density(2, np.random.default_rng(1))
    assert np.allclose(privacy_loss_operator(rho, rho), 0, atol=1e-12)
    L = privacy_loss_operator(np.diag([0.6, 0.4]), np.diag([0.5, 0.5]))
    assert np.allclose(L, np.diag([math.log(1.2), math.log(0.8)]))
    assert privacy_loss_operator(proj(ket("0")), proj(ket("1"))) == INF


def test_privacy_loss_operator_restricted_support():
    # rho inside supp(sigma) but rank deficient there: log undefined
    with pytest.raises(DomainError):
        privacy_loss_operator(np.diag([1.0, 0.0]), np.eye(2) / 2)
    sigma = np.diag([0.5, 0.5, 0.0])
    L = privacy_loss_operator(np.diag([0.6, 0.4, 0.0]), sigma)
    assert np.allclose(L, np.diag([math.log(1.2), math.log(0.8), 0.0]))


def test_mmgf_examples():
    rho = random_density(3, np.random.default_rng(2))
    assert mmgf(rho, rho, 2.5) == pytest.approx(1.0)
    assert mmgf(np.diag([0.6, 0.4]), np.diag([0.5, 0.5]), 2) == pytest.approx(1.04, abs=1e-12)
    assert mmgf(P, Q, 1) == pytest.approx(1.0, abs=1e-12)
    assert mmgf(proj(ket("0")), proj(ket("1")), 0.5) == INF
    assert log_mmgf(proj(ket("0")), proj(ket("1")), 0.5) == INF


@settings(max_examples=40, deadline=None)
@given(seed=seeds, lam=st.floats(0.1, 8.0))
def test_mmgf_forms_agree(seed, lam):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(3, rng), random_density(3, rng)
    a, b = mmgf(rho, sigma, lam), mmgf_exponential_form(rho, sigma, lam)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


@settings(max_examples=30, deadline=None)
@given(seed=seeds, lam=st.sampled_from([0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 8.0, 16.0]))
def test_mmgf_multiplicative_on_products(seed, lam):
    rng = np.random.default_rng(seed)
    c1, c2 = random_channel(2, 2, 2, rng), random_channel(2, 2, 2, rng)
    r1, s1, r2, s2 = (random_density(2, rng) for _ in range(4))
    whole = mmgf(np.kron(r1, r2), np.kron(s1, s2), lam, compose_tensor([c1, c2]))
    parts = mmgf(r1, s1, lam, c1) * mmgf(r2, s2, lam, c2)
    assert abs(whole - parts) <= 1e-10 * parts


def test_d_mmgf_examples():
    rho = random_density(2, np.random.default_rng(4))
    assert d_mmgf(rho, rho, 3) == pytest.approx(0.0, abs=1e-12)
    # moment order alpha: (1/2) log sum q (p/q)^3 for p=(0.6,0.4), q=(0.5,0.5)
    expected = 0.5 * math.log(0.5 * 1.2**3 + 0.5 * 0.8**3)
    assert d_mmgf(np.diag([0.6, 0.4]), np.diag([0.5, 0.5]), 3) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.0566643, abs=1e-7)
    assert d_mmgf(proj(ket("0")), proj(ket("1")), 2) == INF
    # identity linking the moment generating function and the divergence
    for lam in (1.0, 2.0, 4.0):
        assert log_mmgf(P, Q, lam + 1) / lam == pytest.approx(d_mmgf(P, Q, lam + 1), abs=1e-12)


def test_petz_and_sandwiched_examples():
    rho = random_density(3, np.random.default_rng(5))
    assert d_petz(rho, rho, 2) == pytest.approx(0.0, abs=1e-12)
    assert d_sandwiched(rho, rho, 2) == pytest.approx(0.0, abs=1e-12)
    assert d_petz(P, Q, 2) == pytest.approx(D2, abs=1e-12)
    assert d_sandwiched(P, Q, 2) == pytest.approx(D2, abs=1e-12)
    assert d_petz(proj(ket("0")), proj(ket("1")), 2) == INF
    assert d_sandwiched(proj(ket("0")), proj(ket("1")), 2) == INF
    assert d_petz(P, Q, 0.5) == pytest.approx(classical_renyi([0.75, 0.25], [0.25, 0.75], 0.5))


@settings(max_examples=40, deadline=None)
@given(seed=seeds, alpha=st.floats(1.1, 6.0))
def test_sandwiched_below_petz(seed, alpha):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(2, rng), random_density(2, rng)
    assert d_sandwiched(rho, sigma, alpha) <= d_petz(rho, sigma, alpha) + 1e-10


def test_classical_divergences():
    assert classical_renyi([0.3, 0.7], [0.3, 0.7], 2) == pytest.approx(0.0)
    assert classical_renyi([0.75, 0.25], [0.25, 0.75], 2) == pytest.approx(D2, abs=1e-12)
    assert classical_renyi([1.0, 0.0], [0.0, 1.0], 2) == INF
    assert classical_kl([1.0, 0.0], [0.0, 1.0]) == INF
    assert classical_renyi([0.6, 0.4], [0.5, 0.5], 1) == pytest.approx(classical_kl([0.6, 0.4], [0.5, 0.5]))
    with pytest.raises(ValueError):
        classical_renyi([0.5, 0.6], [0.5, 0.5], 2)


@settings(max_examples=60, deadline=None)
@given(eps=st.floats(0.01, 5.0), t=st.floats(0.0, 1.0))
def test_kl_bound_for_eps_dp_pair(eps, t):
    # binary pair with likelihood ratios exactly e^{+-eps}; t mixes towards uniform
    e = math.exp(eps)
    p_extreme = np.array([e / (1 + e), 1 / (1 + e)])
    p = t * p_extreme + (1 - t) * np.array([0.5, 0.5])
    q = p[::-1]
    assert np.all(p / q <= e * (1 + 1e-12)) and np.all(q / p <= e * (1 + 1e-12))
    assert classical_kl(p, q) <= eps * (e - 1) / (e + 1) + 1e-12


def test_measured_renyi_examples():
    assert measured_renyi_lower(P, Q, 2, n=20) == pytest.approx(D2, abs=1e-12)
    rho = random_density(3, np.random.default_rng(6))
    assert measured_renyi_lower(rho, rho, 3, n=20) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, alpha=st.sampled_from([1.5, 2.0, 3.0, 5.0]))
def test_measured_renyi_below_mmgf_divergence(seed, alpha):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(2, rng), random_density(2, rng)
    assert measured_renyi_lower(rho, sigma, alpha, n=50, seed=seed) <= d_mmgf(rho, sigma, alpha) + 1e-9


@settings(max_examples=25, deadline=None)
@given(seed=seeds, alpha=st.sampled_from([1.5, 2.0, 3.0]))
def test_sandwiched_data_processing_on_measurements(seed, alpha):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(3, rng), random_density(3, rng)
    bound = d_sandwiched(rho, sigma, alpha)
    for p, q in measured_outcome_pairs(rho, sigma, n=40, seed=seed):
        assert classical_renyi(p, q, alpha) <= bound + 1e-9


def test_jensen_examples():
    tau = random_density(3, np.random.default_rng(8))
    lhs, rhs = jensen_moment_check(np.eye(3), tau, 2.5)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)
    x = random_psd(3, np.random.default_rng(9))
    lhs, rhs = jensen_moment_check(x, tau, 1.0)
    assert lhs == pytest.approx(rhs)
    with pytest.raises(DomainError):
        jensen_moment_check(-np.eye(2), np.eye(2) / 2, 2.0)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, d=st.integers(1, 8), t=st.floats(1.0, 4.0))
def test_jensen_property(seed, d, t):
    rng = np.random.default_rng(seed)
    lhs, rhs = jensen_moment_check(random_psd(d, rng), random_density(d, rng), t)
    assert lhs <= rhs + 1e-12 * max(1.0, rhs)
