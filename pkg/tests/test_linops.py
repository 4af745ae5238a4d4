import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdpcomp import linops
from qdpcomp.channels import PHI_MINUS, PHI_PLUS, ket, proj
from qdpcomp.ensembles import random_density, random_hermitian, random_measurement_operator
from qdpcomp.errors import DimensionMismatch, DimensionOverflow, DomainError, NotHermitian

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def test_eig_diagonal_input():
    s = linops.hermitian_eig(np.diag([1.0, 3.0]))
    assert np.allclose(s.eigenvalues, [3, 1])
    assert np.allclose(np.abs(s.eigenvectors), [[0, 1], [1, 0]])


def test_eig_pauli_x():
    s = linops.hermitian_eig(np.array([[0, 1], [1, 0]]))
    assert np.allclose(s.eigenvalues, [1, -1])


def test_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        linops.hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_eig_is_reproducible_for_degenerate_spectrum():
    a = linops.hermitian_eig(np.eye(3))
    b = linops.hermitian_eig(np.eye(3))
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, d=st.integers(1, 64))
def test_eig_reconstruction_and_orthonormality(seed, d):
    h = random_hermitian(d, np.random.default_rng(seed))
    s = linops.hermitian_eig(h)
    assert np.all(np.diff(s.eigenvalues) <= 0)
    assert np.linalg.norm(s.reconstruct() - h) <= 1e-10 * np.linalg.norm(h)
    v = s.eigenvectors
    assert np.linalg.norm(v.conj().T @ v - np.eye(d)) <= 1e-10


def test_matrix_fn_examples():
    assert np.allclose(linops.matrix_fn_on_support(np.diag([4.0, 0.0]), np.sqrt, support_of=np.diag([4.0, 0.0])),
                       np.diag([2, 0]))
    out = linops.matrix_fn_on_support(np.diag([2.0, 3.0]), lambda x: x ** -0.5, support_of=np.diag([1.0, 0.0]))
    assert np.allclose(out, np.diag([2 ** -0.5, 0]))
    assert out[1, 1] == 0
    assert np.allclose(linops.matrix_fn_on_support(np.diag([0.5, 0.5]), lambda x: x**2), np.diag([0.25, 0.25]))


def test_matrix_fn_domain_error():
    with pytest.raises(DomainError):
        linops.matrix_fn_on_support(np.diag([1.0, -1.0]), np.log, support_of=np.eye(2))


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=st.integers(1, 8))
def test_matrix_fn_identity_is_support_restriction(seed, d):
    rho = random_density(d, np.random.default_rng(seed), rank=max(1, d - 1))
    out = linops.matrix_fn_on_support(rho, lambda x: x, support_of=rho)
    assert np.allclose(out, rho, atol=1e-12)


def test_tensor_examples():
    assert np.array_equal(linops.tensor(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(linops.tensor(np.diag([1, 0]), np.diag([0, 1])), np.diag([0, 1, 0, 0]))
    t = linops.tensor(proj(ket("0")), proj(PHI_PLUS))
    assert abs(np.trace(t) - 1) < 1e-15
    assert np.linalg.matrix_rank(t) == 1


def test_tensor_overflow():
    with pytest.raises(DimensionOverflow):
        linops.tensor(np.eye(16), np.eye(8))
    assert linops.tensor(np.eye(16), np.eye(8), max_dim=128).shape == (128, 128)


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_tensor_associative_and_trace_multiplicative(seed):
    rng = np.random.default_rng(seed)
    # small Gaussian integers: every product is exact, so associativity is exact
    ia, ib, ic = (rng.integers(-9, 10, (2, 2)) + 1j * rng.integers(-9, 10, (2, 2)) for _ in range(3))
    assert np.array_equal(linops.tensor(linops.tensor(ia, ib), ic), linops.tensor(ia, linops.tensor(ib, ic)))
    a, b, c = (random_hermitian(2, rng) for _ in range(3))
    left, right = linops.tensor(linops.tensor(a, b), c), linops.tensor(a, linops.tensor(b, c))
    assert np.abs(left - right).max() <= 4 * np.finfo(float).eps * np.abs(left).max()
    assert abs(np.trace(linops.tensor(a, b)) - np.trace(a) * np.trace(b)) <= 1e-12


def test_partial_trace_bell_states():
    for phi in (PHI_PLUS, PHI_MINUS):
        assert np.allclose(linops.partial_trace(proj(phi), [2, 2], [0]), np.eye(2) / 2, atol=1e-15)


def test_partial_trace_of_product(rng):
    rho, sigma = random_density(3, rng), random_density(2, rng)
    assert np.allclose(linops.partial_trace(np.kron(rho, sigma), [3, 2], [0]), rho)
    assert np.allclose(linops.partial_trace(np.kron(rho, sigma), [3, 2], [1]), sigma)
    assert np.allclose(linops.partial_trace(np.kron(rho, sigma), [3, 2], [0, 1]), np.kron(rho, sigma))


def test_partial_trace_three_parties(rng):
    a, b, c = random_density(2, rng), random_density(3, rng), random_density(2, rng)
    abc = np.kron(np.kron(a, b), c)
    assert np.allclose(linops.partial_trace(abc, [2, 3, 2], [0, 2]), np.kron(a, c))
    assert np.allclose(linops.partial_trace(abc, [2, 3, 2], [1]), b)


def test_partial_trace_errors():
    with pytest.raises(DimensionMismatch):
        linops.partial_trace(np.eye(4), [2, 3], [0])
    with pytest.raises(DimensionMismatch):
        linops.partial_trace(np.eye(4), [2, 2], [])


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_partial_trace_preserves_trace_and_positivity(seed):
    rho = random_density(4, np.random.default_rng(seed))
    red = linops.partial_trace(rho, [2, 2], [1])
    assert abs(np.trace(red) - np.trace(rho)) <= 1e-12
    assert np.linalg.eigvalsh(red).min() >= -1e-12


def test_positive_part_trace_examples():
    assert linops.positive_part_trace(np.diag([1.0, -np.exp(2.0)])) == pytest.approx(1.0)
    assert linops.positive_part_trace(np.diag([0.5, -0.5])) == pytest.approx(0.5)
    with pytest.raises(NotHermitian):
        linops.positive_part_trace(np.array([[0, 1], [0, 0]]))


def test_positive_part_trace_dominates_random_tests():
    rng = np.random.default_rng(7)
    h = random_hermitian(3, rng)
    best = linops.positive_part_trace(h)
    for _ in range(1000):
        m = random_measurement_operator(3, rng)
        assert linops.expectation(m, h) <= best + 1e-12
    assert abs(linops.expectation(linops.positive_projector(h), h) - best) <= 1e-9
