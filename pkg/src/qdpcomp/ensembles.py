"""Seeded random states, unitaries, channels and measurements.

Every generator takes a ``numpy.random.Generator``; callers derive per-task
generators from a root seed as ``default_rng(seed + index)`` so results do not
depend on evaluation order.
"""
from __future__ import annotations

import numpy as np


def rng_for(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(int(seed) + int(index))


def ginibre(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary: QR of a Ginibre matrix with the R-diagonal phases removed."""
    q, r = np.linalg.qr(ginibre(d, d, rng))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(d_out, d_in, rng))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = ginibre(d, d, rng)
    return (g + g.conj().T) / 2


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt random state of the given rank (full rank by default)."""
    g = ginibre(d, rank or d, rng)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    return random_density(d, rng, rank=1)


def random_psd(d: int, rng: np.random.Generator) -> np.ndarray:
    g = ginibre(d, d, rng)
    return g @ g.conj().T


def random_measurement_operator(d: int, rng: np.random.Generator) -> np.ndarray:
    """Effect ``0 <= M <= I`` built as ``(H + ||H|| I) / (2 ||H||)``."""
    h = random_hermitian(d, rng)
    nrm = np.linalg.norm(h, 2)
    return (h + nrm * np.eye(d)) / (2 * nrm)


def random_projector(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    if rank is None:
        rank = int(rng.integers(0, d + 1))
    u = random_unitary(d, rng)[:, :rank]
    return u @ u.conj().T


def haar_basis_povm(d: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Projective measurement in a Haar-random orthonormal basis."""
    u = random_unitary(d, rng)
    return [np.outer(u[:, i], u[:, i].conj()) for i in range(d)]


def two_outcome_povm(d: int, rng: np.random.Generator) -> list[np.ndarray]:
    m = random_measurement_operator(d, rng)
    return [m, np.eye(d) - m]


def random_povm(d: int, outcomes: int, rng: np.random.Generator) -> list[np.ndarray]:
    """General POVM: ``E_k = S^{-1/2} G_k S^{-1/2}`` with ``S = sum_k G_k``."""
    gs = [random_psd(d, rng) for _ in range(outcomes)]
    s = sum(gs)
    w, v = np.linalg.eigh(s)
    s_inv_half = (v / np.sqrt(w)) @ v.conj().T
    effects = [s_inv_half @ g @ s_inv_half for g in gs]
    return [(e + e.conj().T) / 2 for e in effects]


def default_povm_sampler(d: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Alternate Haar-basis projective and random two-outcome measurements."""
    if rng.random() < 0.5:
        return haar_basis_povm(d, rng)
    return two_outcome_povm(d, rng)


def random_kraus(d_in: int, d_out: int, n_kraus: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Kraus operators of a random channel from a Haar-random Stinespring isometry."""
    v = random_isometry(d_in, d_out * n_kraus, rng)
    return [v[k * d_out:(k + 1) * d_out, :] for k in range(n_kraus)]
