"""Dense Hermitian linear algebra used by every other module.

Matrices are plain ``numpy`` complex arrays. Matrix functions are evaluated
through the eigendecomposition, optionally restricted to the support of a
second operator (the convention used for privacy-loss operators, where
``sigma**-0.5`` only makes sense on ``supp(sigma)``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionOverflow,
    DomainError,
    NotHermitian,
    NumericalFailure,
)

HERM_TOL = 1e-10
SUPP_TOL = 1e-10
EIG_TOL = 1e-10
MAX_DIM = 64


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (descending) and the unitary whose columns are eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    """Coerce to a square complex ndarray, rejecting NaN/Inf entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalFailure("matrix has non-finite entries")
    return a


def is_hermitian(h, tol: float = HERM_TOL) -> bool:
    h = np.asarray(h)
    scale = max(np.linalg.norm(h), 1.0)
    return np.linalg.norm(h - h.conj().T) <= tol * scale


def check_hermitian(h, tol: float = HERM_TOL) -> np.ndarray:
    h = as_matrix(h)
    if not is_hermitian(h, tol):
        raise NotHermitian(
            f"||H - H^dagger||_F = {np.linalg.norm(h - h.conj().T):.3e} exceeds tolerance"
        )
    return (h + h.conj().T) / 2


def _fix_phases(v: np.ndarray) -> np.ndarray:
    # make the first entry of largest magnitude in each column real positive
    idx = np.argmax(np.abs(v) > np.abs(v).max(axis=0) * (1 - 1e-8), axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(ph) / ph)


def hermitian_eig(h, herm_tol: float = HERM_TOL, eig_tol: float = EIG_TOL) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Eigenvector phases are normalised and numerically tied eigenvalues are
    ordered by the lexicographic order of their (rounded) eigenvectors, so the
    output is reproducible for report generation.
    """
    h = check_hermitian(h, herm_tol)
    w, v = np.linalg.eigh(h)
    v = _fix_phases(v)
    scale = max(np.abs(w).max(), np.finfo(float).tiny)
    # lexsort: last key is primary
    key_w = -np.round(w / (scale * 1e-9))
    keys = [np.round(v.real[i], 9) for i in range(v.shape[0] - 1, -1, -1)]
    order = np.lexsort(keys + [key_w])
    w, v = w[order], v[:, order]
    spectrum = Spectrum(w, v)

    norm = np.linalg.norm(h)
    err = np.linalg.norm(spectrum.reconstruct() - h)
    if err > eig_tol * max(norm, np.finfo(float).tiny):
        raise NumericalFailure(f"eigendecomposition reconstruction error {err:.3e}")
    if np.linalg.norm(v.conj().T @ v - np.eye(len(w))) > eig_tol * max(1.0, np.sqrt(len(w))):
        raise NumericalFailure("eigenvectors are not orthonormal")
    return spectrum


def support_basis(h, supp_tol: float = SUPP_TOL) -> np.ndarray:
    """Orthonormal columns spanning the support of Hermitian ``h``."""
    spectrum = hermitian_eig(h)
    w = spectrum.eigenvalues
    cut = supp_tol * max(np.abs(w).max(), np.finfo(float).tiny)
    return spectrum.eigenvectors[:, np.abs(w) > cut]


def support_projector(h, supp_tol: float = SUPP_TOL) -> np.ndarray:
    u = support_basis(h, supp_tol)
    return u @ u.conj().T


def matrix_fn_on_support(
    h,
    f: Callable[[np.ndarray], np.ndarray],
    support_of=None,
    supp_tol: float = SUPP_TOL,
) -> np.ndarray:
    """Apply ``f`` to ``h`` on the support of ``support_of`` (default: ``h``).

    Returns ``sum_i f(l_i) v_i v_i^dagger`` where the sum runs over the
    eigenpairs of ``h`` compressed to the support; the off-support block is
    exactly zero. Slightly negative retained eigenvalues (within ``-supp_tol``
    relative) are clamped to zero before ``f`` is applied.
    """
    h = check_hermitian(h)
    if support_of is None:
        spectrum = hermitian_eig(h)
        w, v = spectrum.eigenvalues, spectrum.eigenvectors
        scale = max(np.abs(w).max(), np.finfo(float).tiny)
        keep = np.abs(w) > supp_tol * scale
        w, v = w[keep], v[:, keep]
    else:
        u = support_basis(check_hermitian(support_of), supp_tol)
        if u.shape[1] == 0:
            return np.zeros_like(h)
        spectrum = hermitian_eig(u.conj().T @ h @ u)
        w, v = spectrum.eigenvalues, u @ spectrum.eigenvectors
        scale = max(np.abs(w).max(), np.finfo(float).tiny)
    w = np.where((w < 0) & (w >= -supp_tol * scale), 0.0, w)
    with np.errstate(all="ignore"):
        fw = np.asarray(f(w), dtype=float)
    if not np.all(np.isfinite(fw)):
        bad = w[~np.isfinite(fw)]
        raise DomainError(f"function undefined at retained eigenvalue(s) {bad}")
    return (v * fw) @ v.conj().T


def tensor(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    """Kronecker product ``a (x) b``; works for rectangular Kraus operators too."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise DimensionOverflow(f"tensor dimension {max(rows, cols)} exceeds max_dim={max_dim}")
    return np.kron(a, b)


def tensor_all(mats: Sequence, max_dim: int = MAX_DIM) -> np.ndarray:
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = tensor(out, m, max_dim)
    return out


def partial_trace(m, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    The kept subsystems stay in their original order.
    """
    m = np.asarray(m, dtype=complex)
    dims = [int(d) for d in dims]
    n = len(dims)
    keep = sorted({int(k) for k in keep})
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"dims {dims} do not match matrix shape {m.shape}")
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise DimensionMismatch(f"keep={keep} must be a nonempty subset of range({n})")
    traced = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    perm = keep + traced
    t = t.transpose(perm + [p + n for p in perm])
    dk = int(np.prod([dims[i] for i in keep]))
    dr = int(np.prod([dims[i] for i in traced])) if traced else 1
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("ajbj->ab", t)


def positive_projector(h) -> np.ndarray:
    """Projector onto the strictly positive eigenspace of Hermitian ``h``."""
    spectrum = hermitian_eig(h)
    v = spectrum.eigenvectors[:, spectrum.eigenvalues > 0]
    return v @ v.conj().T


def positive_part_trace(h) -> float:
    """``sum_i max(l_i, 0)``, i.e. ``sup_{0 <= M <= I} Tr(M h)``."""
    w = hermitian_eig(h).eigenvalues
    return float(np.clip(w, 0.0, None).sum())


def expectation(m, rho) -> float:
    """Real part of ``Tr(m rho)`` for Hermitian arguments."""
    return float(np.real(np.einsum("ij,ji->", np.asarray(m), np.asarray(rho))))
