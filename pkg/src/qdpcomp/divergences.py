"""Distinguishability functionals: optimal (eps, delta) trade-off, privacy-loss
operator, matrix MGF and the Renyi-type divergences built on it.

Divergence values are Python floats; ``math.inf`` marks a failed support
condition and never enters matrix arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linops
from .ensembles import default_povm_sampler, rng_for
from .errors import DimensionMismatch, DomainError

INF = math.inf
VERDICT_TOL = 1e-9
ZERO_PROB = 1e-14


def _pair(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    rho, sigma = linops.as_matrix(rho), linops.as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"states of shapes {rho.shape} and {sigma.shape}")
    return rho, sigma


def _outputs(channel, rho, sigma):
    if channel is None:
        return _pair(rho, sigma)
    return _pair(channel(np.asarray(rho)), channel(np.asarray(sigma)))


# -- hockey stick ------------------------------------------------------------

def delta_min(rho, sigma, eps: float) -> float:
    """Least ``delta`` with ``Tr(M rho) <= e^eps Tr(M sigma) + delta`` for all ``0 <= M <= I``."""
    rho, sigma = _pair(rho, sigma)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    d = linops.positive_part_trace(rho - math.exp(eps) * sigma)
    return min(max(d, 0.0), 1.0)


def optimal_test(rho, sigma, eps: float) -> np.ndarray:
    """Projector onto the positive eigenspace of ``rho - e^eps sigma``."""
    rho, sigma = _pair(rho, sigma)
    return linops.positive_projector(rho - math.exp(eps) * sigma)


@dataclass
class QDPVerdict:
    passed: bool
    eps: float
    delta: float
    delta_required: float
    margin: float
    worst_pair_index: int
    worst_orientation: int
    witness: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        from .serialization import matrix_to_json
        return {
            "pass": bool(self.passed),
            "eps": self.eps,
            "delta": self.delta,
            "delta_required": self.delta_required,
            "margin": self.margin,
            "worst_pair_index": self.worst_pair_index,
            "worst_orientation": self.worst_orientation,
            "witness": matrix_to_json(self.witness),
        }


def verify_qdp(channel, relation, eps: float, delta: float, verdict_tol: float = VERDICT_TOL) -> QDPVerdict:
    """Exact (eps, delta)-QDP check over a finite relation, both orientations.

    ``margin`` is ``delta_required - delta``; the channel passes iff
    ``margin <= verdict_tol``. The witness is the optimal test for the worst
    oriented pair.
    """
    if eps < 0 or not 0 <= delta <= 1:
        raise ValueError("need eps >= 0 and delta in [0, 1]")
    worst = (-1.0, 0, 0, None)
    for i, o, a, b in relation.oriented():
        out_a, out_b = _outputs(channel, a, b)
        dm = delta_min(out_a, out_b, eps)
        if dm > worst[0]:
            worst = (dm, i, o, (out_a, out_b))
    dm, i, o, (out_a, out_b) = worst
    margin = dm - delta
    return QDPVerdict(
        passed=margin <= verdict_tol,
        eps=float(eps),
        delta=float(delta),
        delta_required=dm,
        margin=margin,
        worst_pair_index=i,
        worst_orientation=o,
        witness=optimal_test(out_a, out_b, eps),
    )


def default_eps_grid() -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-3, 1, 41)])


@dataclass
class PrivacyCurve:
    """Points ``(eps, delta_min(eps))`` of a channel over a relation."""

    points: list

    def to_json(self) -> list:
        return [{"eps": float(e), "delta": float(d)} for e, d in self.points]

    def to_csv(self) -> str:
        lines = ["eps,delta"] + [f"{e!r},{d!r}" for e, d in self.points]
        return "\n".join(lines) + "\n"


def privacy_curve(channel, relation, eps_grid: Sequence[float] | None = None) -> PrivacyCurve:
    grid = np.asarray(default_eps_grid() if eps_grid is None else eps_grid, dtype=float)
    grid = np.sort(grid)
    outs = [_outputs(channel, a, b) for _, _, a, b in relation.oriented()]
    deltas = np.array([max(delta_min(a, b, e) for a, b in outs) for e in grid])
    # round-off can make neighbouring values tick upwards by ~1e-16
    deltas = np.minimum.accumulate(deltas)
    return PrivacyCurve([(float(e), float(d)) for e, d in zip(grid, deltas)])


# -- support-restricted sandwich ---------------------------------------------

def support_fails(rho, sigma, supp_tol: float = linops.SUPP_TOL) -> bool:
    """True when ``supp(rho)`` is not contained in ``supp(sigma)``."""
    rho, sigma = _pair(rho, sigma)
    spectrum = linops.hermitian_eig(sigma)
    w = spectrum.eigenvalues
    off = spectrum.eigenvectors[:, np.abs(w) <= supp_tol * max(np.abs(w).max(), np.finfo(float).tiny)]
    if off.shape[1] == 0:
        return False
    return linops.positive_part_trace(off.conj().T @ rho @ off) > supp_tol


def _sandwich_on_support(rho, sigma):
    """``(s, X_r)`` with ``s`` the support eigenvalues of sigma and
    ``X_r = diag(s)^-1/2 U^dagger rho U diag(s)^-1/2`` in the support basis ``U``."""
    spectrum = linops.hermitian_eig(sigma)
    w = spectrum.eigenvalues
    keep = np.abs(w) > linops.SUPP_TOL * max(np.abs(w).max(), np.finfo(float).tiny)
    s, u = w[keep], spectrum.eigenvectors[:, keep]
    inv_half = 1 / np.sqrt(s)
    x = (inv_half[:, None] * (u.conj().T @ rho @ u)) * inv_half[None, :]
    return s, (x + x.conj().T) / 2, u


def sandwiched_ratio(rho, sigma) -> np.ndarray | float:
    """``sigma^-1/2 rho sigma^-1/2`` on ``supp(sigma)`` (zero elsewhere), or inf."""
    rho, sigma = _pair(rho, sigma)
    if support_fails(rho, sigma):
        return INF
    _, x, u = _sandwich_on_support(rho, sigma)
    return u @ x @ u.conj().T


def privacy_loss_operator(rho, sigma) -> np.ndarray | float:
    """``log(sigma^-1/2 rho sigma^-1/2)`` on ``supp(sigma)``; inf on support failure.

    Raises DomainError when the ratio is singular inside ``supp(sigma)``
    (``rho`` has strictly smaller support), where the log has no finite value.
    """
    rho, sigma = _pair(rho, sigma)
    x = sandwiched_ratio(rho, sigma)
    if isinstance(x, float):
        return x
    return linops.matrix_fn_on_support(x, np.log, support_of=sigma)


def mmgf(rho, sigma, lam: float, channel=None) -> float:
    """``Tr[A(sigma) (A(sigma)^-1/2 A(rho) A(sigma)^-1/2)^lam]``, inf on support failure."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    rho, sigma = _outputs(channel, rho, sigma)
    if support_fails(rho, sigma):
        return INF
    s, x, _ = _sandwich_on_support(rho, sigma)
    w, v = np.linalg.eigh(x)
    w = np.clip(w, 0.0, None)
    # Tr[diag(s) V diag(w^lam) V^dagger]
    weights = np.einsum("i,ij,ij->j", s, v, v.conj()).real
    return float(np.dot(weights, w ** lam))


def mmgf_exponential_form(rho, sigma, lam: float, channel=None) -> float:
    """Same quantity evaluated as ``Tr[A(sigma)^1/2 exp(lam L) A(sigma)^1/2]``."""
    rho, sigma = _outputs(channel, rho, sigma)
    loss = privacy_loss_operator(rho, sigma)
    if isinstance(loss, float):
        return INF
    e = linops.matrix_fn_on_support(loss, lambda x: np.exp(lam * x), support_of=sigma)
    root = linops.matrix_fn_on_support(sigma, np.sqrt)
    return float(np.trace(root @ e @ root).real)


def log_mmgf(rho, sigma, lam: float, channel=None) -> float:
    m = mmgf(rho, sigma, lam, channel)
    return INF if m == INF else math.log(m)


def d_mmgf(rho, sigma, alpha: float) -> float:
    """MMGF-induced Renyi divergence ``log Tr[sigma X^alpha] / (alpha - 1)``.

    The moment order equals ``alpha``, which makes this coincide with the
    classical Renyi divergence on commuting pairs and upper-bound the measured
    Renyi divergence of the same order.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    v = log_mmgf(rho, sigma, alpha)
    return INF if v == INF else v / (alpha - 1)


def _power_on_support(m, p: float, support_of=None) -> np.ndarray:
    return linops.matrix_fn_on_support(m, lambda x: np.clip(x, 0, None) ** p, support_of=support_of)


def d_petz(rho, sigma, alpha: float) -> float:
    """Petz-Renyi divergence ``log Tr[rho^a sigma^(1-a)] / (a - 1)``."""
    if alpha <= 0 or alpha == 1:
        raise ValueError("alpha must lie in (0, 1) or (1, inf)")
    rho, sigma = _pair(rho, sigma)
    if alpha > 1 and support_fails(rho, sigma):
        return INF
    q = np.trace(_power_on_support(rho, alpha) @ _power_on_support(sigma, 1 - alpha)).real
    if q <= 0:
        return INF
    return math.log(q) / (alpha - 1)


def d_sandwiched(rho, sigma, alpha: float) -> float:
    """Sandwiched Renyi divergence ``log Tr[(s^g rho s^g)^a] / (a - 1)``, ``g = (1-a)/(2a)``."""
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    rho, sigma = _pair(rho, sigma)
    if support_fails(rho, sigma):
        return INF
    g = (1 - alpha) / (2 * alpha)
    sg = _power_on_support(sigma, g)
    y = sg @ rho @ sg
    y = (y + y.conj().T) / 2
    q = float(np.clip(np.linalg.eigvalsh(y), 0, None).__pow__(alpha).sum())
    return math.log(q) / (alpha - 1)


# -- classical ---------------------------------------------------------------

def _dist(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-9:
        raise ValueError("not a probability vector")
    return np.clip(p, 0.0, None)


def classical_renyi(p, q, alpha: float) -> float:
    p, q = _dist(p), _dist(q)
    if p.shape != q.shape:
        raise DimensionMismatch("distributions of different length")
    if alpha == 1:
        return classical_kl(p, q)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha > 1:
        if np.any((q <= ZERO_PROB) & (p > ZERO_PROB)):
            return INF
        m = q > ZERO_PROB
        s = float(np.sum(p[m] ** alpha * q[m] ** (1 - alpha)))
    else:
        m = (p > 0) & (q > 0)
        s = float(np.sum(p[m] ** alpha * q[m] ** (1 - alpha)))
        if s <= 0:
            return INF
    return math.log(s) / (alpha - 1)


def classical_kl(p, q) -> float:
    p, q = _dist(p), _dist(q)
    if np.any((q <= ZERO_PROB) & (p > ZERO_PROB)):
        return INF
    m = (p > ZERO_PROB) & (q > ZERO_PROB)
    return float(np.sum(p[m] * np.log(p[m] / q[m])))


def outcome_distribution(povm: Sequence[np.ndarray], rho) -> np.ndarray:
    rho = np.asarray(rho)
    p = np.array([linops.expectation(e, rho) for e in povm])
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def eigenbasis_povms(rho, sigma) -> list[list[np.ndarray]]:
    """Deterministic measurements: eigenbasis of the sandwiched ratio on
    ``supp(sigma)`` (completed by the kernel projector) and eigenbasis of
    ``rho - sigma``."""
    rho, sigma = _pair(rho, sigma)
    d = rho.shape[0]
    _, x, u = _sandwich_on_support(rho, sigma)
    _, v = np.linalg.eigh(x)
    vecs = u @ v
    first = [np.outer(vecs[:, i], vecs[:, i].conj()) for i in range(vecs.shape[1])]
    if vecs.shape[1] < d:
        first.append(np.eye(d) - u @ u.conj().T)
    _, w = np.linalg.eigh((rho - sigma + (rho - sigma).conj().T) / 2)
    second = [np.outer(w[:, i], w[:, i].conj()) for i in range(d)]
    return [first, second]


def measured_outcome_pairs(
    rho,
    sigma,
    n: int = 200,
    seed: int = 0,
    sampler: Callable | None = None,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Outcome distributions ``(p, q)`` for the eigenbasis measurements and ``n`` sampled POVMs."""
    rho, sigma = _pair(rho, sigma)
    sampler = sampler or default_povm_sampler
    d = rho.shape[0]
    povms = eigenbasis_povms(rho, sigma)
    povms += [sampler(d, rng_for(seed, i)) for i in range(n)]
    return [(outcome_distribution(m, rho), outcome_distribution(m, sigma)) for m in povms]


def measured_renyi_lower(
    rho,
    sigma,
    alpha: float,
    n: int = 200,
    seed: int = 0,
    sampler: Callable | None = None,
) -> float:
    """Certified lower bound on the measured Renyi divergence.

    Maximum of the classical Renyi divergence of outcome statistics over the
    deterministic eigenbasis measurements plus ``n`` sampled POVMs.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    return max(classical_renyi(p, q, alpha) for p, q in measured_outcome_pairs(rho, sigma, n, seed, sampler))


def jensen_moment_check(x, tau, t: float) -> tuple[float, float]:
    """Both sides of ``(Tr tau X)^t <= Tr(tau X^t)`` for PSD ``X`` and state ``tau``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    x = linops.check_hermitian(x)
    tau = linops.as_matrix(tau)
    if np.linalg.eigvalsh(x).min() < -1e-9 * max(1.0, np.linalg.norm(x, 2)):
        raise DomainError("X is not positive semidefinite")
    lhs = max(linops.expectation(x, tau), 0.0) ** t
    rhs = linops.expectation(_power_on_support(x, t), tau)
    return lhs, rhs
