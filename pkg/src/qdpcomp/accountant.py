"""Quantum moments accountant and the composition calculators.

Every calculator returns an :class:`AccountantResult` carrying a scope tag
naming the adversary class the guarantee covers:

* ``all-povm``     arbitrary measurements on the composed output
* ``one-way-locc`` one-way LOCC two-outcome tests (either direction)
* ``lo-star``      local POVMs followed by [0, 1]-valued classical processing
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .divergences import INF, log_mmgf
from .errors import FitError, GridMismatch, InfiniteMoment, InvalidDelta, ParameterOutOfRange
from .serialization import ext_real

DEFAULT_LAMBDAS = (0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 8.0, 16.0)
SCOPES = ("all-povm", "one-way-locc", "lo-star")
GRID_TOL = 1e-12


@dataclass(frozen=True)
class PrivacyParams:
    eps: float
    delta: float

    def __post_init__(self):
        if self.eps < 0 or not 0 <= self.delta <= 1:
            raise ParameterOutOfRange(f"invalid privacy parameters ({self.eps}, {self.delta})")


@dataclass
class AccountantResult:
    scope: str
    eps: float
    delta: float
    lambda_used: float | None = None
    inputs: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scope not in SCOPES:
            raise ValueError(f"unknown scope tag {self.scope!r}")

    @property
    def params(self) -> PrivacyParams:
        return PrivacyParams(self.eps, self.delta)

    def to_json(self) -> dict:
        out = {
            "scope": self.scope,
            "eps": ext_real(self.eps),
            "delta": self.delta,
            "lambda_used": self.lambda_used,
            "inputs": self.inputs,
        }
        out.update({k: (ext_real(v) if isinstance(v, float) else v) for k, v in self.extras.items()})
        return out


# -- moments accountant ------------------------------------------------------

@dataclass(frozen=True)
class MomentProfile:
    """``log_mmgf_sup[i] = max_{rho ~ sigma} log MMGF(lambdas[i]; rho, sigma)``."""

    lambdas: tuple
    log_mmgf_sup: tuple

    def __post_init__(self):
        if len(self.lambdas) != len(self.log_mmgf_sup):
            raise GridMismatch("lambdas and values differ in length")
        if any(lam <= 0 for lam in self.lambdas):
            raise ValueError("lambda grid must be positive")

    def at(self, lam: float) -> float:
        for g, v in zip(self.lambdas, self.log_mmgf_sup):
            if abs(g - lam) <= GRID_TOL * max(1.0, lam):
                return v
        raise GridMismatch(f"lambda={lam} is not on the profile grid {self.lambdas}")

    def to_json(self) -> dict:
        return {"lambdas": list(self.lambdas), "log_mmgf_sup": [ext_real(v) for v in self.log_mmgf_sup]}

    @classmethod
    def from_json(cls, obj) -> "MomentProfile":
        from .errors import FormatError
        from .serialization import ext_real_from
        if not isinstance(obj, dict) or set(obj) != {"lambdas", "log_mmgf_sup"}:
            raise FormatError("profile", "expected exactly the keys lambdas, log_mmgf_sup")
        try:
            return cls(tuple(float(x) for x in obj["lambdas"]),
                       tuple(ext_real_from(x) for x in obj["log_mmgf_sup"]))
        except (TypeError, ValueError) as exc:
            raise FormatError("profile", str(exc)) from None


def moments_profile(channel, relation, lambdas: Sequence[float] = DEFAULT_LAMBDAS) -> MomentProfile:
    """Exact accountant values: max over both orientations of every pair."""
    lambdas = tuple(float(x) for x in lambdas)
    outs = [(channel(a), channel(b)) if channel is not None else (a, b)
            for _, _, a, b in relation.oriented()]
    values = tuple(max(log_mmgf(a, b, lam) for a, b in outs) for lam in lambdas)
    return MomentProfile(lambdas, values)


def profile_add(profiles: Sequence[MomentProfile]) -> MomentProfile:
    if not profiles:
        raise ValueError("need at least one profile")
    grid = profiles[0].lambdas
    for p in profiles[1:]:
        if len(p.lambdas) != len(grid) or any(abs(a - b) > GRID_TOL * max(1, a) for a, b in zip(p.lambdas, grid)):
            raise GridMismatch("profiles are on different lambda grids")
    total = tuple(INF if any(p.log_mmgf_sup[i] == INF for p in profiles)
                  else math.fsum(p.log_mmgf_sup[i] for p in profiles)
                  for i in range(len(grid)))
    return MomentProfile(grid, total)


def qma_to_measured_rdp(profile: MomentProfile, alpha: float) -> float:
    """Measured Renyi DP level ``eps_alpha = alpha_A(alpha) / (alpha - 1)``.

    Needs the moment of order ``alpha`` itself on the grid; no interpolation.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    v = profile.at(alpha)
    if v == INF:
        raise InfiniteMoment(f"accountant is infinite at order {alpha}")
    return max(v, 0.0) / (alpha - 1)


def rdp_to_dp(eps_alpha: float, alpha: float, delta: float) -> PrivacyParams:
    if not 0 < delta < 1:
        raise InvalidDelta("delta must lie in (0, 1)")
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    return PrivacyParams(eps_alpha + math.log(1 / delta) / (alpha - 1), delta)


def qma_compose(profiles: Sequence[MomentProfile], alpha: float, delta: float) -> AccountantResult:
    """Tensor-product composition through the accountant at one order ``alpha``."""
    total = profile_add(profiles)
    eps_alpha = qma_to_measured_rdp(total, alpha)
    params = rdp_to_dp(eps_alpha, alpha, delta)
    return AccountantResult(
        "all-povm", params.eps, delta, lambda_used=alpha,
        inputs={"alpha": alpha, "delta": delta, "k": len(profiles)},
        extras={"eps_alpha": eps_alpha},
    )


@dataclass(frozen=True)
class MomentCurveFit:
    """Certified ``log Tr[A(s) X^a] <= eps^2 (a-1)^2 / 2 + c (a-1)^3`` for ``a`` in (1, alpha_max].

    ``certified`` lists the ``a - 1`` values at which the inequality was
    checked; empty means the caller asserts it on the whole interval.
    """

    eps: float
    c: float
    alpha_max: float
    certified: tuple = ()

    def __post_init__(self):
        if not 0 < self.eps <= 1 or self.c < 0 or self.alpha_max <= 1:
            raise ParameterOutOfRange(f"invalid moment fit {self}")

    def bound(self, nu: float) -> float:
        return 0.5 * self.eps**2 * nu**2 + self.c * nu**3


def fit_moment_curve(profile: MomentProfile, alpha_max: float | None = None) -> MomentCurveFit:
    """Fit ``(eps, c)`` to the orders ``alpha`` on the grid with ``1 < alpha <= alpha_max``.

    ``eps`` comes from the two smallest orders (clipped into (0, 1]); ``c`` is
    then the least nonnegative value for which the bound holds at every
    grid order.
    """
    pts = sorted((lam, v) for lam, v in zip(profile.lambdas, profile.log_mmgf_sup)
                 if lam > 1 and (alpha_max is None or lam <= alpha_max + GRID_TOL))
    if len(pts) < 2:
        raise FitError("need at least two grid orders above 1")
    if any(v == INF for _, v in pts):
        raise FitError("accountant is infinite on the fit range")
    alpha_max = pts[-1][0] if alpha_max is None else alpha_max
    nus = np.array([a - 1 for a, _ in pts])
    vals = np.array([v for _, v in pts])
    a2 = np.array([[nus[0] ** 2, nus[0] ** 3], [nus[1] ** 2, nus[1] ** 3]])
    quad, _ = np.linalg.solve(a2, vals[:2])
    eps = float(np.clip(math.sqrt(max(2 * quad, 0.0)), 1e-12, 1.0))
    c = float(max(0.0, np.max((vals - 0.5 * eps**2 * nus**2) / nus**3)))
    if not math.isfinite(c):
        raise FitError("no finite cubic coefficient certifies the profile")
    # a few ulps of slack so the certificate survives re-evaluation
    c = c * (1 + 1e-12) + 1e-15
    fit = MomentCurveFit(eps, c, float(alpha_max), tuple(float(n) for n in nus))
    if np.any(vals > [fit.bound(n) for n in nus]):
        raise FitError("fitted bound fails at a grid point")
    return fit


def _eps_of_lambda(lam: float, s: float, c: float, log_inv_delta: float) -> float:
    return 0.5 * s * lam + c * lam**2 + log_inv_delta / lam


def qma_advanced_compose(fits: Sequence[MomentCurveFit], delta: float) -> AccountantResult:
    """Advanced composition from per-channel moment-curve fits.

    Uses ``lambda_hat = min(lambda_bar, sqrt(2 log(1/delta) / S))``. When every
    fit carries certified grid points, the best ``eps(lambda)`` over the
    common certified points is reported as ``eps_grid``; that value only
    relies on the bound where it was actually checked.
    """
    if not 0 < delta < 1:
        raise InvalidDelta("delta must lie in (0, 1)")
    if not fits:
        raise ValueError("need at least one fit")
    s = math.fsum(f.eps**2 for f in fits)
    c = math.fsum(f.c for f in fits)
    lam_bar = min(f.alpha_max for f in fits) - 1
    b = math.log(1 / delta)
    lam_star = math.sqrt(2 * b / s) if s > 0 else math.inf
    lam_hat = min(lam_bar, lam_star)
    eps = _eps_of_lambda(lam_hat, s, c, b)
    explicit = math.sqrt(2 * s * b) + 2 * c * b / s + 0.5 * s * max(lam_bar - lam_star, 0.0)

    # the closed form equals eps(lambda_star); it says nothing once lambda_bar < lambda_star
    extras = {"S": s, "C": c, "lambda_bar": lam_bar, "lambda_star": lam_star, "explicit_bound": explicit,
              "explicit_bound_applies": lam_star <= lam_bar}
    if all(f.certified for f in fits):
        common = set(round(n, 12) for n in fits[0].certified)
        for f in fits[1:]:
            common &= set(round(n, 12) for n in f.certified)
        usable = sorted(n for n in common if n <= lam_bar + GRID_TOL)
        if usable:
            best = min(usable, key=lambda n: _eps_of_lambda(n, s, c, b))
            extras["eps_grid"] = _eps_of_lambda(best, s, c, b)
            extras["lambda_grid"] = best
    return AccountantResult(
        "all-povm", eps, delta, lambda_used=lam_hat,
        inputs={"fits": [{"eps": f.eps, "c": f.c, "alpha_max": f.alpha_max} for f in fits], "delta": delta},
        extras=extras,
    )


# -- scalar composition calculators -------------------------------------------

def basic_compose_locc(params: Sequence[tuple[float, float]]) -> AccountantResult:
    """Two tensor-product channels on product neighbours, one-way LOCC adversary."""
    if len(params) != 2:
        raise ValueError("basic LOCC composition takes exactly two (eps, delta) pairs")
    (e1, d1), (e2, d2) = [(float(e), float(d)) for e, d in params]
    PrivacyParams(e1, d1), PrivacyParams(e2, d2)
    delta = min(math.exp(e2) * d1 + d2, d1 + math.exp(e1) * d2)
    e_max = max(e1, e2)
    extras = {"delta_corollary": math.exp(e_max) * (d1 + d2)}
    if e_max <= 1:
        extras["delta_small_eps"] = (1 + 2 * e_max) * (d1 + d2)
    return AccountantResult(
        "one-way-locc", e1 + e2, min(delta, 1.0),
        inputs={"params": [[e1, d1], [e2, d2]]}, extras=extras,
    )


def _check_delta(delta: float, allow_one: bool = False):
    if not (0 < delta < 1 or (allow_one and delta == 1)):
        raise InvalidDelta(f"delta={delta} outside the admissible range")


def advanced_compose_pure(eps_list: Sequence[float], delta: float) -> AccountantResult:
    """k pure (eps_i, 0)-QDP channels, tensor product, any POVM.

    ``eps' = zeta + 2 sqrt(zeta log(1/delta))`` with ``zeta = sum eps_i^2 / 2``,
    attained at Renyi order ``alpha = 1 + sqrt(log(1/delta) / zeta)``.
    """
    _check_delta(delta, allow_one=True)
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("need at least one epsilon")
    if any(not 0 <= e <= 1 for e in eps_list):
        raise ParameterOutOfRange("advanced composition needs every eps_i in [0, 1]")
    zeta = math.fsum(e * e for e in eps_list) / 2
    b = math.log(1 / delta)
    eps = zeta + 2 * math.sqrt(zeta * b)
    alpha = 1 + math.sqrt(b / zeta) if zeta > 0 and b > 0 else None
    return AccountantResult(
        "all-povm", eps, delta, lambda_used=None if alpha is None else alpha - 1,
        inputs={"eps": eps_list, "delta": delta},
        extras={"eps_basic": math.fsum(eps_list), "zeta": zeta},
    )


def _kl_bound(e: float) -> float:
    # eps (e^eps - 1) / (e^eps + 1)
    return e * math.tanh(e / 2)


def advanced_compose_lostar_pure(eps_list: Sequence[float], delta: float) -> AccountantResult:
    if not delta > 0:
        raise InvalidDelta("delta must be positive")
    eps_list = [float(e) for e in eps_list]
    if any(e < 0 for e in eps_list):
        raise ParameterOutOfRange("eps_i must be nonnegative")
    s = math.fsum(e * e for e in eps_list)
    mu = math.fsum(_kl_bound(e) for e in eps_list)
    eps = mu + math.sqrt(2 * max(math.log(1 / delta), 0.0) * s)
    return AccountantResult(
        "lo-star", eps, min(delta, 1.0),
        inputs={"eps": eps_list, "delta": delta},
        extras={"kl_term": mu, "eps_basic": math.fsum(eps_list)},
    )


def advanced_compose_lostar_approx(params: Sequence[tuple[float, float]], delta: float) -> AccountantResult:
    _check_delta(delta)
    params = [(float(e), float(d)) for e, d in params]
    if not params:
        raise ValueError("need at least one (eps, delta) pair")
    if any(e <= 0 or not 0 <= d <= 1 for e, d in params):
        raise ParameterOutOfRange("need eps_i > 0 and delta_i in [0, 1]")
    eps_sum = math.fsum(e for e, _ in params)
    s = math.fsum(e * e for e, _ in params)
    mu = math.fsum(_kl_bound(e) for e, _ in params)
    log_term = min(math.log(1 / delta), math.log(math.e + s / delta))
    advanced = mu + math.sqrt(2 * s * log_term)
    eps = min(eps_sum, advanced)
    delta_bar = 1 - (1 - delta) * math.prod(1 - d for _, d in params)
    return AccountantResult(
        "lo-star", eps, delta_bar,
        inputs={"params": [list(p) for p in params], "delta": delta},
        extras={"eps_basic": eps_sum, "eps_advanced": advanced},
    )
