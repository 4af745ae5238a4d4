"""Measurement-strategy classes and a seeded violation search.

Three adversary classes are modelled:

* ``all-povm``: any two-outcome test ``0 <= M <= I`` on the full output;
* ``one-way-locc``: measure one subsystem with a POVM ``{E_t}``, then accept
  with a conditional effect ``M_t`` on the other;
* ``lo-star``: local POVMs on every subsystem followed by a weight table
  ``T(z) in [0, 1]`` on the joint outcome.

:func:`falsify` draws tests from one class (after a deterministic fixture
batch) and records the largest violation of a claimed ``(eps, delta)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import ensembles, linops
from .channels import PHI_MINUS, PHI_PLUS, proj
from .divergences import VERDICT_TOL
from .errors import DimensionMismatch
from .serialization import matrix_from_json, matrix_to_json

TEST_CLASSES = ("all-povm", "one-way-locc", "lo-star")
EFFECT_TOL = 1e-10


def _check_effect_range(m: np.ndarray, what: str):
    """Accepts one effect or a stack of them."""
    m = np.asarray(m)
    w = np.linalg.eigvalsh((m + np.swapaxes(m, -1, -2).conj()) / 2)
    if w.min() < -EFFECT_TOL or w.max() > 1 + EFFECT_TOL:
        raise ValueError(f"{what} has spectrum [{w.min():.3e}, {w.max():.3e}] outside [0, 1]")


def _check_povm(effects, what: str):
    stack = np.stack(effects)
    if np.linalg.norm(stack.sum(axis=0) - np.eye(stack.shape[1])) > 1e-9:
        raise ValueError(f"{what} effects do not sum to the identity")
    _check_effect_range(stack, what)


def _kron_sum(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """``sum_t left[t] (x) right[t]`` for stacks of square matrices."""
    t, a, _ = left.shape
    b = right.shape[1]
    return np.einsum("tij,tkl->ikjl", left, right).reshape(a * b, a * b)


@dataclass(frozen=True, eq=False)
class GlobalTest:
    """Unrestricted two-outcome test given by its acceptance operator."""

    effect: np.ndarray
    name: str = ""

    def operator(self) -> np.ndarray:
        return self.effect

    def to_json(self) -> dict:
        return {"kind": "all-povm", "name": self.name, "operator": matrix_to_json(self.effect)}


@dataclass(frozen=True, eq=False)
class OneWayLoccTest:
    """``M = sum_t E_t (x) M_t``; with ``reverse`` the roles of the factors swap."""

    first_povm: tuple
    conditional_effects: tuple
    reverse: bool = False
    name: str = ""
    # samplers build valid tests by construction and skip the spectral checks
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        first = tuple(np.asarray(e, dtype=complex) for e in self.first_povm)
        cond = tuple(np.asarray(m, dtype=complex) for m in self.conditional_effects)
        if len(first) != len(cond):
            raise DimensionMismatch("need one conditional effect per first-stage outcome")
        if self.check:
            _check_povm(first, "first-stage POVM")
            _check_effect_range(np.stack(cond), "conditional effect")
        object.__setattr__(self, "first_povm", first)
        object.__setattr__(self, "conditional_effects", cond)

    def operator(self) -> np.ndarray:
        first, cond = np.stack(self.first_povm), np.stack(self.conditional_effects)
        return _kron_sum(cond, first) if self.reverse else _kron_sum(first, cond)

    def product_acceptance(self, xi1, xi2) -> float:
        """Acceptance on ``xi1 (x) xi2`` from the sequential description alone."""
        if self.reverse:
            xi1, xi2 = xi2, xi1
        return float(sum(linops.expectation(e, xi1) * linops.expectation(m, xi2)
                         for e, m in zip(self.first_povm, self.conditional_effects)))

    def to_json(self) -> dict:
        return {
            "kind": "one-way-locc",
            "name": self.name,
            "direction": "2->1" if self.reverse else "1->2",
            "first_povm": [matrix_to_json(e) for e in self.first_povm],
            "conditional_effects": [matrix_to_json(m) for m in self.conditional_effects],
            "operator": matrix_to_json(self.operator()),
        }


@dataclass(frozen=True, eq=False)
class LoStarTest:
    """Local POVMs plus a weight table indexed by the joint outcome tuple."""

    local_povms: tuple
    weights: np.ndarray
    name: str = ""
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        povms = tuple(tuple(np.asarray(e, dtype=complex) for e in p) for p in self.local_povms)
        if self.check:
            for i, p in enumerate(povms):
                _check_povm(p, f"local POVM {i}")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != tuple(len(p) for p in povms):
            raise DimensionMismatch(f"weight table shape {w.shape} does not match outcome counts")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("weights must lie in [0, 1]")
        object.__setattr__(self, "local_povms", povms)
        object.__setattr__(self, "weights", w)

    def operator(self) -> np.ndarray:
        total = 0
        for z in itertools.product(*[range(len(p)) for p in self.local_povms]):
            t = self.weights[z]
            if t:
                total = total + t * linops.tensor_all([p[zi] for p, zi in zip(self.local_povms, z)],
                                                      max_dim=10**6)
        if isinstance(total, int):
            d = int(np.prod([p[0].shape[0] for p in self.local_povms]))
            return np.zeros((d, d), dtype=complex)
        return total

    def expected_weight(self, local_states: Sequence) -> float:
        """``E_P[T]`` under the product outcome distribution of ``local_states``."""
        probs = [np.array([linops.expectation(e, s) for e in p])
                 for p, s in zip(self.local_povms, local_states)]
        joint = probs[0]
        for p in probs[1:]:
            joint = np.multiply.outer(joint, p)
        return float(np.sum(joint * self.weights))

    def to_json(self) -> dict:
        return {
            "kind": "lo-star",
            "name": self.name,
            "local_povms": [[matrix_to_json(e) for e in p] for p in self.local_povms],
            "weights": self.weights.tolist(),
            "operator": matrix_to_json(self.operator()),
        }


def measurement_test_from_json(obj):
    """Inverse of the ``to_json`` methods above."""
    kind = obj.get("kind")
    name = obj.get("name", "")
    if kind == "all-povm":
        return GlobalTest(matrix_from_json(obj["operator"], "operator"), name)
    if kind == "one-way-locc":
        return OneWayLoccTest(
            tuple(matrix_from_json(e, "first_povm") for e in obj["first_povm"]),
            tuple(matrix_from_json(m, "conditional_effects") for m in obj["conditional_effects"]),
            reverse=obj["direction"] == "2->1",
            name=name,
        )
    if kind == "lo-star":
        return LoStarTest(
            tuple(tuple(matrix_from_json(e, "local_povms") for e in p) for p in obj["local_povms"]),
            np.asarray(obj["weights"], dtype=float),
            name=name,
        )
    raise ValueError(f"unknown test kind {kind!r}")


# -- samplers ----------------------------------------------------------------

def _random_first_povm(d: int, outcomes: int, rng) -> list[np.ndarray]:
    if outcomes == 1:
        return [np.eye(d, dtype=complex)]
    if outcomes == d and rng.random() < 0.5:
        return ensembles.haar_basis_povm(d, rng)
    return ensembles.random_povm(d, outcomes, rng)


def _random_effect(d: int, rng) -> np.ndarray:
    # projectors are the extreme points of the effect set; mix both kinds
    if rng.random() < 0.5:
        return ensembles.random_projector(d, rng)
    return ensembles.random_measurement_operator(d, rng)


def sample_oneway_locc(dims: Sequence[int], outcomes: int | None, rng, reverse: bool = False) -> OneWayLoccTest:
    """Random one-way test; ``outcomes`` defaults to the first subsystem's dimension."""
    if len(dims) != 2:
        raise DimensionMismatch("one-way LOCC tests act on exactly two subsystems")
    d_first, d_second = (dims[1], dims[0]) if reverse else (dims[0], dims[1])
    outcomes = d_first if outcomes is None else int(outcomes)
    if outcomes < 1:
        raise ValueError("outcomes must be >= 1")
    first = _random_first_povm(d_first, outcomes, rng)
    cond = [_random_effect(d_second, rng) for _ in range(outcomes)]
    return OneWayLoccTest(tuple(first), tuple(cond), reverse=reverse, check=False)


def sample_lostar(dims: Sequence[int], rng, extremal: bool = False) -> LoStarTest:
    """Random local POVMs (one outcome per dimension) and a weight table.

    ``extremal`` draws the table from {0, 1} instead of [0, 1].
    """
    povms = []
    for d in dims:
        povms.append(tuple(ensembles.haar_basis_povm(d, rng) if rng.random() < 0.5
                           else ensembles.random_povm(d, d, rng)))
    shape = tuple(len(p) for p in povms)
    weights = rng.integers(0, 2, size=shape).astype(float) if extremal else rng.random(shape)
    return LoStarTest(tuple(povms), weights, check=False)


def parity_test() -> LoStarTest:
    """Computational-basis measurement on two qubits; accept iff the bits differ."""
    basis = (proj([1, 0]), proj([0, 1]))
    return LoStarTest((basis, basis), np.array([[0.0, 1.0], [1.0, 0.0]]), name="parity")


# -- falsification -----------------------------------------------------------

@dataclass
class ViolationReport:
    found: bool
    worst_margin: float
    witness: dict = field(repr=False)
    trials: int
    seed: int
    test_class: str
    eps: float
    delta: float

    def to_json(self) -> dict:
        return {
            "found": bool(self.found),
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "trials": self.trials,
            "seed": self.seed,
            "test_class": self.test_class,
            "eps": self.eps,
            "delta": self.delta,
        }


def _marginals(a: np.ndarray, dims: Sequence[int]) -> list[np.ndarray]:
    return [linops.partial_trace(a, dims, [i]) for i in range(len(dims))]


def _local_optimal_projectors(outs, dims, eps_levels) -> list[list[np.ndarray]]:
    """Per subsystem: positive projectors of ``a_i - e^e b_i`` over oriented pairs."""
    per_slot = [[] for _ in dims]
    for a, b in outs:
        ma, mb = _marginals(a, dims), _marginals(b, dims)
        for i in range(len(dims)):
            for e in eps_levels:
                per_slot[i].append(linops.positive_projector(ma[i] - math.exp(e) * mb[i]))
    return per_slot


def _fixture_tests(test_class: str, outs, dims, eps: float) -> list:
    d = outs[0][0].shape[0]
    fixtures = []
    if test_class == "all-povm":
        for k, (a, b) in enumerate(outs):
            fixtures.append(GlobalTest(linops.positive_projector(a - math.exp(eps) * b), f"optimal[{k}]"))
        if d == 4:
            fixtures.append(GlobalTest(proj(PHI_PLUS), "bell_phi_plus"))
            fixtures.append(GlobalTest(proj(PHI_MINUS), "bell_phi_minus"))
        return fixtures
    levels = sorted({0.0, eps / 2, eps})
    local = _local_optimal_projectors(outs, dims, levels)
    if test_class == "one-way-locc":
        for reverse in (False, True):
            first_slot, second_slot = (1, 0) if reverse else (0, 1)
            for p in local[first_slot]:
                for q in local[second_slot]:
                    eye = np.eye(q.shape[0])
                    for cond in ((q, eye), (q, q), (q, 0 * eye), (eye, q)):
                        fixtures.append(OneWayLoccTest((p, np.eye(p.shape[0]) - p), cond,
                                                       reverse=reverse, name="local-optimal"))
        return fixtures
    # lo-star: eigenbases of the local optimal projectors with every 0/1 table
    if len(dims) == 2 and all(x == 2 for x in dims):
        fixtures.append(parity_test())
    bases = []
    for i, d_i in enumerate(dims):
        seen = []
        for p in local[i]:
            _, v = np.linalg.eigh(p)
            seen.append(tuple(np.outer(v[:, j], v[:, j].conj()) for j in range(d_i)))
        bases.append(seen[:2])
    n_tables = 2 ** int(np.prod(dims))
    if n_tables <= 256:
        for combo in itertools.product(*bases):
            shape = tuple(len(p) for p in combo)
            for bits in range(n_tables):
                table = np.array([(bits >> j) & 1 for j in range(int(np.prod(shape)))], dtype=float)
                fixtures.append(LoStarTest(combo, table.reshape(shape), name="local-basis-table"))
    return fixtures


def _random_test(test_class: str, dims, rng, index: int):
    d = int(np.prod(dims))
    if test_class == "all-povm":
        return GlobalTest(_random_effect(d, rng))
    if test_class == "one-way-locc":
        return sample_oneway_locc(dims, None, rng, reverse=bool(index % 2))
    return sample_lostar(dims, rng, extremal=index % 8 == 0)


def falsify(
    eps: float,
    delta: float,
    channel,
    relation,
    test_class: str = "all-povm",
    trials: int = 1000,
    seed: int = 42,
    out_dims: Sequence[int] | None = None,
    fixtures: bool = True,
    verdict_tol: float = VERDICT_TOL,
) -> ViolationReport:
    """Search for ``Tr(M A(rho)) > e^eps Tr(M A(sigma)) + delta`` within one test class.

    ``channel`` maps relation inputs to outputs (``None`` means identity);
    ``out_dims`` gives the output's subsystem split for the local classes.
    Trial ``i`` uses the generator seeded with ``seed + i``, so the report
    does not depend on evaluation order.
    """
    if test_class not in TEST_CLASSES:
        raise ValueError(f"unknown test class {test_class!r}")
    outs = []
    for _, _, a, b in relation.oriented():
        outs.append((channel(a), channel(b)) if channel is not None else (a, b))
    d = outs[0][0].shape[0]
    dims = [d] if out_dims is None else [int(x) for x in out_dims]
    if int(np.prod(dims)) != d:
        raise DimensionMismatch(f"output split {dims} does not match dimension {d}")
    if test_class != "all-povm" and len(dims) < 2:
        raise DimensionMismatch("local test classes need at least two output subsystems")

    a_stack = np.stack([a for a, _ in outs])
    b_stack = np.stack([b for _, b in outs])
    scale = math.exp(eps)

    def margins(m: np.ndarray) -> np.ndarray:
        ta = np.einsum("ij,pji->p", m, a_stack).real
        tb = np.einsum("ij,pji->p", m, b_stack).real
        return ta - scale * tb - delta

    best = (-math.inf, None, None, None)
    candidates = _fixture_tests(test_class, outs, dims, eps) if fixtures else []
    n_fix = len(candidates)
    for k, test in enumerate(candidates):
        mg = margins(test.operator())
        p = int(np.argmax(mg))
        if mg[p] > best[0]:
            best = (float(mg[p]), test, p, f"fixture[{k}]")
    for i in range(trials):
        test = _random_test(test_class, dims, ensembles.rng_for(seed, i), i)
        mg = margins(test.operator())
        p = int(np.argmax(mg))
        if mg[p] > best[0]:
            best = (float(mg[p]), test, p, f"trial[{i}]")

    worst, test, p, origin = best
    witness = {} if test is None else {
        "origin": origin,
        "test": test.to_json(),
        "pair_index": p // 2,
        "orientation": p % 2,
    }
    return ViolationReport(
        found=worst > verdict_tol,
        worst_margin=worst,
        witness=witness,
        trials=trials + n_fix,
        seed=seed,
        test_class=test_class,
        eps=float(eps),
        delta=float(delta),
    )
