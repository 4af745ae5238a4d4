"""States, measurements, Kraus channels and the three composition models."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import linops
from .errors import DimensionMismatch, ParameterOutOfRange

PSD_TOL = 1e-9
TRACE_TOL = 1e-9
CPTP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A PSD, trace-one matrix. Behaves like an ndarray under ``np.asarray``."""

    mat: np.ndarray
    label: str | None = None

    def __post_init__(self):
        m = linops.check_hermitian(np.asarray(self.mat, dtype=complex))
        w = np.linalg.eigvalsh(m)
        if w.min() < -PSD_TOL:
            raise ValueError(f"density operator has eigenvalue {w.min():.3e} < 0")
        tr = np.trace(m).real
        if abs(tr - 1) > TRACE_TOL:
            raise ValueError(f"density operator has trace {tr!r}")
        object.__setattr__(self, "mat", m)

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True, eq=False)
class MeasurementOperator:
    mat: np.ndarray

    def __post_init__(self):
        m = linops.check_hermitian(np.asarray(self.mat, dtype=complex))
        w = np.linalg.eigvalsh(m)
        if w.min() < -PSD_TOL or w.max() > 1 + PSD_TOL:
            raise ValueError(f"measurement operator spectrum [{w.min():.3e}, {w.max():.3e}] not in [0, 1]")
        object.__setattr__(self, "mat", m)

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


@dataclass(frozen=True, eq=False)
class Povm:
    effects: tuple

    def __post_init__(self):
        if not self.effects:
            raise ValueError("POVM needs at least one effect")
        effects = tuple(e if isinstance(e, MeasurementOperator) else MeasurementOperator(e)
                        for e in self.effects)
        total = sum(e.mat for e in effects)
        if np.linalg.norm(total - np.eye(total.shape[0])) > 1e-9:
            raise ValueError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self) -> int:
        return self.effects[0].mat.shape[0]

    def matrices(self) -> list[np.ndarray]:
        return [e.mat for e in self.effects]

    def probabilities(self, rho) -> np.ndarray:
        rho = np.asarray(rho)
        p = np.array([linops.expectation(e.mat, rho) for e in self.effects])
        return np.clip(p, 0.0, None)


class KrausChannel:
    """CPTP map ``rho -> sum_j K_j rho K_j^dagger``.

    Calling the channel returns a raw ndarray; use :func:`apply` for a
    validated :class:`DensityOperator`.
    """

    def __init__(self, kraus: Sequence, label: str = ""):
        ks = [np.asarray(k, dtype=complex) for k in kraus]
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ks[0].shape
        if any(k.ndim != 2 or k.shape != shape for k in ks):
            raise DimensionMismatch("Kraus operators must share one 2-d shape")
        self.kraus = np.stack(ks)
        self.label = label
        gram = np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)
        if np.linalg.norm(gram - np.eye(self.dim_in)) > CPTP_TOL:
            raise ValueError(f"channel {label!r} is not trace preserving")

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim_in, self.dim_in):
            raise DimensionMismatch(f"channel {self.label!r} expects dim {self.dim_in}, got {rho.shape}")
        out = np.einsum("kij,jl,kml->im", self.kraus, rho, self.kraus.conj())
        return (out + out.conj().T) / 2

    def __len__(self) -> int:
        return self.kraus.shape[0]

    def __repr__(self) -> str:
        return f"KrausChannel({self.label!r}, {self.dim_in}->{self.dim_out}, {len(self)} Kraus ops)"


@dataclass
class StateMap:
    """Opaque state transformer, for maps that are not (convenient) Kraus channels."""

    fn: Callable[[np.ndarray], np.ndarray]
    dim_in: int
    dim_out: int
    label: str = ""

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim_in, self.dim_in):
            raise DimensionMismatch(f"map {self.label!r} expects dim {self.dim_in}, got {rho.shape}")
        return self.fn(rho)


@dataclass(eq=False)
class NeighborRelation:
    """Finite list of declared neighbouring pairs; treated as symmetric."""

    pairs: list = field(default_factory=list)

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("a neighbour relation needs at least one pair")
        pairs = []
        for rho, sigma in self.pairs:
            rho = rho if isinstance(rho, DensityOperator) else DensityOperator(rho)
            sigma = sigma if isinstance(sigma, DensityOperator) else DensityOperator(sigma)
            if rho.dim != sigma.dim:
                raise DimensionMismatch("neighbouring states must share a dimension")
            pairs.append((rho, sigma))
        if len({r.dim for r, _ in pairs}) != 1:
            raise DimensionMismatch("all pairs of a relation must share a dimension")
        self.pairs = pairs

    @property
    def dim(self) -> int:
        return self.pairs[0][0].dim

    def __len__(self) -> int:
        return len(self.pairs)

    def oriented(self) -> Iterator[tuple[int, int, np.ndarray, np.ndarray]]:
        """Yield ``(pair_index, orientation, first, second)`` for both orientations."""
        for i, (rho, sigma) in enumerate(self.pairs):
            yield i, 0, rho.mat, sigma.mat
            yield i, 1, sigma.mat, rho.mat


def product_relation(relations: Sequence[NeighborRelation]) -> NeighborRelation:
    """Product neighbours ``(x rho_i, x sigma_i)`` with ``rho_i ~ sigma_i`` per slot.

    Each slot contributes both orientations of its pairs, so mixed-orientation
    products are included explicitly.
    """
    per_slot = [[(a, b) for _, _, a, b in rel.oriented()] for rel in relations]
    pairs = []
    for combo in itertools.product(*per_slot):
        pairs.append((linops.tensor_all([c[0] for c in combo]),
                      linops.tensor_all([c[1] for c in combo])))
    return NeighborRelation(pairs)


def apply(ch, rho) -> DensityOperator:
    label = getattr(rho, "label", None)
    return DensityOperator(ch(np.asarray(rho)), label=label)


def compose_tensor(chs: Sequence[KrausChannel], max_dim: int = linops.MAX_DIM) -> KrausChannel:
    if not chs:
        raise ValueError("need at least one channel")
    kraus = list(chs[0].kraus)
    for ch in chs[1:]:
        kraus = [linops.tensor(a, b, max_dim) for a in kraus for b in ch.kraus]
    return KrausChannel(kraus, label=" (x) ".join(c.label for c in chs))


def compose_factorized(chs: Sequence) -> StateMap | KrausChannel:
    """``rho -> A_1(rho) (x) ... (x) A_m(rho)``; nonlinear, hence a StateMap."""
    if not chs:
        raise ValueError("need at least one channel")
    if len(chs) == 1:
        return chs[0]
    if len({c.dim_in for c in chs}) != 1:
        raise DimensionMismatch("factorized composition needs a common input dimension")
    dim_out = int(np.prod([c.dim_out for c in chs]))

    def fn(rho):
        return linops.tensor_all([c(rho) for c in chs])

    return StateMap(fn, chs[0].dim_in, dim_out, label=" & ".join(c.label for c in chs))


def marginal_channel(ch: KrausChannel, dims: Sequence[int], keep) -> KrausChannel:
    """``rho -> Tr_{not keep}(ch(rho))``, returned in Kraus form.

    Kraus operators are ``(<b| on traced slots, I on kept slots) K_j``.
    """
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != ch.dim_out:
        raise DimensionMismatch(f"dims {dims} do not factor dim_out={ch.dim_out}")
    keep = sorted({int(k) for k in keep})
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise DimensionMismatch(f"invalid keep set {keep}")
    traced = [i for i in range(len(dims)) if i not in keep]
    kraus = []
    for b in itertools.product(*[range(dims[i]) for i in traced]):
        slot_ops = []
        bi = iter(b)
        for i, d in enumerate(dims):
            if i in keep:
                slot_ops.append(np.eye(d))
            else:
                slot_ops.append(np.eye(d)[next(bi)][None, :])
        proj = linops.tensor_all(slot_ops, max_dim=max(linops.MAX_DIM, ch.dim_out))
        kraus.extend(proj @ k for k in ch.kraus)
    return KrausChannel(kraus, label=f"Tr_{traced}[{ch.label}]")


# -- channel zoo -------------------------------------------------------------

def ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


PHI_PLUS = (ket("00") + ket("11")) / np.sqrt(2)
PHI_MINUS = (ket("00") - ket("11")) / np.sqrt(2)


def identity(d: int = 2) -> KrausChannel:
    return KrausChannel([np.eye(d)], label=f"id_{d}")


def _weyl(d: int) -> list[np.ndarray]:
    x = np.roll(np.eye(d), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return [np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b)
            for a in range(d) for b in range(d)]


def depolarizing(p: float, d: int = 2) -> KrausChannel:
    """``rho -> (1 - p) rho + p I/d``."""
    if not 0 <= p <= 1:
        raise ParameterOutOfRange(f"depolarizing probability {p} not in [0, 1]")
    ws = _weyl(d)
    coeffs = [np.sqrt(1 - p + p / d**2)] + [np.sqrt(p) / d] * (len(ws) - 1)
    kraus = [c * w for c, w in zip(coeffs, ws) if c > 0]
    return KrausChannel(kraus, label=f"depol({p:g})")


def amplitude_damping(gamma: float) -> KrausChannel:
    if not 0 <= gamma <= 1:
        raise ParameterOutOfRange(f"damping {gamma} not in [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return KrausChannel([k0, k1], label=f"ampdamp({gamma:g})")


def dephasing(d: int = 2) -> KrausChannel:
    """Completely dephasing channel; embeds diagonal (classical) data unchanged."""
    return KrausChannel([proj(np.eye(d)[i]) for i in range(d)], label=f"dephase_{d}")


classical_embedding = dephasing


def measure_and_prepare(povm) -> KrausChannel:
    """``rho -> sum_x Tr(M_x rho) |x><x|`` with Kraus ops ``|x><j| sqrt(M_x)``."""
    effects = povm.matrices() if isinstance(povm, Povm) else [np.asarray(e) for e in povm]
    d, n = effects[0].shape[0], len(effects)
    kraus = []
    for x, m in enumerate(effects):
        root = linops.matrix_fn_on_support(m, np.sqrt) if np.linalg.norm(m) > 0 else m
        for j in range(d):
            k = np.zeros((n, d), dtype=complex)
            k[x, :] = root[j, :]
            kraus.append(k)
    return KrausChannel(kraus, label="measure")


def cnot_ancilla() -> KrausChannel:
    """``rho -> CNOT (rho (x) |0><0|) CNOT^dagger`` as a 4x2 isometry."""
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    append = np.kron(np.eye(2), np.array([[1], [0]]))
    return KrausChannel([cnot @ append], label="cnot_ancilla")


def bell_joint() -> KrausChannel:
    """Joint channel with ``|0><0| -> |Phi+><Phi+|`` and ``|1><1| -> |Phi-><Phi-|``."""
    k0 = np.outer(PHI_PLUS, ket("0").conj())
    k1 = np.outer(PHI_MINUS, ket("1").conj())
    return KrausChannel([k0, k1], label="bell_joint")


def random_channel(d_in: int, d_out: int, n_kraus: int, rng) -> KrausChannel:
    from .ensembles import random_kraus
    return KrausChannel(random_kraus(d_in, d_out, n_kraus, rng), label="random")


def channel_zoo() -> dict[str, Callable[..., KrausChannel]]:
    return {
        "identity": identity,
        "depolarizing": depolarizing,
        "amplitude_damping": amplitude_damping,
        "dephasing": dephasing,
        "classical_embedding": classical_embedding,
        "measure_and_prepare": measure_and_prepare,
        "cnot_ancilla": cnot_ancilla,
        "bell_joint": bell_joint,
    }


def bell_relation() -> NeighborRelation:
    return NeighborRelation([(proj(ket("0")), proj(ket("1")))])
