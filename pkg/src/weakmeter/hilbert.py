"""Labeled composite Hilbert spaces and the dense linear algebra on them.

States and operators are plain complex numpy arrays tagged with a
:class:`SpaceSignature` that names each tensor factor.  Factor order is part
of a signature's identity; operations never reorder factors implicitly.
Everything is immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SignatureError

__all__ = [
    "SpaceSignature",
    "Ket",
    "Operator",
    "identity",
    "tensor",
    "extend",
    "inner",
    "mat_exp",
    "dft_matrix",
    "dft_q_to_p",
    "idft_p_to_q",
]

FLAG_ATOL = 1e-12


def _frozen(values, dtype=complex) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpaceSignature:
    """Ordered tuple of ``(label, dimension)`` tensor factors.

    Two signatures with permuted factors are distinct spaces.
    """

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        object.__setattr__(self, "factors", factors)
        labels = [label for label, _ in factors]
        if len(set(labels)) != len(labels):
            raise SignatureError(f"duplicate factor labels: {labels}")
        if any(dim < 1 for _, dim in factors):
            raise SignatureError(f"factor dimensions must be positive: {factors}")

    @classmethod
    def of(cls, *factors: tuple[str, int]) -> "SpaceSignature":
        return cls(tuple(factors))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def dim(self) -> int:
        return math.prod(self.dims) if self.factors else 1

    def axis_of(self, label: str) -> int:
        for i, (name, _) in enumerate(self.factors):
            if name == label:
                return i
        raise SignatureError(f"no factor labeled {label!r} in {self.labels}")

    def dimension_of(self, label: str) -> int:
        return self.factors[self.axis_of(label)][1]

    def concat(self, other: "SpaceSignature") -> "SpaceSignature":
        return SpaceSignature(self.factors + other.factors)

    def drop(self, labels) -> "SpaceSignature":
        keep = tuple(f for f in self.factors if f[0] not in set(labels))
        return SpaceSignature(keep)

    def __str__(self) -> str:
        return " * ".join(f"{label}:{dim}" for label, dim in self.factors) or "scalar"


@dataclass(frozen=True, eq=False)
class Ket:
    """Complex amplitude vector over a signature's product basis.

    May be unnormalized (post-selection output).  When ``normalized=True``
    the norm is verified to lie within 1e-12 of one.
    """

    signature: SpaceSignature
    amplitudes: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        amps = _frozen(np.asarray(self.amplitudes).reshape(-1))
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.signature.dim,):
            raise SignatureError(
                f"amplitude length {amps.shape[0]} != signature dimension {self.signature.dim}"
            )
        if not np.all(np.isfinite(amps.view(float))):
            raise ValueError("ket amplitudes must be finite")
        if self.normalized and abs(self.norm() - 1.0) > FLAG_ATOL:
            raise ValueError(f"ket flagged normalized but norm = {self.norm()!r}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def unit(self) -> "Ket":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero ket")
        return Ket(self.signature, self.amplitudes / n, normalized=True)

    def __add__(self, other: "Ket") -> "Ket":
        if self.signature != other.signature:
            raise SignatureError("cannot add kets on different signatures")
        return Ket(self.signature, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "Ket") -> "Ket":
        if self.signature != other.signature:
            raise SignatureError("cannot subtract kets on different signatures")
        return Ket(self.signature, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar) -> "Ket":
        return Ket(self.signature, self.amplitudes * complex(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex square matrix tagged with its signature.

    ``hermitian``/``unitary`` flags are verified to 1e-12 at construction.
    """

    signature: SpaceSignature
    matrix: np.ndarray
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        mat = _frozen(np.asarray(self.matrix))
        object.__setattr__(self, "matrix", mat)
        d = self.signature.dim
        if mat.shape != (d, d):
            raise SignatureError(f"matrix shape {mat.shape} != ({d}, {d})")
        if not np.all(np.isfinite(mat.view(float))):
            raise ValueError("operator entries must be finite")
        if self.hermitian and not self.is_hermitian(FLAG_ATOL):
            raise ValueError("operator flagged hermitian is not")
        if self.unitary and not self.is_unitary(FLAG_ATOL):
            raise ValueError("operator flagged unitary is not")

    def is_hermitian(self, atol: float = FLAG_ATOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= atol)

    def is_unitary(self, atol: float = FLAG_ATOL) -> bool:
        d = self.signature.dim
        gram = self.matrix.conj().T @ self.matrix
        return bool(np.max(np.abs(gram - np.eye(d))) <= atol)

    def dagger(self) -> "Operator":
        return Operator(self.signature, self.matrix.conj().T)

    def apply(self, ket: Ket) -> Ket:
        if ket.signature != self.signature:
            raise SignatureError(
                f"operator on {self.signature} applied to ket on {ket.signature}"
            )
        return Ket(self.signature, self.matrix @ ket.amplitudes)

    def __matmul__(self, other: "Operator") -> "Operator":
        if self.signature != other.signature:
            raise SignatureError("cannot compose operators on different signatures")
        return Operator(self.signature, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        if self.signature != other.signature:
            raise SignatureError("cannot add operators on different signatures")
        return Operator(self.signature, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        if self.signature != other.signature:
            raise SignatureError("cannot subtract operators on different signatures")
        return Operator(self.signature, self.matrix - other.matrix)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.signature, self.matrix * complex(scalar))

    __rmul__ = __mul__


def identity(sig_or_dim, label: str = "space") -> Operator:
    """Identity operator on a signature (or a bare dimension, given a label)."""
    if isinstance(sig_or_dim, SpaceSignature):
        sig = sig_or_dim
    else:
        sig = SpaceSignature(((label, int(sig_or_dim)),))
    return Operator(sig, np.eye(sig.dim, dtype=complex), hermitian=True, unitary=True)


def tensor(a, b):
    """Kronecker product of two kets or two operators.

    The result's signature is the concatenation of the operands'; duplicate
    factor labels raise :class:`SignatureError`.
    """
    sig = a.signature.concat(b.signature)
    if isinstance(a, Ket) and isinstance(b, Ket):
        return Ket(sig, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, Operator) and isinstance(b, Operator):
        return Operator(sig, np.kron(a.matrix, b.matrix))
    raise TypeError("tensor expects two kets or two operators")


def extend(op: Operator, target: SpaceSignature) -> Operator:
    """Embed ``op`` into ``target`` by tensoring identities on missing factors.

    Every factor of ``op`` must appear in ``target`` (same dimension); the
    result is factor-ordered per ``target``, so the operator's factors may sit
    anywhere in the target order, contiguously or not.
    """
    for label, dim in op.signature.factors:
        try:
            tdim = target.dimension_of(label)
        except SignatureError:
            raise SignatureError(
                f"factor {label!r} of operator absent from target {target.labels}"
            ) from None
        if tdim != dim:
            raise SignatureError(
                f"factor {label!r} has dimension {dim} in operator, {tdim} in target"
            )

    own = op.signature.labels
    rest = [f for f in target.factors if f[0] not in set(own)]
    rest_dim = math.prod(d for _, d in rest) if rest else 1
    full = np.kron(op.matrix, np.eye(rest_dim, dtype=complex))

    # current factor order: op factors then the remaining target factors
    current = list(own) + [label for label, _ in rest]
    dims = {label: dim for label, dim in target.factors}
    perm = [current.index(label) for label in target.labels]
    n = len(current)
    shaped = full.reshape([dims[label] for label in current] * 2)
    shaped = shaped.transpose(perm + [n + p for p in perm])
    return Operator(target, shaped.reshape(target.dim, target.dim))


def inner(bra: Ket, ket: Ket) -> complex:
    """<bra|ket>, conjugate-linear in the first argument."""
    if bra.signature != ket.signature:
        raise SignatureError(
            f"inner product between different signatures: {bra.signature} vs {ket.signature}"
        )
    return complex(np.vdot(bra.amplitudes, ket.amplitudes))


def mat_exp(op, scale: complex = 1.0):
    """exp(scale * H) for an :class:`Operator` or a raw square matrix.

    Hermitian inputs go through an eigendecomposition (exactness over speed);
    anything else falls back to scaling-and-squaring.
    """
    if isinstance(op, Operator):
        return Operator(op.signature, mat_exp(op.matrix, scale))
    mat = np.asarray(op, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"mat_exp needs a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat.view(float))):
        raise ValueError("mat_exp input has non-finite entries")
    scale = complex(scale)
    tol = FLAG_ATOL * max(1.0, float(np.max(np.abs(mat))))
    if np.max(np.abs(mat - mat.conj().T)) <= tol:
        w, v = np.linalg.eigh(mat)
        return (v * np.exp(scale * w)) @ v.conj().T
    return scipy.linalg.expm(scale * mat)


@functools.lru_cache(maxsize=32)
def _centered_dft_kernel(size: int) -> np.ndarray:
    n = (size - 1) // 2
    k = np.arange(-n, n + 1)
    kernel = np.exp(-2j * np.pi * np.outer(k, k) / size) / np.sqrt(size)
    kernel.setflags(write=False)
    return kernel


def dft_matrix(size: int) -> np.ndarray:
    """The unitary centered DFT kernel as a read-only (size x size) matrix."""
    if size % 2 == 0:
        raise ValueError(f"meter grid must have odd length 2N+1, got {size}")
    return _centered_dft_kernel(size)


def dft_q_to_p(meter_amplitudes) -> np.ndarray:
    """Unitary centered DFT from the q grid to the p grid.

    Kernel exp(-i 2pi k l / (2N+1)) / sqrt(2N+1) with k, l in {-N..N}; the
    momentum grid is p_l = 2*pi*l/(2N+1).  Norm is preserved to 1e-12.
    """
    vec = np.asarray(meter_amplitudes, dtype=complex).reshape(-1)
    if len(vec) % 2 == 0:
        raise ValueError(f"meter grid must have odd length 2N+1, got {len(vec)}")
    return _centered_dft_kernel(len(vec)) @ vec


def idft_p_to_q(meter_amplitudes) -> np.ndarray:
    """Inverse of :func:`dft_q_to_p`."""
    vec = np.asarray(meter_amplitudes, dtype=complex).reshape(-1)
    if len(vec) % 2 == 0:
        raise ValueError(f"meter grid must have odd length 2N+1, got {len(vec)}")
    return _centered_dft_kernel(len(vec)).conj().T @ vec
