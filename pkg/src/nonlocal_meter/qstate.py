"""Dense state vectors for the two-particle + two-pointer register.

Qubit order is fixed as ``[SYSTEM_A, SYSTEM_B, POINTER_A, POINTER_B]`` and the
basis index of a computational state is ``8*sa + 4*sb + 2*pa + pb``.  Value 0
is spin up along z (or pointer arm L), value 1 is spin down (arm R).

A system-only state is the 4-amplitude vector over the first two qubits, so the
same role numbers address it.  Every function returns a fresh array.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Mapping, Sequence

import numpy as np

NORM_TOL = 1e-12
EQUAL_TOL = 1e-10
IMPOSSIBLE = 1e-14


class Qubit(IntEnum):
    SYSTEM_A = 0
    SYSTEM_B = 1
    POINTER_A = 2
    POINTER_B = 3


SYSTEM_QUBITS = (Qubit.SYSTEM_A, Qubit.SYSTEM_B)
POINTER_QUBITS = (Qubit.POINTER_A, Qubit.POINTER_B)


class NormalizationError(ValueError):
    pass


class ImpossibleBranch(ValueError):
    """Raised when a projection has (numerically) zero probability."""

    def __init__(self, prob: float):
        super().__init__(f"impossible branch: probability {prob:.3e} below cutoff {IMPOSSIBLE:g}")
        self.prob = prob


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


def n_qubits(state: np.ndarray) -> int:
    n = int(state.shape[0]).bit_length() - 1
    if state.ndim != 1 or 1 << n != state.shape[0]:
        raise ValueError(f"state length {state.shape} is not a power of two")
    return n


def as_state(amps: Sequence[complex] | np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    """Copy *amps* into a complex vector, checking finiteness and unit norm."""
    v = np.array(amps, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError("amplitudes must be finite")
    n_qubits(v)
    norm2 = float(np.vdot(v, v).real)
    if abs(norm2 - 1.0) > tol:
        raise NormalizationError(f"state norm^2 is {norm2!r}, expected 1")
    return v


def normalized(amps: Sequence[complex] | np.ndarray) -> np.ndarray:
    v = np.array(amps, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0 or not np.isfinite(norm):
        raise NormalizationError("cannot normalize a zero or non-finite vector")
    return v / norm


def basis_index(sa: int, sb: int, pa: int = 0, pb: int = 0) -> int:
    return 8 * sa + 4 * sb + 2 * pa + pb


def ket(bits: str) -> np.ndarray:
    """Computational basis state from a bit string, e.g. ``ket("0110")``."""
    v = np.zeros(1 << len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


@dataclass(frozen=True)
class SpinAxis:
    """Unit Bloch vector selecting the observable ``n . sigma``."""

    nx: float
    ny: float
    nz: float

    def __post_init__(self):
        norm2 = self.nx**2 + self.ny**2 + self.nz**2
        if not np.isfinite(norm2) or abs(norm2 - 1.0) > NORM_TOL:
            raise NormalizationError(f"axis ({self.nx}, {self.ny}, {self.nz}) is not a unit vector")

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "SpinAxis":
        x, y, z = (float(c) for c in v)
        norm = float(np.sqrt(x * x + y * y + z * z))
        if norm == 0:
            raise NormalizationError("zero axis")
        return cls(x / norm, y / norm, z / norm)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz])

    def operator(self) -> np.ndarray:
        return self.nx * PAULI_X + self.ny * PAULI_Y + self.nz * PAULI_Z

    def up(self) -> np.ndarray:
        """Eigenvector of ``n . sigma`` with eigenvalue +1."""
        x, y, z = self.nx, self.ny, self.nz
        # pick the branch that avoids dividing by ~0 near the south pole
        if z >= 0:
            v = np.array([1 + z, x + 1j * y])
        else:
            v = np.array([x - 1j * y, 1 - z])
        return v / np.linalg.norm(v)

    def down(self) -> np.ndarray:
        """Eigenvector with eigenvalue -1, orthogonal to :meth:`up`."""
        a, b = self.up()
        return np.array([-np.conj(b), np.conj(a)])

    def eigenbasis(self) -> np.ndarray:
        """Unitary whose columns are ``up()`` and ``down()``."""
        return np.column_stack([self.up(), self.down()])


X_AXIS = SpinAxis(1.0, 0.0, 0.0)
Y_AXIS = SpinAxis(0.0, 1.0, 0.0)
Z_AXIS = SpinAxis(0.0, 0.0, 1.0)


def check_unitary(u: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape[0] != u.shape[1] or not np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol, rtol=0):
        raise ValueError("matrix is not unitary")
    return u


def _apply_on(state: np.ndarray, qubits: Sequence[int], op: np.ndarray) -> np.ndarray:
    """Apply a (2^k x 2^k) operator acting on *qubits* of *state*."""
    n = n_qubits(state)
    k = len(qubits)
    t = state.reshape((2,) * n)
    opt = op.reshape((2,) * (2 * k))
    out = np.tensordot(opt, t, axes=(list(range(k, 2 * k)), list(qubits)))
    # tensordot puts the acted-on axes first; move them back into place
    out = np.moveaxis(out, list(range(k)), list(qubits))
    return out.reshape(-1)


def embed(system: Sequence[complex] | np.ndarray, pointer: Sequence[complex] | np.ndarray) -> np.ndarray:
    """Joint register state ``system (x) pointer``."""
    return np.kron(as_state(system), as_state(pointer))


def apply_local(state: np.ndarray, qubit: int, u: np.ndarray) -> np.ndarray:
    u = check_unitary(u)
    if u.shape != (2, 2):
        raise ValueError("local unitary must be 2x2")
    if not 0 <= int(qubit) < n_qubits(state):
        raise ValueError(f"no qubit {qubit!r} in a {n_qubits(state)}-qubit state")
    return _apply_on(np.asarray(state, dtype=complex), [int(qubit)], u)


def apply_phase_on_mask(state: np.ndarray, assignment: Mapping[int, int], phase: float) -> np.ndarray:
    """Multiply every amplitude whose qubits match *assignment* by ``exp(i*phase)``.

    The assignment may fix at most one system qubit and one pointer qubit.
    """
    if not assignment:
        raise ValueError("empty assignment would only apply a global phase")
    roles = [Qubit(q) for q in assignment]
    if sum(q in SYSTEM_QUBITS for q in roles) > 1 or sum(q in POINTER_QUBITS for q in roles) > 1:
        raise ValueError("assignment may name at most one system and one pointer qubit")
    n = n_qubits(state)
    out = np.array(state, dtype=complex).reshape((2,) * n)
    idx: list[object] = [slice(None)] * n
    for q, value in assignment.items():
        if value not in (0, 1):
            raise ValueError(f"qubit value must be 0 or 1, got {value!r}")
        idx[int(q)] = value
    out[tuple(idx)] *= np.exp(1j * phase)
    return out.reshape(-1)


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector onto ``span(vectors)`` acting on ``qubits``."""

    qubits: tuple[int, ...]
    vectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        dim = 1 << len(self.qubits)
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("repeated target qubit")
        vecs = np.array([np.asarray(v, dtype=complex) for v in self.vectors])
        if vecs.ndim != 2 or vecs.shape[1] != dim or not 1 <= len(vecs) <= dim:
            raise ValueError(f"need 1..{dim} spanning vectors of length {dim}")
        gram = vecs.conj() @ vecs.T
        if not np.allclose(gram, np.eye(len(vecs)), atol=NORM_TOL, rtol=0):
            raise ValueError("spanning vectors are not orthonormal")

    @classmethod
    def product(cls, a: np.ndarray, b: np.ndarray, qubits: tuple[int, int] = SYSTEM_QUBITS) -> "Projector":
        """Rank-1 projector onto ``|a>|b>``."""
        return cls(tuple(qubits), (np.kron(as_state(a), as_state(b)),))

    def matrix(self) -> np.ndarray:
        vecs = np.array(self.vectors, dtype=complex)
        return vecs.T @ vecs.conj()

    def complement(self) -> "Projector":
        m = np.eye(1 << len(self.qubits)) - self.matrix()
        w, v = np.linalg.eigh(m)
        return Projector(self.qubits, tuple(v[:, i] for i in np.flatnonzero(w > 0.5)))


def project(state: np.ndarray, proj: Projector) -> np.ndarray:
    """Unnormalized ``P|psi>``."""
    return _apply_on(np.asarray(state, dtype=complex), proj.qubits, proj.matrix())


def measure_projective(state: np.ndarray, proj: Projector) -> tuple[float, np.ndarray]:
    """Probability of the projector's outcome and the renormalized post-state.

    Raises :class:`ImpossibleBranch` when the probability is below the cutoff.
    """
    v = project(state, proj)
    prob = float(np.vdot(v, v).real)
    if prob < IMPOSSIBLE:
        raise ImpossibleBranch(prob)
    return min(prob, 1.0), v / np.sqrt(prob)


def probability(state: np.ndarray, proj: Projector) -> float:
    """Like :func:`measure_projective` but never raises; returns 0 for impossible branches."""
    v = project(state, proj)
    return float(np.vdot(v, v).real)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    # averaging both orders makes the result exactly symmetric
    return 0.5 * (abs(np.vdot(a, b)) ** 2 + abs(np.vdot(b, a)) ** 2)


def system_pointer_matrix(state: np.ndarray) -> np.ndarray:
    if state.shape != (16,):
        raise ValueError("expected a 16-amplitude register state")
    return np.asarray(state, dtype=complex).reshape(4, 4)


def reduced_system(state: np.ndarray) -> np.ndarray:
    m = system_pointer_matrix(state)
    return m @ m.conj().T


def factorization_check(state: np.ndarray) -> float:
    """Purity ``Tr(rho_sys^2)`` of the reduced system state; 1 iff system and pointer factorize."""
    rho = reduced_system(as_state(state))
    return float(np.real(np.trace(rho @ rho)))


def split_product(state: np.ndarray, tol: float = EQUAL_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Factor a product state into ``(system, pointer)`` unit vectors.

    The global phase is assigned to the system factor.  Raises ``ValueError``
    if the state is entangled across the system/pointer cut.
    """
    u, s, vh = np.linalg.svd(system_pointer_matrix(state))
    norm = float(np.sqrt(np.sum(s**2)))
    if norm == 0:
        raise NormalizationError("zero state")
    if s[1] / norm > np.sqrt(tol):
        raise ValueError(f"system and pointer are entangled (second Schmidt coefficient {s[1] / norm:.3e})")
    return u[:, 0] * (s[0] / norm), vh[0]
