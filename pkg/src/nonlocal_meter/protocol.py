"""Nonlocal von Neumann measurement with an entangled two-site pointer.

The pointer starts in ``(|LR> + |RL>)/sqrt(2)``.  Each site couples its particle
to its half of the pointer with a conditional pi phase:

* site A: phase pi when particle A is in the -1 eigenstate of its axis and the
  pointer at A is in arm R;
* site B: phase pi when particle B is in the -1 eigenstate of its axis and the
  pointer at B is in arm L.

This is ``exp(-i pi/4 (1 - s_a)(1 -+ pz))`` per site.  A +1 eigenstate of the
product observable leaves the pointer in Psi+, a -1 eigenstate flips it to
Psi-.  Both pointer halves are then read out in ``|+-> = (|L> +- e^{i phi}|R>)/sqrt(2)``
and equal local labels mean +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .qstate import (
    EQUAL_TOL,
    IMPOSSIBLE,
    ImpossibleBranch,
    Projector,
    Qubit,
    SpinAxis,
    apply_local,
    apply_phase_on_mask,
    as_state,
    embed,
    fidelity,
    measure_projective,
    split_product,
)

SQRT_HALF = np.sqrt(0.5)

PORTS = ("++", "+-", "-+", "--")
Site = Literal["A", "B"]


def prepare_pointer() -> np.ndarray:
    """Pointer state Psi+ in (LL, LR, RL, RR) order."""
    return np.array([0.0, SQRT_HALF, SQRT_HALF, 0.0], dtype=complex)


def pointer_psi_minus() -> np.ndarray:
    return np.array([0.0, SQRT_HALF, -SQRT_HALF, 0.0], dtype=complex)


@dataclass(frozen=True)
class CouplingSpec:
    axis_a: Optional[SpinAxis] = None
    axis_b: Optional[SpinAxis] = None

    def __post_init__(self):
        if self.axis_a is None and self.axis_b is None:
            raise ValueError("coupling needs at least one axis")

    @property
    def nonlocal_(self) -> bool:
        return self.axis_a is not None and self.axis_b is not None


# (system qubit, pointer qubit, pointer arm that picks up the phase)
_SITES = {
    "A": (Qubit.SYSTEM_A, Qubit.POINTER_A, 1),
    "B": (Qubit.SYSTEM_B, Qubit.POINTER_B, 0),
}


def _couple_site(state: np.ndarray, site: Site, axis: SpinAxis) -> np.ndarray:
    sys_q, ptr_q, arm = _SITES[site]
    basis = axis.eigenbasis()
    state = apply_local(state, sys_q, basis.conj().T)
    state = apply_phase_on_mask(state, {sys_q: 1, ptr_q: arm}, np.pi)
    return apply_local(state, sys_q, basis)


def apply_coupling(state: np.ndarray, spec: CouplingSpec) -> np.ndarray:
    """Apply the coupling unitary of *spec* to a 16-amplitude register state."""
    if spec.axis_a is not None:
        state = _couple_site(state, "A", spec.axis_a)
    if spec.axis_b is not None:
        state = _couple_site(state, "B", spec.axis_b)
    return state


def coupling_unitary(spec: CouplingSpec) -> np.ndarray:
    """The 16x16 matrix of :func:`apply_coupling`, built column by column."""
    eye = np.eye(16, dtype=complex)
    return np.column_stack([apply_coupling(eye[:, j], spec) for j in range(16)])


def readout_vectors(phi: float = 0.0) -> dict[str, np.ndarray]:
    """Single-pointer readout states ``|+>`` and ``|->`` over (L, R)."""
    e = np.exp(1j * phi)
    return {"+": np.array([1.0, e]) * SQRT_HALF, "-": np.array([1.0, -e]) * SQRT_HALF}


def port_projector(port: str, phi: float = 0.0) -> Projector:
    r = readout_vectors(phi)
    return Projector(tuple(int(q) for q in (Qubit.POINTER_A, Qubit.POINTER_B)), (np.kron(r[port[0]], r[port[1]]),))


def branch_projector(eigenvalue: int, phi: float = 0.0) -> Projector:
    """Rank-2 pointer projector merging the correlated (+1) or anticorrelated (-1) ports."""
    ports = ("++", "--") if eigenvalue == 1 else ("+-", "-+")
    return Projector(
        (int(Qubit.POINTER_A), int(Qubit.POINTER_B)),
        tuple(port_projector(p, phi).vectors[0] for p in ports),
    )


def decode(local_a: str, local_b: str) -> int:
    if local_a not in "+-" or local_b not in "+-" or len(local_a) != 1 or len(local_b) != 1:
        raise ValueError(f"readout labels must be '+' or '-', got {local_a!r}, {local_b!r}")
    return 1 if local_a == local_b else -1


@dataclass(frozen=True)
class Outcome:
    """Probability of one outcome and the system state it leaves behind.

    ``system`` is ``None`` for impossible outcomes.
    """

    probability: float
    system: Optional[np.ndarray]
    joint: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def possible(self) -> bool:
        return self.system is not None


def _outcome(state: np.ndarray, proj: Projector) -> Outcome:
    try:
        prob, post = measure_projective(state, proj)
    except ImpossibleBranch:
        return Outcome(0.0, None)
    system, _ = split_product(post)
    return Outcome(prob, system, post)


def readout(state: np.ndarray, phi: float = 0.0) -> dict[str, Outcome]:
    """Local pointer readouts at both sites: one outcome per port ``++``, ``+-``, ``-+``, ``--``."""
    state = as_state(state)
    return {port: _outcome(state, port_projector(port, phi)) for port in PORTS}


@dataclass(frozen=True)
class MeasurementResult:
    branches: dict[int, Outcome]
    ports: dict[str, Outcome]
    coupled: Optional[np.ndarray] = field(default=None, repr=False)

    def probabilities(self) -> dict[int, float]:
        return {k: b.probability for k, b in self.branches.items()}

    def port_probabilities(self) -> dict[str, float]:
        return {k: b.probability for k, b in self.ports.items()}


def _run_pointer_scheme(system: np.ndarray, spec: CouplingSpec, phi: float) -> MeasurementResult:
    joint = embed(system, prepare_pointer())
    coupled = apply_coupling(joint, spec)
    ports = readout(coupled, phi)
    branches = {ev: _outcome(coupled, branch_projector(ev, phi)) for ev in (1, -1)}
    return MeasurementResult(branches, ports, coupled)


def measure_nonlocal(system: np.ndarray, spec: CouplingSpec, phi: float = 0.0) -> MeasurementResult:
    """Measure the product ``(a.sigma)_A (b.sigma)_B`` through the pointer scheme."""
    if not spec.nonlocal_:
        raise ValueError("nonlocal measurement needs axes at both sites")
    return _run_pointer_scheme(as_state(system), spec, phi)


def measure_local(system: np.ndarray, site: Site, axis: SpinAxis, phi: float = 0.0) -> MeasurementResult:
    """Measure one particle's spin with only that site's coupling switched on.

    The pointer is still read out at both sites and decoded by correlation.
    """
    if site == "A":
        spec = CouplingSpec(axis_a=axis)
    elif site == "B":
        spec = CouplingSpec(axis_b=axis)
    else:
        raise ValueError(f"site must be 'A' or 'B', got {site!r}")
    return _run_pointer_scheme(as_state(system), spec, phi)


def measure(system: np.ndarray, spec: CouplingSpec, phi: float = 0.0) -> MeasurementResult:
    if spec.nonlocal_:
        return measure_nonlocal(system, spec, phi)
    if spec.axis_a is not None:
        return measure_local(system, "A", spec.axis_a, phi)
    return measure_local(system, "B", spec.axis_b, phi)


def product_eigenspace(spec: CouplingSpec, eigenvalue: int) -> Projector:
    """Projector onto the ``eigenvalue`` eigenspace of the product observable on the system."""
    if not spec.nonlocal_:
        raise ValueError("product observable needs axes at both sites")
    a = {1: spec.axis_a.up(), -1: spec.axis_a.down()}
    b = {1: spec.axis_b.up(), -1: spec.axis_b.down()}
    vecs = tuple(np.kron(a[ea], b[eb]) for ea in (1, -1) for eb in (1, -1) if ea * eb == eigenvalue)
    return Projector((int(Qubit.SYSTEM_A), int(Qubit.SYSTEM_B)), vecs)


def projective_oracle(system: np.ndarray, spec: CouplingSpec) -> MeasurementResult:
    """Textbook projective measurement of the product observable, no pointer involved."""
    system = as_state(system)
    branches = {}
    for ev in (1, -1):
        try:
            prob, post = measure_projective(system, product_eigenspace(spec, ev))
        except ImpossibleBranch:
            branches[ev] = Outcome(0.0, None)
        else:
            branches[ev] = Outcome(prob, post)
    return MeasurementResult(branches, {})


def pointer_after_coupling(system: np.ndarray, spec: CouplingSpec) -> np.ndarray:
    """Pointer factor after coupling an eigenstate; raises if system and pointer entangle."""
    coupled = apply_coupling(embed(system, prepare_pointer()), spec)
    _, pointer = split_product(coupled)
    return pointer


def results_agree(a: MeasurementResult, b: MeasurementResult, tol: float = EQUAL_TOL) -> bool:
    """Same branch probabilities and (for possible branches) same post-states up to phase."""
    for ev in (1, -1):
        x, y = a.branches[ev], b.branches[ev]
        if abs(x.probability - y.probability) > tol:
            return False
        if x.probability > IMPOSSIBLE ** 0.5 and y.probability > IMPOSSIBLE ** 0.5:
            if abs(fidelity(x.system, y.system) - 1.0) > tol:
                return False
    return True


def modular_sum_check() -> list[dict]:
    """Tabulate ``(eA + eB) mod 4 - 1`` against ``eA * eB`` for the four z-eigenstates."""
    rows = []
    for label, ea, eb in (("up,up", 1, 1), ("up,down", 1, -1), ("down,up", -1, 1), ("down,down", -1, -1)):
        modular = (ea + eb) % 4 - 1
        rows.append({"state": label, "eig_a": ea, "eig_b": eb, "modular": modular,
                     "product": ea * eb, "holds": modular == ea * eb})
    return rows
