"""Scripted runs: reliability, nondemolition, product-rule failure, Hardy signaling.

Every run returns an :class:`ExperimentReport` holding exact probabilities and,
when ``shots > 0``, sampled coincidence counts.  Sampled tables draw from
consecutive stream ids of the master seed in the order the blocks are built.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .protocol import PORTS, CouplingSpec, MeasurementResult, Outcome, measure, measure_local, measure_nonlocal
from .qstate import (
    IMPOSSIBLE,
    ImpossibleBranch,
    Projector,
    X_AXIS,
    Y_AXIS,
    Z_AXIS,
    as_state,
    measure_projective,
    probability,
)
from .sampler import CountTable, SeedSpec, sample_counts

SQ = np.sqrt

NAMED_STATES: dict[str, np.ndarray] = {
    "psi1": np.array([1, 0, 0, 0], dtype=complex),
    "psi2": np.array([0, SQ(0.5), 1j * SQ(0.5), 0], dtype=complex),
    "psi3": np.array([SQ(0.5), SQ(0.1), -1j * SQ(0.2), SQ(0.2)], dtype=complex),
    "singlet": np.array([0, SQ(0.5), -SQ(0.5), 0], dtype=complex),
    "up_y,up_x": np.kron(Y_AXIS.up(), X_AXIS.up()),
    "up_y,down_x": np.kron(Y_AXIS.up(), X_AXIS.down()),
}

DEFAULT_POSTSELECTION = "up_y,up_x"

THETA1_UP = np.array([SQ(0.5), SQ(0.2)]) / SQ(0.7)
THETA2_UP = np.array([SQ(0.5), -SQ(0.2)]) / SQ(0.7)


def named_state(name: str) -> np.ndarray:
    try:
        return NAMED_STATES[name].copy()
    except KeyError:
        raise ValueError(f"unknown state {name!r}; choose from {sorted(NAMED_STATES)}") from None


def apply_visibility(dist: Mapping[str, float], v: float) -> dict[str, float]:
    """Mix *dist* with the uniform distribution over the same outcomes: ``v*p + (1-v)/n``."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    n = len(dist)
    return {k: v * p + (1.0 - v) / n for k, p in dist.items()}


def _clean(dist: Mapping[str, float]) -> dict[str, float]:
    """Zero out probabilities below the impossible-branch cutoff and renormalize."""
    out = {k: (0.0 if p < IMPOSSIBLE else float(p)) for k, p in dist.items()}
    total = sum(out.values())
    return {k: p / total for k, p in out.items()}


@dataclass
class Block:
    """One histogram of a run: exact probabilities plus optional count tables."""

    name: str
    exact: dict[str, float]
    counts: dict[str, CountTable] = field(default_factory=dict)
    info: dict[str, Any] = field(default_factory=dict)


@dataclass
class ExperimentReport:
    experiment: str
    shots: int
    seed: int
    phi: float
    visibility: float
    blocks: list[Block] = field(default_factory=list)
    impossible: list[str] = field(default_factory=list)

    def block(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)


class _Streams:
    def __init__(self, seed: int):
        self.seed = seed
        self._ids = itertools.count()

    def sample(self, dist: Mapping[str, float], shots: int) -> CountTable:
        return sample_counts(dist, shots, SeedSpec(self.seed, next(self._ids)))


def _decoded_from_ports(table: CountTable) -> CountTable:
    plus = table["++"] + table["--"]
    minus = table["+-"] + table["-+"]
    return CountTable(("+1", "-1"), (plus, minus))


def _decoded(result: MeasurementResult) -> dict[str, float]:
    return {"+1": result.branches[1].probability, "-1": result.branches[-1].probability}


def _measurement_blocks(
    name: str, result: MeasurementResult, shots: int, streams: _Streams, visibility: float
) -> list[Block]:
    ports = _clean(result.port_probabilities())
    decoded = _clean(_decoded(result))
    port_block = Block(f"{name}/ports", ports)
    decoded_block = Block(f"{name}/decoded", decoded)
    if streams is not None:
        table = streams.sample(apply_visibility(ports, visibility), shots)
        port_block.counts["coincidences"] = table
        decoded_block.counts["coincidences"] = _decoded_from_ports(table)
    return [decoded_block, port_block]


def run_reliability(shots: int = 100_000, seed: int = 42, phi: float = 0.0, visibility: float = 1.0,
                    sampled: bool = True) -> ExperimentReport:
    """Measure the z-z product on the three test states and histogram the four ports."""
    _check_shots(shots)
    report = ExperimentReport("reliability", shots, seed, phi, visibility)
    streams = _Streams(seed) if sampled else None
    zz = CouplingSpec(Z_AXIS, Z_AXIS)
    for name in ("psi1", "psi2", "psi3"):
        result = measure_nonlocal(NAMED_STATES[name], zz, phi)
        report.blocks.extend(_measurement_blocks(name, result, shots, streams, visibility))
    return report


def _product_projectors(
    a_states: Mapping[str, np.ndarray], b_states: Mapping[str, np.ndarray]
) -> dict[str, Projector]:
    return {la + lb: Projector.product(a, b) for la, a in a_states.items() for lb, b in b_states.items()}


def _axis_states(axis, tag: str) -> dict[str, np.ndarray]:
    return {f"+{tag}": axis.up(), f"-{tag}": axis.down()}


@dataclass(frozen=True)
class VerificationSpec:
    """Which decoded branch to keep and which analyzer settings to test it with."""

    label: str
    state: str
    spec: CouplingSpec
    branch: int
    projectors: Mapping[str, Projector]


def default_verifications() -> list[VerificationSpec]:
    zz = CouplingSpec(Z_AXIS, Z_AXIS)
    z_basis = _product_projectors(_axis_states(Z_AXIS, "z"), _axis_states(Z_AXIS, "z"))
    xy_basis = _product_projectors(_axis_states(X_AXIS, "x"), _axis_states(Y_AXIS, "y"))
    thetas = {"+t1": THETA1_UP, "+t2": THETA2_UP}
    return [
        VerificationSpec("a", "psi1", zz, 1, z_basis),
        VerificationSpec("b", "psi2", zz, -1, z_basis),
        VerificationSpec("c", "psi2", zz, -1, xy_basis),
        VerificationSpec("d", "psi3", zz, 1, z_basis),
        VerificationSpec("e", "psi3", zz, 1, _product_projectors(thetas, thetas)),
    ]


def run_nondemolition(shots: int = 100_000, seed: int = 42, phi: float = 0.0, sampled: bool = True,
                      verifications: Optional[Sequence[VerificationSpec]] = None) -> ExperimentReport:
    """Check the post-measurement system state of a chosen branch with product analyzers.

    Each analyzer setting is an independent run of *shots* coincidences in the
    branch's port pair, counted as passed or blocked by the analyzer.
    """
    _check_shots(shots)
    report = ExperimentReport("nondemolition", shots, seed, phi, 1.0)
    streams = _Streams(seed)
    for ver in verifications if verifications is not None else default_verifications():
        result = measure(NAMED_STATES[ver.state], ver.spec, phi)
        branch = result.branches[ver.branch]
        name = f"{ver.label}/{ver.state}/branch{ver.branch:+d}"
        info = {"branch_probability": branch.probability}
        if not branch.possible:
            report.impossible.append(name)
            report.blocks.append(Block(name, {}, info=info | {"impossible": True}))
            continue
        exact = {label: probability(branch.system, proj) for label, proj in ver.projectors.items()}
        block = Block(name, exact, info=info)
        if sampled:
            for label, p in exact.items():
                p = 0.0 if p < IMPOSSIBLE else min(p, 1.0)
                block.counts[label] = streams.sample({"pass": p, "blocked": 1.0 - p}, shots)
        report.blocks.append(block)
    return report


def postselect(result: MeasurementResult, post: np.ndarray) -> dict[str, Any]:
    """Condition the branches and ports of *result* on finding the system in *post*.

    Returns the overall success probability, the joint probability per branch
    and per port, and conditional distributions (``None`` when success is impossible).
    """
    proj = Projector((0, 1), (as_state(post),))

    def joint(o: Outcome) -> float:
        return o.probability * probability(o.system, proj) if o.possible else 0.0

    branch_joint = {"+1": joint(result.branches[1]), "-1": joint(result.branches[-1])}
    port_joint = {p: joint(result.ports[p]) for p in PORTS}
    total = sum(branch_joint.values())
    out: dict[str, Any] = {
        "postselection_probability": total,
        "joint_branch": branch_joint,
        "joint_ports": port_joint,
        "conditional_branch": None,
        "conditional_ports": None,
    }
    if total >= IMPOSSIBLE:
        out["conditional_branch"] = _clean({k: v / total for k, v in branch_joint.items()})
        out["conditional_ports"] = _clean({k: v / total for k, v in port_joint.items()})
    return out


def _postselected_blocks(name: str, result: MeasurementResult, post: np.ndarray, shots: int,
                         streams: Optional[_Streams], visibility: float, report: ExperimentReport) -> list[Block]:
    ps = postselect(result, post)
    p_acc = ps["postselection_probability"]
    info = {"postselection_probability": p_acc,
            "joint_+1": ps["joint_branch"]["+1"], "joint_-1": ps["joint_branch"]["-1"]}
    if ps["conditional_branch"] is None:
        report.impossible.append(name)
        return [Block(f"{name}/decoded", {}, info=info | {"impossible": True})]
    decoded = Block(f"{name}/decoded", ps["conditional_branch"], info=dict(info))
    ports = Block(f"{name}/ports", ps["conditional_ports"], info=dict(info))
    if streams is not None:
        cond = apply_visibility(ps["conditional_ports"], visibility)
        dist = {k: p_acc * v for k, v in cond.items()}
        dist["rejected"] = max(0.0, 1.0 - p_acc)
        raw = streams.sample(dist, shots)
        accepted = CountTable(PORTS, tuple(raw[p] for p in PORTS))
        ports.counts["accepted"] = accepted
        decoded.counts["accepted"] = _decoded_from_ports(accepted)
        decoded.info["rejected"] = ports.info["rejected"] = raw["rejected"]
    return [decoded, ports]


def run_product_rule(shots: int = 100_000, seed: int = 42, phi: float = 0.0, visibility: float = 1.0,
                     postselection: str | np.ndarray = DEFAULT_POSTSELECTION, sampled: bool = True) -> ExperimentReport:
    """Singlet preselection, product-state postselection; measure x_A, y_B and x_A*y_B."""
    _check_shots(shots)
    post = named_state(postselection) if isinstance(postselection, str) else as_state(postselection)
    report = ExperimentReport("product-rule", shots, seed, phi, visibility)
    streams = _Streams(seed) if sampled else None
    singlet = NAMED_STATES["singlet"]
    runs = [
        ("a/xA*yB", measure_nonlocal(singlet, CouplingSpec(X_AXIS, Y_AXIS), phi)),
        ("b/xA", measure_local(singlet, "A", X_AXIS, phi)),
        ("c/yB", measure_local(singlet, "B", Y_AXIS, phi)),
    ]
    for name, result in runs:
        report.blocks.extend(_postselected_blocks(name, result, post, shots, streams, visibility, report))
    return report


def run_custom(state: np.ndarray, spec: CouplingSpec, shots: int = 100_000, seed: int = 42, phi: float = 0.0,
               visibility: float = 1.0, postselection: Optional[np.ndarray] = None,
               sampled: bool = True) -> ExperimentReport:
    _check_shots(shots)
    report = ExperimentReport("custom", shots, seed, phi, visibility)
    streams = _Streams(seed) if sampled else None
    result = measure(as_state(state), spec, phi)
    report.blocks.extend(_measurement_blocks("measurement", result, shots, streams, visibility))
    if postselection is not None:
        report.blocks.extend(
            _postselected_blocks("postselected", result, postselection, shots, streams, visibility, report))
    return report


def hardy_signaling(alice: int) -> dict[str, Any]:
    """Ideal nondemolition measurement of P1(A)P1(B), then Bob checks for (|0>+|1>)/sqrt(2).

    Qubit 0 is Alice's, qubit 1 Bob's.
    """
    plus = np.array([1.0, 1.0]) / SQ(2)
    state = np.kron(np.eye(2)[alice], plus).astype(complex)
    one = Projector((0, 1), (np.array([0, 0, 0, 1], dtype=complex),))
    eigen = {"1": one, "0": one.complement()}
    bob = Projector((1,), (plus,))
    outcome_probs: dict[str, float] = {}
    bob_found = 0.0
    for label, proj in eigen.items():
        try:
            p, post = measure_projective(state, proj)
        except ImpossibleBranch:
            outcome_probs[label] = 0.0
            continue
        outcome_probs[label] = p
        bob_found += p * probability(post, bob)
    return {"eigenvalue": {"0": outcome_probs["0"], "1": outcome_probs["1"]}, "bob_found": bob_found}


def run_hardy(shots: int = 100_000, seed: int = 42, sampled: bool = True) -> ExperimentReport:
    """Show that a von Neumann measurement of P1(A)P1(B) would let Alice signal to Bob."""
    _check_shots(shots)
    report = ExperimentReport("hardy", shots, seed, 0.0, 1.0)
    streams = _Streams(seed)
    for alice in (0, 1):
        h = hardy_signaling(alice)
        eig = Block(f"alice{alice}/eigenvalue", _clean(h["eigenvalue"]))
        found = min(h["bob_found"], 1.0)
        bob = Block(f"alice{alice}/bob", _clean({"found": found, "not_found": 1.0 - found}))
        if sampled:
            eig.counts["events"] = streams.sample(eig.exact, shots)
            bob.counts["events"] = streams.sample(bob.exact, shots)
        report.blocks.extend([eig, bob])
    return report


def _check_shots(shots: int) -> None:
    if shots < 0:
        raise ValueError("shots must be non-negative")
