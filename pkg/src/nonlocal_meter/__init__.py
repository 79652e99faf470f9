"""Exact simulation of nonlocal von Neumann measurements with an entangled pointer."""

from .protocol import (
    CouplingSpec,
    MeasurementResult,
    Outcome,
    decode,
    measure_local,
    measure_nonlocal,
    modular_sum_check,
    prepare_pointer,
    projective_oracle,
    readout,
)
from .qstate import SpinAxis, X_AXIS, Y_AXIS, Z_AXIS, Qubit

__all__ = [
    "CouplingSpec", "MeasurementResult", "Outcome", "Qubit", "SpinAxis", "X_AXIS", "Y_AXIS", "Z_AXIS",
    "decode", "measure_local", "measure_nonlocal", "modular_sum_check", "prepare_pointer",
    "projective_oracle", "readout",
]
