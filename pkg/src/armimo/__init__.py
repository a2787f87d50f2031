"""Uplink MU-MIMO receivers and SINR analysis over AR(1) Rayleigh fading."""

from armimo.config import SystemConfig, UserParams, MatrixUserParams, db_to_amplitude
from armimo.errors import (
    ArmimoError,
    BracketFailure,
    ConfigError,
    NoConvergence,
    NotPSD,
    OutOfDomain,
    PoleProximity,
    SingularBlock,
    SolveFailure,
    UnknownPreset,
    ZeroVector,
)

__all__ = [
    "SystemConfig",
    "UserParams",
    "MatrixUserParams",
    "db_to_amplitude",
    "ArmimoError",
    "BracketFailure",
    "ConfigError",
    "NoConvergence",
    "NotPSD",
    "OutOfDomain",
    "PoleProximity",
    "SingularBlock",
    "SolveFailure",
    "UnknownPreset",
    "ZeroVector",
]
