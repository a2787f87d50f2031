"""Scenario parameter containers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from armimo.errors import ConfigError, OutOfDomain


def db_to_amplitude(path_loss_db: float) -> float:
    """Large-scale fading amplitude for a path loss given in dB (90 dB -> 10**-4.5)."""
    return 10.0 ** (-path_loss_db / 20.0)


def db(x):
    """Power ratio in dB."""
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class SystemConfig:
    """Global scenario parameters.

    Powers are in mW, noise variances in the same linear power unit.
    """

    K: int
    N_r: int
    tau_p: int = 1
    tau_d: int = 11
    P_tot: float = 250.0
    sigma_p2: float = 1e-7
    sigma_d2: float = 1e-7

    def __post_init__(self):
        for name in ("K", "N_r", "tau_p", "tau_d"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.P_tot <= 0:
            raise ConfigError("P_tot must be positive")
        if self.sigma_p2 < 0 or self.sigma_d2 <= 0:
            raise ConfigError("noise variances must be positive")
        if self.K > self.tau_p:
            # pilot orthogonality is modeled, not synthesized
            warnings.warn(
                f"K={self.K} exceeds tau_p={self.tau_p}; orthogonal pilots are assumed anyway",
                stacklevel=3,
            )

    def data_power(self, P_p: float) -> float:
        """Per-symbol data power left after spending ``tau_p * P_p`` on pilots."""
        if not 0.0 < P_p < self.P_tot / self.tau_p:
            raise OutOfDomain(
                f"pilot power {P_p} outside (0, {self.P_tot / self.tau_p})"
            )
        return (self.P_tot - self.tau_p * P_p) / self.tau_d


@dataclass(frozen=True)
class UserParams:
    """Per-user physical parameters with ``A = a I`` and ``C = c I``."""

    alpha: float
    a: complex
    c: float
    P_p: float
    P: float

    def __post_init__(self):
        if abs(self.a) >= 1:
            raise ConfigError(f"AR coefficient |a|={abs(self.a)} must be < 1")
        if self.c <= 0 or self.alpha <= 0:
            raise ConfigError("c and alpha must be positive")
        if self.P_p <= 0 or self.P <= 0:
            raise ConfigError("pilot and data powers must be positive")

    @classmethod
    def from_budget(cls, cfg: SystemConfig, P_p: float, a: complex = 0.0, c: float = 1.0,
                    path_loss_db: float = 90.0) -> "UserParams":
        """Build a user whose data power exhausts the budget left by ``P_p``."""
        return cls(alpha=db_to_amplitude(path_loss_db), a=a, c=c, P_p=P_p,
                   P=cfg.data_power(P_p))

    def pilot_noise(self, cfg: SystemConfig) -> float:
        """De-spread pilot noise variance ``s = sigma_p^2 / (alpha^2 P_p tau_p)``."""
        return cfg.sigma_p2 / (self.alpha**2 * self.P_p * cfg.tau_p)

    def as_matrix(self, N_r: int) -> "MatrixUserParams":
        eye = np.eye(N_r)
        return MatrixUserParams(alpha=self.alpha, A=self.a * eye, C=self.c * eye,
                                P_p=self.P_p, P=self.P)


@dataclass(frozen=True, eq=False)
class MatrixUserParams:
    """Per-user parameters with a full transition matrix and channel covariance."""

    alpha: float
    A: np.ndarray
    C: np.ndarray
    P_p: float
    P: float

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        C = np.atleast_2d(np.asarray(self.C, dtype=complex))
        if A.shape != C.shape or A.shape[0] != A.shape[1]:
            raise ConfigError("A and C must be square and conformable")
        if np.max(np.abs(np.linalg.eigvals(A))) >= 1:
            raise ConfigError("spectral radius of A must be < 1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)

    @property
    def N_r(self) -> int:
        return self.C.shape[0]

    def pilot_noise(self, cfg: SystemConfig) -> float:
        return cfg.sigma_p2 / (self.alpha**2 * self.P_p * cfg.tau_p)
