"""Two-observation MMSE channel estimation and the conditional channel law.

The stacked statistic ``zeta = [y(t); y(t-1)]`` holds the de-spread pilot
observations ``h(.) + w(.)`` of one user, whose covariance is
``[[C + S, A C], [C A^H, C + S]]`` with ``S = s I``.  Given ``zeta`` the
channel is ``h(t) ~ CN(E zeta, Z)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from armimo.channel import hermitian
from armimo.errors import SingularBlock


@dataclass(frozen=True, eq=False)
class ConditionalStats:
    """Estimator gain ``E`` (N x 2N), error covariance ``Z`` and friends."""

    E: np.ndarray
    Z: np.ndarray
    R_mmse: np.ndarray
    s: float
    M: np.ndarray
    C: np.ndarray
    A: np.ndarray

    @property
    def N_r(self) -> int:
        return self.Z.shape[0]

    @property
    def Sigma(self) -> np.ndarray:
        return self.s * np.eye(self.N_r)

    @property
    def zeta_cov(self) -> np.ndarray:
        """Covariance of the stacked observation, ``M + s I``."""
        return self.M + self.s * np.eye(2 * self.N_r)


@dataclass(frozen=True)
class ScalarConditionalStats:
    """Scalar reduction for ``C = c I``, ``A = a I``: ``E = [e_hat I, e_check I]``, ``Z = z I``."""

    e_hat: complex
    e_check: complex
    z: float
    s: float


def _block_solve(C, A, s, rhs):
    """Solve ``[[C+S, AC], [CA^H, C+S]] X = rhs`` by block elimination on ``C + S``."""
    n = C.shape[0]
    P = C + s * np.eye(n)
    B = A @ C
    r1, r2 = rhs[:n], rhs[n:]
    try:
        Pf = linalg.cho_factor(P)
        PiB = linalg.cho_solve(Pf, B)
        Sf = linalg.cho_factor(hermitian(P - B.conj().T @ PiB))
        x2 = linalg.cho_solve(Sf, r2 - B.conj().T @ linalg.cho_solve(Pf, r1))
        x1 = linalg.cho_solve(Pf, r1 - B @ x2)
        return np.vstack([x1, x2])
    except linalg.LinAlgError:
        if s > 0:
            raise SingularBlock("C + s I is not positive definite; C is not PSD")
    # s = 0 with a degenerate C: perfect-observation limit
    M = np.block([[C, B], [B.conj().T, C]])
    return np.linalg.pinv(M, hermitian=True) @ rhs


def conditional_matrices(C, A, s: float) -> ConditionalStats:
    """Estimator gain ``E``, error covariance ``Z`` and ``R_mmse = C - Z``.

    ``s = 0`` (noiseless pilots) is allowed; when ``C`` is then singular the
    pseudo-inverse limit is used.
    """
    C = hermitian(np.atleast_2d(np.asarray(C, dtype=complex)))
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if s < 0 or not np.isfinite(s):
        raise SingularBlock(f"pilot noise variance s={s} is invalid")
    cross = np.vstack([C, C @ A.conj().T])  # [C; C A^H]
    E = _block_solve(C, A, s, cross).conj().T
    R = hermitian(E @ cross)
    Z = hermitian(C - R)
    M = np.block([[C, A @ C], [C @ A.conj().T, C]])
    return ConditionalStats(E=E, Z=Z, R_mmse=R, s=float(s), M=M, C=C, A=A)


def scalar_conditional(c: float, a: complex, s: float) -> ScalarConditionalStats:
    """Closed-form ``e_hat``, ``e_check``, ``z`` for i.i.d. antennas."""
    aa = abs(a) ** 2
    D = (c + s) ** 2 - aa * c**2
    e_hat = c * (c + s - aa * c) / D
    e_check = a * c * s / D
    z = c * s * (c + s - aa * c) / D
    return ScalarConditionalStats(e_hat=e_hat, e_check=e_check, z=float(np.real(z)), s=float(s))


def stack(obs_t, obs_tm1) -> np.ndarray:
    """``zeta = [obs_t; obs_tm1]`` along the last axis."""
    return np.concatenate([np.asarray(obs_t), np.asarray(obs_tm1)], axis=-1)


def mmse_estimate(obs_t, obs_tm1, stats: ConditionalStats) -> np.ndarray:
    """``h_hat(t) = E [obs_t; obs_tm1]``, the conditional mean of ``h(t)``."""
    return stack(obs_t, obs_tm1) @ stats.E.T


def memoryless_matrices(C, s: float):
    """Gain ``W = C (C + s I)^-1`` and error covariance ``Q = C - W C`` of the current-slot estimator."""
    C = hermitian(np.atleast_2d(np.asarray(C, dtype=complex)))
    P = C + s * np.eye(C.shape[0])
    if s > 0:
        W = linalg.solve(P, C, assume_a="pos").conj().T
    else:
        W = (np.linalg.pinv(P, hermitian=True) @ C).conj().T
    return W, hermitian(C - W @ C)


def memoryless_estimate(obs_t, C, s: float) -> np.ndarray:
    """Block-fading MMSE estimate ``C (C + s I)^-1 obs_t`` that ignores ``t-1``."""
    W, _ = memoryless_matrices(C, s)
    return np.asarray(obs_t) @ W.T
