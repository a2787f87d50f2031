"""AR(1) Rayleigh fading channels and received pilot/data signals.

All sampling functions take an explicit ``numpy.random.Generator``; nothing
here touches global RNG state.
"""

from __future__ import annotations

import numpy as np

from armimo.config import MatrixUserParams, SystemConfig, UserParams
from armimo.errors import NotPSD

QPSK = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))


def hermitian(M):
    """Hermitian part of ``M``."""
    M = np.asarray(M)
    return 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))


def crandn(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circularly symmetric complex normal samples, CN(0, 1)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def psd_factor(C, rtol: float = 1e-10) -> np.ndarray:
    """Return ``L`` with ``L @ L^H == C`` for a Hermitian PSD ``C``.

    An eigendecomposition is used instead of Cholesky so that singular
    covariances (including ``C = 0``) are accepted.
    """
    C = hermitian(np.atleast_2d(np.asarray(C, dtype=complex)))
    w, V = np.linalg.eigh(C)
    scale = max(float(np.real(np.trace(C))), np.finfo(float).tiny)
    if w.min(initial=0.0) < -rtol * scale:
        raise NotPSD(f"covariance has eigenvalue {w.min():.3e}")
    return V * np.sqrt(np.clip(w, 0.0, None))


def process_noise_cov(C, A) -> np.ndarray:
    """Process-noise covariance ``Theta = C - A C A^H`` of a stationary AR(1) channel.

    Raises
    ------
    NotPSD
        If ``Theta`` has an eigenvalue below ``-1e-10 * trace(C)``, i.e. the
        pair (A, C) cannot describe a stationary process.
    """
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.shape != C.shape:
        raise ValueError(f"A{A.shape} and C{C.shape} are not conformable")
    Theta = hermitian(C - A @ C @ A.conj().T)
    w = np.linalg.eigvalsh(Theta)
    if w.min() < -1e-10 * float(np.real(np.trace(C))):
        raise NotPSD(f"C - A C A^H has eigenvalue {w.min():.3e}; (A, C) is not stationary")
    return Theta


def sample_stationary(C, rng: np.random.Generator, size=()) -> np.ndarray:
    """Draw ``h ~ CN(0, C)``; ``size`` prepends batch dimensions."""
    L = psd_factor(C)
    size = (size,) if np.isscalar(size) else tuple(size)
    z = crandn(rng, size + (L.shape[1],))
    return z @ L.T


def ar1_step(h_prev, A, Theta, rng: np.random.Generator) -> np.ndarray:
    """One AR(1) transition ``h(t) = A h(t-1) + v``, ``v ~ CN(0, Theta)``.

    ``h_prev`` may carry leading batch dimensions.
    """
    h_prev = np.asarray(h_prev)
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if h_prev.shape[-1] != A.shape[1]:
        raise ValueError(f"h_prev has length {h_prev.shape[-1]}, A is {A.shape}")
    L = psd_factor(Theta)
    v = crandn(rng, h_prev.shape[:-1] + (L.shape[1],)) @ L.T
    return h_prev @ A.T + v


def received_pilot(h, user: UserParams | MatrixUserParams, cfg: SystemConfig,
                   rng: np.random.Generator) -> np.ndarray:
    """De-spread pilot observation ``h + w``, ``w ~ CN(0, s I)``.

    This is ``Y^p s^* / (alpha sqrt(P_p) tau_p)``; pilots of distinct users are
    orthogonal so no other user leaks into the statistic.
    """
    h = np.asarray(h)
    s = user.pilot_noise(cfg)
    return h + np.sqrt(s) * crandn(rng, h.shape)


def received_data(H, users, x, cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Received data vector ``y = sum_k alpha_k sqrt(P_k) h_k x_k + n_d``.

    ``H`` is ``N_r x K`` with one channel column per user.
    """
    H = np.atleast_2d(np.asarray(H))
    x = np.asarray(x)
    if H.shape[1] != len(users) or x.shape[-1] != len(users):
        raise ValueError("H, users and x disagree on the number of users")
    gains = np.array([u.alpha * np.sqrt(u.P) for u in users])
    noise = np.sqrt(cfg.sigma_d2) * crandn(rng, x.shape[:-1] + (H.shape[0],))
    return (x * gains) @ H.T + noise


def qpsk_symbols(rng: np.random.Generator, size) -> np.ndarray:
    """Unit-modulus QPSK symbols drawn uniformly."""
    return QPSK[rng.integers(0, 4, size=size)]
