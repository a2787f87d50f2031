"""Linear MU-MIMO receivers for the tagged user (user index 0).

Every constructor accepts stacked observations with optional leading batch
dimensions: ``zeta`` has shape ``(..., K, 2 N_r)`` and the returned combiner
``g`` has shape ``(..., N_r)``.  ``x_hat = g @ y``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from armimo.estimation import ConditionalStats, memoryless_matrices
from armimo.errors import SolveFailure, ZeroVector


class ReceiverKind(str, enum.Enum):
    NAIVE = "Naive"
    CONVENTIONAL_COV = "ConventionalCov"
    AR_AWARE_COV = "ArAwareCov"
    CONVENTIONAL_INST = "ConventionalInst"
    MRC1 = "Mrc1"
    MRC2 = "Mrc2"
    MRC3 = "Mrc3"
    PROPOSED = "Proposed"
    PROPOSED_PERFECT_CSI = "ProposedPerfectCsi"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class Receiver:
    g: np.ndarray
    kind: ReceiverKind


@dataclass(frozen=True, eq=False)
class ReceiverInputs:
    """What the base station knows when it builds a combiner.

    ``stats`` are the per-user conditional statistics the receiver believes
    in; under AR-parameter mismatch they differ from the true ones.
    """

    zeta: np.ndarray
    stats: Sequence[ConditionalStats]
    alpha: np.ndarray
    P: np.ndarray
    sigma_d2: float

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=complex)
        K = len(self.stats)
        if zeta.shape[-2:] != (K, 2 * self.stats[0].N_r):
            raise ValueError(f"zeta has shape {zeta.shape}, expected (..., {K}, {2 * self.stats[0].N_r})")
        if len(self.alpha) != K or len(self.P) != K:
            raise ValueError("alpha and P need one entry per user")
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float))

    @property
    def K(self) -> int:
        return len(self.stats)

    @property
    def N_r(self) -> int:
        return self.stats[0].N_r

    @property
    def weights(self) -> np.ndarray:
        """Received powers ``alpha_k^2 P_k``."""
        return self.alpha**2 * self.P

    @cached_property
    def means(self) -> np.ndarray:
        """Conditional channel means ``E_k zeta_k``, shape ``(..., K, N_r)``."""
        return np.stack([self.zeta[..., k, :] @ st.E.T for k, st in enumerate(self.stats)], axis=-2)

    @cached_property
    def memoryless(self):
        """Current-slot estimates ``(..., K, N_r)`` and their error covariances."""
        n = self.N_r
        est, Q = [], []
        for k, st in enumerate(self.stats):
            W, Qk = memoryless_matrices(st.C, st.s)
            est.append(self.zeta[..., k, :n] @ W.T)
            Q.append(Qk)
        return np.stack(est, axis=-2), Q

    def replace(self, **changes) -> "ReceiverInputs":
        fields = dict(zeta=self.zeta, stats=self.stats, alpha=self.alpha, P=self.P,
                      sigma_d2=self.sigma_d2)
        fields.update(changes)
        return ReceiverInputs(**fields)


def _dyads(vecs, w):
    """``sum_k w_k v_k v_k^H`` for ``vecs`` of shape ``(..., K, N)``."""
    return np.swapaxes(vecs * w[:, None], -1, -2) @ vecs.conj()


def _solve_combiner(J, b, check=True):
    """Return ``g = b^H J^-1`` for Hermitian ``J``."""
    gH = np.linalg.solve(J, b[..., None])[..., 0]
    g = gH.conj()
    if check:
        resid = np.linalg.norm(np.einsum("...n,...nm->...m", g, J) - b.conj(), axis=-1)
        scale = np.linalg.norm(b, axis=-1)
        if np.any(resid > 1e-8 * np.maximum(scale, np.finfo(float).tiny)):
            raise SolveFailure(f"combiner residual {resid.max():.3e} exceeds tolerance")
    return g


def _noise_eye(inp: ReceiverInputs):
    return inp.sigma_d2 * np.eye(inp.N_r)


def build_b_J(inp: ReceiverInputs):
    """Cross-correlation ``b = alpha sqrt(P) E zeta`` and the matrix ``J``.

    ``J = sum_k alpha_k^2 P_k (E_k zeta_k zeta_k^H E_k^H + Z_k) + sigma_d^2 I``.
    """
    w = inp.weights
    m = inp.means
    b = inp.alpha[0] * np.sqrt(inp.P[0]) * m[..., 0, :]
    static = sum(wk * st.Z for wk, st in zip(w, inp.stats)) + _noise_eye(inp)
    J = _dyads(m, w) + static
    return b, J


def g_proposed(inp: ReceiverInputs) -> Receiver:
    """AR-aware MMSE combiner ``g = b^H J^-1`` using every user's estimates."""
    b, J = build_b_J(inp)
    return Receiver(_solve_combiner(J, b), ReceiverKind.PROPOSED)


def g_naive(h_hat, alpha: float, P: float, sigma_d2: float) -> Receiver:
    """Single-user combiner that takes ``h_hat`` as the true channel.

    Evaluated in the Sherman-Morrison form
    ``alpha sqrt(P) h^H / (sigma_d^2 + alpha^2 P |h|^2)``.
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    energy = np.sum(np.abs(h_hat) ** 2, axis=-1, keepdims=True)
    g = alpha * np.sqrt(P) * h_hat.conj() / (sigma_d2 + alpha**2 * P * energy)
    return Receiver(g, ReceiverKind.NAIVE)


def g_conventional_inst(inp: ReceiverInputs, ignore_error: bool = False) -> Receiver:
    """Block-fading MMSE combiner built from every user's current-slot estimate.

    ``ignore_error=True`` drops the estimation-error covariances, which gives
    the multi-user naive combiner.
    """
    h, Q = inp.memoryless
    w = inp.weights
    J = _dyads(h, w) + _noise_eye(inp)
    if not ignore_error:
        J = J + sum(wk * Qk for wk, Qk in zip(w, Q))
    b = inp.alpha[0] * np.sqrt(inp.P[0]) * h[..., 0, :]
    return Receiver(_solve_combiner(J, b), ReceiverKind.CONVENTIONAL_INST)


def _interference_cov(inp: ReceiverInputs):
    w = inp.weights
    return sum(w[k] * inp.stats[k].C for k in range(1, inp.K)) + _noise_eye(inp)


def g_ar_aware_cov(inp: ReceiverInputs) -> Receiver:
    """AR-aware combiner for the tagged user; interferers enter through ``C_k`` only."""
    m = inp.means[..., 0, :]
    w0 = inp.weights[0]
    J = w0 * (np.einsum("...n,...m->...nm", m, m.conj()) + inp.stats[0].Z) + _interference_cov(inp)
    b = inp.alpha[0] * np.sqrt(inp.P[0]) * m
    return Receiver(_solve_combiner(J, b), ReceiverKind.AR_AWARE_COV)


def g_conventional_cov(inp: ReceiverInputs) -> Receiver:
    """Block-fading counterpart of :func:`g_ar_aware_cov`."""
    h, Q = inp.memoryless
    h0 = h[..., 0, :]
    w0 = inp.weights[0]
    J = w0 * (np.einsum("...n,...m->...nm", h0, h0.conj()) + Q[0]) + _interference_cov(inp)
    b = inp.alpha[0] * np.sqrt(inp.P[0]) * h0
    return Receiver(_solve_combiner(J, b), ReceiverKind.CONVENTIONAL_COV)


def g_mrc(inp: ReceiverInputs, variant: int) -> Receiver:
    """Matched filter ``v^H / |v|^2`` on a channel proxy ``v``.

    variant 1: current-slot estimate; 2: two-observation estimate ``E zeta``;
    3: one-step AR prediction ``A E zeta``.
    """
    if variant == 1:
        v = inp.memoryless[0][..., 0, :]
    elif variant == 2:
        v = inp.means[..., 0, :]
    elif variant == 3:
        v = inp.means[..., 0, :] @ inp.stats[0].A.T
    else:
        raise ValueError(f"unknown MRC variant {variant}")
    energy = np.sum(np.abs(v) ** 2, axis=-1, keepdims=True)
    if np.any(energy == 0):
        raise ZeroVector(f"MRC variant {variant} channel proxy is zero")
    kind = {1: ReceiverKind.MRC1, 2: ReceiverKind.MRC2, 3: ReceiverKind.MRC3}[variant]
    return Receiver(v.conj() / energy, kind)


def build_receiver(kind: ReceiverKind | str, inp: ReceiverInputs) -> Receiver:
    """Dispatch on ``kind``.

    ``PROPOSED_PERFECT_CSI`` expects ``inp`` to hold noiseless observations
    and ``s = 0`` statistics; it is then the proposed combiner.
    """
    kind = ReceiverKind(kind)
    if kind in (ReceiverKind.PROPOSED, ReceiverKind.PROPOSED_PERFECT_CSI):
        return Receiver(g_proposed(inp).g, kind)
    if kind is ReceiverKind.NAIVE:
        h = inp.memoryless[0][..., 0, :]
        return g_naive(h, inp.alpha[0], inp.P[0], inp.sigma_d2)
    if kind is ReceiverKind.CONVENTIONAL_INST:
        return g_conventional_inst(inp)
    if kind is ReceiverKind.CONVENTIONAL_COV:
        return g_conventional_cov(inp)
    if kind is ReceiverKind.AR_AWARE_COV:
        return g_ar_aware_cov(inp)
    return g_mrc(inp, int(kind.value[-1]))


def estimate_symbol(G: Receiver | np.ndarray, y) -> np.ndarray:
    """``x_hat = G y``."""
    g = G.g if isinstance(G, Receiver) else np.asarray(G)
    return np.einsum("...n,...n->...", g, np.asarray(y))


def conditional_mse(g, truth: ReceiverInputs) -> np.ndarray:
    """MSE of ``g`` averaged over the channel given the observations.

    ``1 - 2 Re(g b) + g J g^H`` with ``b``, ``J`` from the true statistics.
    """
    b, J = build_b_J(truth)
    g = np.asarray(g)
    quad = np.einsum("...n,...nm,...m->...", g, J, g.conj())
    return 1.0 - 2.0 * np.real(np.einsum("...n,...n->...", g, b)) + np.real(quad)


def receiver_sinr(g, truth: ReceiverInputs) -> np.ndarray:
    """SINR of the tagged user's symbol estimate given the observations.

    Signal is ``alpha^2 P |g E zeta|^2``; the denominator collects interferer
    means, every user's estimation-error covariance and thermal noise.
    Scale invariant in ``g``.
    """
    g = np.asarray(g)
    w = truth.weights
    proj = np.abs(np.einsum("...n,...kn->...k", g, truth.means)) ** 2
    static = sum(wk * st.Z for wk, st in zip(w, truth.stats)) + _noise_eye(truth)
    noise = np.real(np.einsum("...n,nm,...m->...", g, static, g.conj()))
    den = proj[..., 1:] @ w[1:] + noise
    num = w[0] * proj[..., 0]
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)
