"""Instantaneous and deterministic-equivalent SINR of the proposed receiver.

Deterministic equivalents are written without the ``1/N_r`` normalization:
with ``b_k ~ CN(0, Phi_k)``,

    T = (sum_k Phi_k / (1 + delta_k) + beta)^-1,   delta_k = tr(Phi_k T),

and ``gamma_bar = tr(Phi T)``.  For ``Phi_k = phi_k I`` this collapses to the
scalar equation solved by :func:`theorem2_root`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, linalg, optimize

from armimo.errors import BracketFailure, NoConvergence, PoleProximity, SolveFailure
from armimo.estimation import ConditionalStats, scalar_conditional
from armimo.receivers import ReceiverInputs, build_b_J


def instantaneous_sinr(inp: ReceiverInputs) -> np.ndarray:
    """``gamma = b^H J_1^-1 b`` with ``J_1 = J - b b^H`` (proposed receiver)."""
    b, J = build_b_J(inp)
    J1 = J - np.einsum("...n,...m->...nm", b, b.conj())
    x = np.linalg.solve(J1, b[..., None])[..., 0]
    resid = np.linalg.norm(np.einsum("...nm,...m->...n", J1, x) - b, axis=-1)
    if np.any(resid > 1e-8 * np.maximum(np.linalg.norm(b, axis=-1), np.finfo(float).tiny)):
        raise SolveFailure(f"J_1 solve residual {resid.max():.3e}")
    return np.real(np.einsum("...n,...n->...", b.conj(), x))


# --- Phi / beta -----------------------------------------------------------


def phi_matrix(stats: ConditionalStats, alpha: float, P: float) -> np.ndarray:
    """Covariance ``alpha^2 P E [C; C A^H]`` of ``b_k = alpha sqrt(P) E zeta``."""
    return alpha**2 * P * stats.R_mmse


def phi_scalar(c: float, a: complex, s: float, alpha: float, P: float) -> float:
    """``alpha^2 P (e_hat c + e_check c a^*)`` for i.i.d. antennas."""
    st = scalar_conditional(c, a, s)
    return float(np.real(alpha**2 * P * (st.e_hat * c + st.e_check * c * np.conj(a))))


def beta_matrix(stats: Sequence[ConditionalStats], alpha, P, sigma_d2: float) -> np.ndarray:
    """``sum_k alpha_k^2 P_k Z_k + sigma_d^2 I``."""
    n = stats[0].N_r
    return sum(al**2 * p * st.Z for st, al, p in zip(stats, alpha, P)) + sigma_d2 * np.eye(n)


@dataclass(frozen=True, eq=False)
class PhiFamily:
    """Tagged-user ``Phi``, interferer ``Phi_k`` (k >= 2) and ``beta``.

    Either all matrices (general path) or all scalars with ``N_r`` given
    (i.i.d. path, meaning ``Phi = phi I``).
    """

    phi: np.ndarray | float
    phis: Sequence
    beta: np.ndarray | float
    sigma_d2: float
    N_r: int | None = None

    @classmethod
    def from_stats(cls, stats: Sequence[ConditionalStats], alpha, P, sigma_d2: float) -> "PhiFamily":
        mats = [phi_matrix(st, al, p) for st, al, p in zip(stats, alpha, P)]
        return cls(phi=mats[0], phis=mats[1:], beta=beta_matrix(stats, alpha, P, sigma_d2),
                   sigma_d2=sigma_d2, N_r=stats[0].N_r)

    @classmethod
    def iid(cls, c, a, s, alpha, P, sigma_d2: float, N_r: int) -> "PhiFamily":
        """Scalar family from per-user sequences ``c, a, s, alpha, P``."""
        phis = [phi_scalar(*args) for args in zip(c, a, s, alpha, P)]
        z = [scalar_conditional(ci, ai, si).z for ci, ai, si in zip(c, a, s)]
        beta = float(sum(al**2 * p * zk for al, p, zk in zip(alpha, P, z)) + sigma_d2)
        return cls(phi=phis[0], phis=phis[1:], beta=beta, sigma_d2=sigma_d2, N_r=N_r)

    @property
    def is_scalar(self) -> bool:
        return np.ndim(self.phi) == 0

    def as_matrices(self) -> "PhiFamily":
        if not self.is_scalar:
            return self
        eye = np.eye(self.N_r)
        return PhiFamily(phi=self.phi * eye, phis=[p * eye for p in self.phis],
                         beta=self.beta * eye, sigma_d2=self.sigma_d2, N_r=self.N_r)


@dataclass
class FixedPointState:
    delta: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    history: list = field(default_factory=list)


def det_equiv_general(fam: PhiFamily, tol: float = 1e-10, max_iter: int = 200,
                      damping: float = 1.0, delta0=None):
    """Deterministic equivalent ``tr(Phi T)`` by Picard iteration on ``delta``.

    Starts from ``delta_k = tr(Phi_k) / sigma_d^2`` (an upper bound of the
    fixed point, so the plain iteration decreases monotonically).  The
    residual is ``max_k |delta_k' - delta_k| / |delta_k'|``.

    Returns
    -------
    gamma_bar : float
    state : FixedPointState

    Raises
    ------
    NoConvergence
        If the residual is still above ``tol`` after ``max_iter`` sweeps.
    """
    fam = fam.as_matrices()
    Phi = np.asarray(fam.phi)
    Phis = [np.asarray(p) for p in fam.phis]
    beta = np.asarray(fam.beta)

    def resolvent(delta):
        R = beta + sum(Pk / (1.0 + dk) for Pk, dk in zip(Phis, delta))
        return linalg.inv(0.5 * (R + R.conj().T))

    if not Phis:
        T = resolvent([])
        return float(np.real(np.trace(Phi @ T))), FixedPointState(delta=np.zeros(0))

    if delta0 is None:
        delta = np.array([np.real(np.trace(Pk)) / fam.sigma_d2 for Pk in Phis])
    else:
        delta = np.asarray(delta0, dtype=float).copy()
    state = FixedPointState(delta=delta)
    for it in range(1, max_iter + 1):
        T = resolvent(delta)
        new = np.array([np.real(np.sum(Pk * T.T)) for Pk in Phis])  # tr(Phi_k T)
        resid = float(np.max(np.abs(new - delta) / np.maximum(np.abs(new), np.finfo(float).tiny)))
        delta = (1.0 - damping) * delta + damping * new
        state.history.append(resid)
        if resid <= tol:
            state.delta, state.iterations, state.residual = delta, it, resid
            T = resolvent(delta)
            return float(np.real(np.sum(Phi * T.T))), state
    raise NoConvergence(f"fixed point residual {resid:.3e} after {max_iter} iterations")


def _thm2_residual(g, ratio, ratios_k, N_r):
    # equation divided through by beta: N (phi/beta)/g - sum (phi_k/beta)/(1 + g phi_k/phi) - 1
    return N_r * ratio / g - np.sum(ratios_k / (1.0 + g * ratios_k / ratio)) - 1.0


def theorem2_root(phi: float, phis: Sequence[float], beta: float, N_r: int, tol: float = 1e-12) -> float:
    """Unique positive ``g`` with ``beta = N_r phi / g - sum_k phi_k / (1 + g phi_k / phi)``.

    The root is bracketed in ``(0, N_r phi / beta]`` (the interference-free
    value), located by Brent's method and polished with Newton steps.
    """
    if phi <= 0 or beta <= 0 or any(p <= 0 for p in phis):
        raise ValueError("phi, phi_k and beta must be positive")
    ratio = phi / beta
    rk = np.asarray(phis, dtype=float) / beta
    hi = N_r * ratio
    if rk.size == 0:
        return float(hi)
    f = lambda g: _thm2_residual(g, ratio, rk, N_r)
    lo = hi * 1e-300 if hi > 0 else 1e-300
    lo = max(lo, np.finfo(float).tiny)
    if not (f(lo) > 0 and f(hi) <= 0):
        raise BracketFailure(f"no sign change on ({lo}, {hi}]")
    g = optimize.brentq(f, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(3):
        fg = f(g)
        if abs(fg) <= tol:
            break
        dfg = -N_r * ratio / g**2 + np.sum(rk**2 / ratio / (1.0 + g * rk / ratio) ** 2)
        step = fg / dfg
        if not np.isfinite(step) or not lo < g - step <= hi:
            break
        g -= step
    return float(g)


def symmetric_sinr(phi: float, beta: float, N_r: int, K: int) -> float:
    """Positive root of ``beta/phi = N_r/g - (K-1)/(1+g)`` in closed form."""
    r = beta / phi
    B = r - N_r + K - 1
    disc = np.sqrt(B * B + 4.0 * r * N_r)
    # pick the cancellation-free branch of the quadratic formula
    if B >= 0:
        return float(2.0 * N_r / (B + disc))
    return float((disc - B) / (2.0 * r))


# --- random-matrix oracles ------------------------------------------------


@dataclass(frozen=True, eq=False)
class DyadSpectrumSample:
    """Nonzero eigenvalues ``omega = |v|^2`` of sampled dyads ``v v^H``."""

    n: int
    lambda_bar: float
    samples: np.ndarray


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    spectrum: DyadSpectrumSample


def sample_dyads(n: int, lambdas, trials: int, rng: np.random.Generator) -> DyadSpectrumSample:
    """Draw ``v ~ CN(0, diag(lambdas))`` and keep the one nonzero eigenvalue of ``v v^H``."""
    lam = np.broadcast_to(np.asarray(lambdas, dtype=float), (n,))
    v = np.sqrt(lam / 2.0) * (rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n)))
    return DyadSpectrumSample(n=n, lambda_bar=float(lam.mean()), samples=np.sum(np.abs(v) ** 2, axis=1))


def dyad_moment_oracle(n: int, lambdas, r: int, trials: int, rng: np.random.Generator) -> MomentEstimate:
    """Monte Carlo estimate of ``E{omega_n^r} / n^(r-1)``.

    ``omega_n`` is a uniformly chosen eigenvalue of the dyad, so it equals
    ``|v|^2`` with probability ``1/n`` and zero otherwise; the estimate is
    therefore the sample mean of ``(|v|^2 / n)^r``.
    """
    spectrum = sample_dyads(n, lambdas, trials, rng)
    x = (spectrum.samples / n) ** r
    return MomentEstimate(float(x.mean()), float(x.std(ddof=1) / np.sqrt(trials)), spectrum)


def empirical_stieltjes(eigen_samples, s: complex):
    """Sample mean of ``1 / (x - s)``."""
    x = np.asarray(eigen_samples).ravel()
    d = x - s
    if np.any(np.abs(d) < 1e-12):
        raise PoleProximity(f"evaluation point {s} coincides with a sample")
    return np.mean(1.0 / d)


def dyad_spectrum_stieltjes(spectrum: DyadSpectrumSample, s: float) -> float:
    """Stieltjes transform at real ``s < 0`` of a uniformly chosen dyad eigenvalue.

    Mixes the ``n - 1`` zero eigenvalues analytically with the sampled
    nonzero one.
    """
    n = spectrum.n
    return (n - 1) / n * (-1.0 / s) + float(empirical_stieltjes(spectrum.samples, s)) / n


def gamma_stieltjes(n: int, lam: float, s: float) -> float:
    """``E{1 / (omega - s)}`` for ``omega ~ Gamma(n, lam)`` by quadrature."""
    from scipy import stats

    dist = stats.gamma(a=n, scale=lam)
    val, _ = integrate.quad(lambda x: dist.pdf(x) / (x - s), 0, np.inf, limit=200)
    return val


def empirical_r_transform(spectrum: DyadSpectrumSample, s: float) -> float:
    """R-transform ``G^-1(-s) - 1/s`` of the dyad eigenvalue law at ``s < 0``.

    ``G`` is inverted on the negative real axis, where it is increasing and
    positive.
    """
    if s >= 0:
        raise ValueError("evaluate at s < 0")
    w = -s
    f = lambda z: dyad_spectrum_stieltjes(spectrum, z) - w
    lo, hi = -1.0, -1e-300
    while f(lo) > 0:
        lo *= 2.0
    hi = lo
    while f(hi) < 0:
        hi /= 2.0
    z = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-13)
    return z - 1.0 / s
