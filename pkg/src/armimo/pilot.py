"""SINR-optimal pilot power for symmetric users under a per-user energy budget.

With every user sharing ``alpha, a, c`` and the split ``tau_p P_p + tau_d P =
P_tot``, maximizing the average SINR is the same as minimizing

    f(P_p) = (K c + sigma_d^2 tau_d / (alpha^2 (P_tot - tau_p P_p)))
             * ((c + s)^2 - a^2 c^2) / ((a^2 + 1) s + c - a^2 c),

``s = sigma_p^2 / (alpha^2 P_p tau_p)``, which equals ``c^2 (beta/phi + K)``.
The stationarity condition is a quartic in ``P_p``.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from armimo.config import SystemConfig, db_to_amplitude
from armimo.errors import ConfigError, OutOfDomain
from armimo.estimation import scalar_conditional
from armimo.sinr import symmetric_sinr


@dataclass(frozen=True)
class PilotOptProblem:
    K: int
    tau_p: int
    tau_d: int
    P_tot: float
    alpha: float
    a: float
    c: float
    sigma_p2: float
    sigma_d2: float

    def __post_init__(self):
        if min(self.K, self.tau_p, self.tau_d) < 1:
            raise ConfigError("K, tau_p, tau_d must be >= 1")
        if min(self.P_tot, self.alpha, self.c, self.sigma_p2, self.sigma_d2) <= 0:
            raise ConfigError("powers, alpha, c and noise variances must be positive")
        if not abs(self.a) < 1:
            raise ConfigError(f"|a| = {abs(self.a)} must be < 1")

    @classmethod
    def from_config(cls, cfg: SystemConfig, a: float, c: float = 1.0,
                    path_loss_db: float = 90.0) -> "PilotOptProblem":
        return cls(K=cfg.K, tau_p=cfg.tau_p, tau_d=cfg.tau_d, P_tot=cfg.P_tot,
                   alpha=db_to_amplitude(path_loss_db), a=a, c=c,
                   sigma_p2=cfg.sigma_p2, sigma_d2=cfg.sigma_d2)

    def replace(self, **changes) -> "PilotOptProblem":
        return dataclasses.replace(self, **changes)

    @property
    def P_p_max(self) -> float:
        return self.P_tot / self.tau_p

    def pilot_noise(self, P_p):
        return self.sigma_p2 / (self.alpha**2 * P_p * self.tau_p)

    def data_power(self, P_p):
        return (self.P_tot - self.tau_p * P_p) / self.tau_d

    def phi_beta(self, P_p: float):
        """``(phi, beta)`` of the symmetric system at pilot power ``P_p``."""
        _check_domain(P_p, self)
        st = scalar_conditional(self.c, self.a, self.pilot_noise(P_p))
        w = self.alpha**2 * self.data_power(P_p)
        phi = float(np.real(w * (st.e_hat * self.c + st.e_check * self.c * np.conj(self.a))))
        beta = self.K * w * st.z + self.sigma_d2
        return phi, beta


@dataclass(frozen=True)
class QuarticCoeffs:
    c0: float
    c1: float
    c2: float
    c3: float
    c4: float

    def as_array(self) -> np.ndarray:
        """Coefficients in ascending order."""
        return np.array([self.c0, self.c1, self.c2, self.c3, self.c4])

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.as_array())


@dataclass(frozen=True)
class PilotOptResult:
    P_p: float
    objective: float
    method: str  # "quartic" or "grid"
    interior_roots: tuple
    grid_P_p: float
    flagged: bool = False


def _check_domain(P_p, pr: PilotOptProblem):
    P_p = np.asarray(P_p, dtype=float)
    if np.any(P_p <= 0) or np.any(P_p >= pr.P_p_max):
        raise OutOfDomain(f"P_p must lie in (0, {pr.P_p_max})")


def objective(P_p, problem: PilotOptProblem, as_printed: bool = False):
    """Quantity whose minimizer maximizes ``phi/beta``; vectorized over ``P_p``.

    ``as_printed=True`` flips the sign of the ``a^2 c^2`` term, which is the
    form that does not match the conditional-mean coefficients.
    """
    _check_domain(P_p, problem)
    pr = problem
    P_p = np.asarray(P_p, dtype=float)
    s = pr.pilot_noise(P_p)
    a2, c = pr.a**2, pr.c
    sign = 1.0 if as_printed else -1.0
    load = pr.K * c + pr.sigma_d2 * pr.tau_d / (pr.alpha**2 * (pr.P_tot - P_p * pr.tau_p))
    return load * ((c + s) ** 2 + sign * a2 * c**2) / ((a2 + 1.0) * s + c - a2 * c)


def quartic_coeffs(problem: PilotOptProblem, as_printed: bool = False) -> QuarticCoeffs:
    """Quartic whose roots are the stationary points of :func:`objective`.

    ``d objective / d P_p = -q(P_p) / D(P_p)`` with ``D > 0`` on the feasible
    interval.  ``as_printed=True`` returns the variant with the opposite sign
    on the ``(a^2-1) c K P_tot alpha^2`` term of ``c3``, which fails the
    derivative check for ``a != 0``.
    """
    pr = problem
    a2, c, al2, K = pr.a**2, pr.c, pr.alpha**2, pr.K
    sp2, sd2, td, tp, Pt = pr.sigma_p2, pr.sigma_d2, pr.tau_d, pr.tau_p, pr.P_tot
    u = a2 - 1.0
    c4 = u**2 * c**3 * al2**3 * (K * sp2 - sd2 * td) * tp**4
    lead = u * c * K * Pt * al2 if as_printed else -u * c * K * Pt * al2
    c3 = 2 * u * c**2 * al2**2 * sp2 * (lead - K * sp2 + 2 * sd2 * td) * tp**3
    c2 = c * al2 * sp2 * (
        u**2 * c**2 * K * Pt**2 * al2**2
        + sp2 * ((1 + a2) * K * sp2 + (a2 - 5) * sd2 * td)
        + u * c * Pt * al2 * (4 * K * sp2 + u * sd2 * td)
    ) * tp**2
    c1 = -2 * sp2**2 * (u * c * Pt * al2 + sp2 + a2 * sp2) * (c * K * Pt * al2 + sd2 * td) * tp
    c0 = (a2 + 1) * Pt * sp2**3 * (c * K * Pt * al2 + sd2 * td)
    return QuarticCoeffs(c0, c1, c2, c3, c4)


def derivative_denominator(P_p, problem: PilotOptProblem):
    """Positive ``D`` with ``d objective / d P_p = -q(P_p) / D``."""
    pr = problem
    P_p = np.asarray(P_p, dtype=float)
    a2 = pr.a**2
    lin = (1 - a2) * pr.alpha**2 * pr.c * pr.tau_p * P_p + (1 + a2) * pr.sigma_p2
    return P_p**2 * pr.alpha**4 * pr.tau_p * (pr.P_tot - pr.tau_p * P_p) ** 2 * lin**2


def _scaled_roots(q: QuarticCoeffs, scale: float) -> np.ndarray:
    """Real roots in units of ``scale`` via companion-matrix eigenvalues."""
    co = q.as_array() * scale ** np.arange(5)
    nz = np.flatnonzero(np.abs(co) > 1e-14 * np.abs(co).max())
    co = co[: nz.max() + 1] if nz.size else co[:1]
    if co.size < 2:
        return np.empty(0)
    r = np.roots(co[::-1] / np.abs(co).max())
    real = r[np.abs(r.imag) <= 1e-9 * (1 + np.abs(r.real))].real
    return np.sort(real)


def grid_search(problem: PilotOptProblem, points: int = 10_000):
    """``(argmin, min, grid)`` of the objective over an interior uniform grid."""
    grid = np.linspace(0.0, problem.P_p_max, points + 2)[1:-1]
    vals = objective(grid, problem)
    j = int(np.argmin(vals))
    return float(grid[j]), float(vals[j]), grid


def check_quartic(problem: PilotOptProblem, q: QuarticCoeffs | None = None,
                  points: int = 7, rtol: float = 1e-4) -> bool:
    """Compare ``-q / D`` with a central finite difference of the objective."""
    q = quartic_coeffs(problem) if q is None else q
    Pm = problem.P_p_max
    x = Pm * np.linspace(0.1, 0.9, points)
    h = 1e-6 * Pm
    fd = (objective(x + h, problem) - objective(x - h, problem)) / (2 * h)
    an = -q(x) / derivative_denominator(x, problem)
    scale = np.max(np.abs(fd))
    return bool(np.all(np.abs(fd - an) <= rtol * scale + 1e-300))


def optimal_pilot_power(problem: PilotOptProblem, grid_points: int = 10_000,
                        validate: bool = True) -> PilotOptResult:
    """Minimizer of :func:`objective` on ``(0, P_tot / tau_p)``.

    Interior real quartic roots are scored by the objective and the best one
    is cross-checked against a grid search.  When no interior root exists,
    the derivative check fails, or the two disagree by more than one grid
    cell, the grid result (polished by a bounded scalar search) is returned
    with ``flagged=True``.
    """
    Pm = problem.P_p_max
    g_arg, g_val, grid = grid_search(problem, grid_points)
    cell = grid[1] - grid[0]
    q = quartic_coeffs(problem)
    ok = check_quartic(problem, q) if validate else True
    roots = _scaled_roots(q, Pm) * Pm
    interior = tuple(float(r) for r in roots if 0.0 < r < Pm)
    if ok and interior:
        vals = objective(np.array(interior), problem)
        j = int(np.argmin(vals))
        best, best_val = interior[j], float(vals[j])
        if abs(best - g_arg) <= cell * (1 + 1e-9) or best_val <= g_val:
            return PilotOptResult(best, best_val, "quartic", interior, g_arg)
    lo, hi = max(g_arg - cell, 0.5 * g_arg), min(g_arg + cell, 0.5 * (g_arg + Pm))
    res = optimize.minimize_scalar(lambda x: float(objective(x, problem)), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12 * Pm})
    warnings.warn("pilot optimum taken from grid search; quartic roots not usable", RuntimeWarning,
                  stacklevel=2)
    P_best = float(res.x) if res.fun <= g_val else g_arg
    return PilotOptResult(P_best, float(min(res.fun, g_val)), "grid", interior, g_arg, flagged=True)


def sinr_at(problem: PilotOptProblem, P_p: float, N_r: int) -> float:
    """Deterministic-equivalent SINR of the symmetric system at ``P_p``."""
    phi, beta = problem.phi_beta(P_p)
    return symmetric_sinr(phi, beta, N_r, problem.K)
