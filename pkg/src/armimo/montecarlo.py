"""Seeded Monte Carlo estimation of the tagged user's average SINR.

Trial ``i`` draws all of its randomness from ``default_rng([seed, i])`` as a
fixed-shape block of standard normals.  Blocks of trials have fixed
boundaries, so results are identical for any thread count, and sweeps over
powers or AR coefficients reuse the same underlying draws.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from armimo.channel import crandn, process_noise_cov, psd_factor
from armimo.config import MatrixUserParams, SystemConfig, UserParams
from armimo.errors import ArmimoError
from armimo.estimation import conditional_matrices
from armimo.receivers import ReceiverInputs, ReceiverKind, build_receiver, receiver_sinr

BLOCK = 128
CDF_POINTS = 200


@dataclass(frozen=True, eq=False)
class McSetup:
    """Users, system parameters and the AR coefficient the receiver assumes.

    ``assumed_a=None`` means the receiver knows every user's true ``A``.
    """

    cfg: SystemConfig
    users: Sequence[UserParams | MatrixUserParams]
    assumed_a: float | None = None

    def __post_init__(self):
        if len(self.users) != self.cfg.K:
            raise ValueError(f"{len(self.users)} users given for K={self.cfg.K}")


@dataclass
class McResult:
    kind: ReceiverKind
    trials: int
    mean: float = float("nan")
    stderr: float = float("nan")
    ci_lo: float = float("nan")
    ci_hi: float = float("nan")
    cdf: np.ndarray | None = None
    samples: np.ndarray | None = field(default=None, repr=False)
    error: str | None = None
    exception: Exception | None = field(default=None, repr=False)


def _matrices(u, n):
    if isinstance(u, UserParams):
        eye = np.eye(n)
        return u.c * eye, u.a * eye
    return u.C, u.A


@dataclass(frozen=True, eq=False)
class _Prepared:
    N: int
    K: int
    LC: np.ndarray
    LT: np.ndarray
    A: np.ndarray
    sqrt_s: np.ndarray
    alpha: np.ndarray
    P: np.ndarray
    sigma_d2: float
    true_stats: list
    assumed_stats: list | None
    perfect_stats: list


def _prepare(setup: McSetup) -> _Prepared:
    cfg = setup.cfg
    n = cfg.N_r
    LC, LT, As, s, true, assumed, perfect = [], [], [], [], [], [], []
    for u in setup.users:
        C, A = _matrices(u, n)
        su = u.pilot_noise(cfg)
        LC.append(psd_factor(C))
        LT.append(psd_factor(process_noise_cov(C, A)))
        As.append(A)
        s.append(su)
        true.append(conditional_matrices(C, A, su))
        perfect.append(conditional_matrices(C, A, 0.0))
        if setup.assumed_a is not None:
            assumed.append(conditional_matrices(C, setup.assumed_a * np.eye(n), su))
    return _Prepared(
        N=n, K=cfg.K, LC=np.array(LC), LT=np.array(LT), A=np.array(As), sqrt_s=np.sqrt(s),
        alpha=np.array([u.alpha for u in setup.users]), P=np.array([u.P for u in setup.users]),
        sigma_d2=cfg.sigma_d2, true_stats=true,
        assumed_stats=assumed if setup.assumed_a is not None else None, perfect_stats=perfect,
    )


def trial_normals(seed: int, index: int, K: int, N: int) -> np.ndarray:
    """The ``(K, 4, N)`` CN(0, 1) draws of one trial: ``h(t-1)``, process noise, two pilot noises."""
    return crandn(np.random.default_rng([seed, index]), (K, 4, N))


def _draw(prep: _Prepared, seed: int, start: int, stop: int):
    z = np.stack([trial_normals(seed, i, prep.K, prep.N) for i in range(start, stop)])
    h_tm1 = np.einsum("kmn,bkn->bkm", prep.LC, z[:, :, 0])
    h_t = np.einsum("kmn,bkn->bkm", prep.A, h_tm1) + np.einsum("kmn,bkn->bkm", prep.LT, z[:, :, 1])
    ss = prep.sqrt_s[:, None]
    y_t = h_t + ss * z[:, :, 2]
    y_tm1 = h_tm1 + ss * z[:, :, 3]
    return h_t, h_tm1, y_t, y_tm1


def _block_sinr(prep: _Prepared, seed: int, start: int, stop: int, kinds):
    h_t, h_tm1, y_t, y_tm1 = _draw(prep, seed, start, stop)
    truth = ReceiverInputs(np.concatenate([y_t, y_tm1], -1), prep.true_stats, prep.alpha, prep.P,
                           prep.sigma_d2)
    believed = truth if prep.assumed_stats is None else truth.replace(stats=prep.assumed_stats)
    out = {}
    for kind in kinds:
        try:
            if kind is ReceiverKind.PROPOSED_PERFECT_CSI:
                exact = ReceiverInputs(np.concatenate([h_t, h_tm1], -1), prep.perfect_stats,
                                       prep.alpha, prep.P, prep.sigma_d2)
                out[kind] = receiver_sinr(build_receiver(kind, exact).g, exact)
            else:
                out[kind] = receiver_sinr(build_receiver(kind, believed).g, truth)
        except ArmimoError as exc:
            out[kind] = exc
    return out


def _locate(prep, seed, start, stop, kind, exc):
    """Re-run a failed block trial by trial to name the first failing index."""
    for i in range(start, stop):
        r = _block_sinr(prep, seed, i, i + 1, [kind])[kind]
        if isinstance(r, Exception):
            return type(r)(f"trial {i}: {r}")
    return type(exc)(f"trials {start}-{stop - 1}: {exc}")


def cdf_points(samples, n: int = CDF_POINTS) -> np.ndarray:
    """Empirical quantiles at probabilities ``(j + 1/2) / n``."""
    return np.quantile(np.asarray(samples), (np.arange(n) + 0.5) / n)


def simulate_kinds(setup: McSetup, kinds, trials: int, seed: int, threads: int = 1,
                   with_cdf: bool = False, keep_samples: bool = False,
                   block: int = BLOCK) -> dict:
    """Monte Carlo SINR of several receivers on shared channel draws.

    A receiver that fails on some trial gets ``error`` set (message names
    the trial) instead of statistics.
    """
    kinds = [ReceiverKind(k) for k in kinds]
    if trials < 1:
        raise ValueError("trials must be >= 1")
    prep = _prepare(setup)
    bounds = [(b, min(b + block, trials)) for b in range(0, trials, block)]
    work = lambda be: _block_sinr(prep, seed, be[0], be[1], kinds)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(be) for be in bounds]

    results = {}
    for kind in kinds:
        res = McResult(kind=kind, trials=trials)
        failed = next(((be, p[kind]) for be, p in zip(bounds, parts)
                       if isinstance(p[kind], Exception)), None)
        if failed is not None:
            (s0, s1), exc = failed
            err = _locate(prep, seed, s0, s1, kind, exc)
            res.error = f"{type(err).__name__}: {err}"
            res.exception = err
            results[kind] = res
            continue
        x = np.concatenate([p[kind] for p in parts])
        res.mean = float(np.mean(x))
        res.stderr = float(np.std(x, ddof=1) / np.sqrt(trials)) if trials > 1 else float("nan")
        res.ci_lo = res.mean - 1.96 * res.stderr
        res.ci_hi = res.mean + 1.96 * res.stderr
        if with_cdf:
            res.cdf = cdf_points(x)
        if keep_samples:
            res.samples = x
        results[kind] = res
    return results


def average_sinr_mc(setup: McSetup, kind, trials: int, seed: int, threads: int = 1,
                    with_cdf: bool = True, keep_samples: bool = False) -> McResult:
    """Mean SINR, 95% confidence interval and empirical CDF for one receiver.

    Raises the receiver's error (annotated with the trial index) on failure.
    """
    res = simulate_kinds(setup, [kind], trials, seed, threads, with_cdf, keep_samples)[ReceiverKind(kind)]
    if res.exception is not None:
        raise res.exception
    return res
