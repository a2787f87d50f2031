import numpy as np
import pytest

from armimo.config import SystemConfig, UserParams
from armimo.errors import ZeroVector
from armimo.montecarlo import (CDF_POINTS, McSetup, average_sinr_mc, cdf_points, simulate_kinds,
                               trial_normals)


def _setup(K=3, N=8, a=0.8, P_p=50.0, sigma=1e-7, assumed_a=None, sigma_p2=None):
    cfg = SystemConfig(K=K, N_r=N, sigma_p2=sigma if sigma_p2 is None else sigma_p2,
                       sigma_d2=sigma)
    return McSetup(cfg, [UserParams.from_budget(cfg, P_p, a=a)] * K, assumed_a=assumed_a)


def test_trial_draws_depend_only_on_seed_and_index():
    a = trial_normals(3, 17, 2, 4)
    b = trial_normals(3, 17, 2, 4)
    assert a.shape == (2, 4, 4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, trial_normals(3, 18, 2, 4))


def test_thread_count_does_not_change_results():
    setup = _setup()
    kinds = ["Proposed", "ConventionalInst", "Mrc2"]
    one = simulate_kinds(setup, kinds, 300, seed=4, threads=1, keep_samples=True)
    many = simulate_kinds(setup, kinds, 300, seed=4, threads=3, keep_samples=True)
    for k in one:
        np.testing.assert_array_equal(one[k].samples, many[k].samples)
        assert one[k].mean == many[k].mean


def test_noise_dominated_limit():
    res = average_sinr_mc(_setup(sigma=1e3), "Proposed", 200, seed=1)
    assert 0 <= res.mean < 1e-8


def test_single_user_perfect_pilots_matches_chi_square_mean():
    setup = _setup(K=1, N=6, a=0.5, sigma_p2=0.0)
    u = setup.users[0]
    snr = u.alpha**2 * u.P / setup.cfg.sigma_d2
    res = average_sinr_mc(setup, "Proposed", 5000, seed=3, keep_samples=True)
    x = res.samples / snr
    assert abs(x.mean() - 6.0) <= 3 * x.std(ddof=1) / np.sqrt(x.size)


def test_confidence_interval_and_cdf():
    res = average_sinr_mc(_setup(), "Proposed", 500, seed=2)
    assert res.ci_lo < res.mean < res.ci_hi
    assert res.ci_hi - res.mean == pytest.approx(1.96 * res.stderr)
    assert res.cdf.shape == (CDF_POINTS,)
    assert np.all(np.diff(res.cdf) >= 0)


def test_cdf_points_are_equi_quantiles():
    x = np.arange(1000.0)
    q = cdf_points(x, 4)
    np.testing.assert_allclose(q, np.quantile(x, [0.125, 0.375, 0.625, 0.875]))


def test_receiver_failure_is_reported_with_trial_index():
    res = simulate_kinds(_setup(a=0.0), ["Mrc3", "Proposed"], 50, seed=0)
    assert res["Mrc3"].error.startswith("ZeroVector") and "trial 0" in res["Mrc3"].error
    assert res["Proposed"].error is None and res["Proposed"].mean > 0
    with pytest.raises(ZeroVector, match="trial 0"):
        average_sinr_mc(_setup(a=0.0), "Mrc3", 10, seed=0)


def test_correct_assumption_equals_no_mismatch():
    a = simulate_kinds(_setup(a=0.6), ["Proposed"], 200, seed=5)["Proposed"].mean
    b = simulate_kinds(_setup(a=0.6, assumed_a=0.6), ["Proposed"], 200, seed=5)["Proposed"].mean
    assert a == b


def test_mismatch_costs_sinr():
    good = simulate_kinds(_setup(a=0.0), ["Proposed"], 2000, seed=5)["Proposed"]
    bad = simulate_kinds(_setup(a=0.0, assumed_a=0.9), ["Proposed"], 2000, seed=5)["Proposed"]
    assert bad.ci_hi < good.ci_lo


def test_perfect_csi_bounds_estimated_csi():
    res = simulate_kinds(_setup(), ["Proposed", "ProposedPerfectCsi"], 500, seed=6)
    assert res["ProposedPerfectCsi"].ci_lo > res["Proposed"].ci_hi


def test_common_random_numbers_across_pilot_power():
    lo = simulate_kinds(_setup(P_p=20.0), ["Proposed"], 100, seed=8, keep_samples=True)
    hi = simulate_kinds(_setup(P_p=21.0), ["Proposed"], 100, seed=8, keep_samples=True)
    # neighbouring sweep points reuse draws, so per-trial values move together
    r = np.corrcoef(lo["Proposed"].samples, hi["Proposed"].samples)[0, 1]
    assert r > 0.99


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        simulate_kinds(_setup(), ["Proposed"], 0, seed=0)
    cfg = SystemConfig(K=2, N_r=4)
    with pytest.raises(ValueError):
        McSetup(cfg, [UserParams.from_budget(cfg, 10.0)])
