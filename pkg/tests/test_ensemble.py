import io
import math

import numpy as np
import pytest

from wsaw.ensemble import (
    EnsembleConfig,
    McmcParams,
    WeightedEnsemble,
    default_window,
    distance_law,
    exact_expectations,
    integrated_autocorr_time,
    mcmc_mean_se,
    sample_ensemble,
    sample_mcmc,
    sample_reweighted,
    weighted_mean_se,
)
from wsaw.errors import ChainInitializationError, DegenerateEnsembleError
from wsaw.rng import SeededSource


def cfg(**kw):
    base = dict(n=10, beta=1.0, samples=500, seed=SeededSource(1))
    base.update(kw)
    return EnsembleConfig(**base)


def test_default_window_values():
    lo, hi = default_window(1.0, 100)
    assert hi == pytest.approx(math.log(4) * 100)
    assert lo == pytest.approx(hi / 20)
    with pytest.raises(ValueError):
        default_window(0.0, 100)
    with pytest.raises(ValueError):
        default_window(math.inf, 100)


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(beta=-1.0)
    with pytest.raises(ValueError):
        cfg(samples=0)
    with pytest.raises(ValueError):
        cfg(sampler="other")
    with pytest.raises(ValueError):
        cfg(window=(5.0, 1.0))
    with pytest.raises(ValueError):
        cfg(beta=math.inf, window=(1.0, 5.0))


def test_config_dict_round_trip():
    for beta in (0.0, 1.5, math.inf):
        c = cfg(beta=beta, window=(0.0, 4.0) if beta == 1.5 else None)
        back = EnsembleConfig.from_dict(c.to_dict())
        assert back == c


def test_exact_expectations_n1_and_n2():
    # n = 1: every walk is one unit step
    ex = exact_expectations(1, 2, 1.0)
    assert ex.mean_chi == pytest.approx(1.0)
    assert ex.mean_chi2 == pytest.approx(1.0)
    # n = 2: twelve open walks and four reversals weighted e^-beta
    for beta in (0.0, 0.7, 2.0):
        ex = exact_expectations(2, 2, beta)
        w = math.exp(-beta)
        z = 12 + 4 * w
        assert ex.partition == pytest.approx(z / 16)
        assert ex.mean_chi2 == pytest.approx((4 * 4 + 8 * 2) / z)
        assert ex.mean_chi == pytest.approx((4 * 2 + 8 * math.sqrt(2)) / z)


def test_exact_expectations_srw_identity():
    # beta = 0 is plain SRW with E chi_n^2 = n
    for n in (3, 6, 9):
        ex = exact_expectations(n, 2, 0.0)
        assert ex.mean_chi2 == pytest.approx(n)


def test_reweighted_beta0_weights_and_unbiasedness():
    ens = sample_reweighted(cfg(n=50, beta=0.0, samples=4000))
    assert np.all(ens.weight == 1.0)
    mean, se = weighted_mean_se(ens.chi ** 2, ens.weight)
    assert abs(mean - 50.0) <= 3.0 * se


def test_reweighted_matches_exact_within_3se():
    exact = exact_expectations(10, 2, 1.0)
    ens = sample_reweighted(cfg(n=10, beta=1.0, samples=20000))
    assert np.all(ens.weight == np.exp(-ens.silt))
    for obs, ref in ((ens.chi, exact.mean_chi), (ens.chi ** 2, exact.mean_chi2)):
        mean, se = weighted_mean_se(obs, ens.weight)
        assert abs(mean - ref) <= 3.0 * se


def test_reweighted_saw_mode():
    ens = sample_reweighted(cfg(n=6, beta=math.inf, samples=20000))
    assert np.all(ens.silt == 0)
    assert np.all(ens.weight == 1.0)
    assert ens.diagnostics["attempts"] == 20000
    assert ens.diagnostics["retained"] == len(ens)


def test_reweighted_window_filters_exactly():
    window = (1.0, 6.0)
    ens = sample_reweighted(cfg(n=24, beta=0.5, samples=8000, window=window))
    assert np.all((ens.silt >= window[0]) & (ens.silt <= window[1]))
    assert ens.diagnostics["window_dropped"] == 8000 - len(ens)
    assert ens.validate()


def test_reweighted_degenerate_window():
    with pytest.raises(DegenerateEnsembleError):
        sample_reweighted(cfg(n=4, beta=1.0, samples=200, window=(1000.0, 2000.0)))


def test_mcmc_beta0_accepts_everything():
    ens = sample_mcmc(cfg(n=16, beta=0.0, samples=600))
    assert ens.diagnostics["acceptance_rate"] == 1.0
    mean, se = mcmc_mean_se(ens.chi ** 2, ens.diagnostics["tau_chi2"])
    assert abs(mean - 16.0) <= 4.0 * se


def test_mcmc_saw_mode_has_zero_silt():
    ens = sample_mcmc(cfg(n=20, beta=math.inf, samples=400))
    assert np.all(ens.silt == 0)
    assert np.all(ens.weight == 1.0)


def test_mcmc_matches_exact_within_3se():
    exact = exact_expectations(10, 2, 1.0)
    ens = sample_mcmc(cfg(n=10, beta=1.0, samples=30000, mcmc=McmcParams(thin_moves=4)))
    for obs, tau_key, ref in (
        (ens.chi, "tau_chi", exact.mean_chi),
        (ens.chi ** 2, "tau_chi2", exact.mean_chi2),
    ):
        mean, se = mcmc_mean_se(obs, ens.diagnostics[tau_key])
        assert abs(mean - ref) <= 3.0 * se


def test_mcmc_window_restriction_is_exact():
    window = (2.0, 12.0)
    ens = sample_mcmc(cfg(n=24, beta=0.5, samples=1000, window=window))
    assert np.all((ens.silt >= 2) & (ens.silt <= 12))


def test_mcmc_window_initialization_failure():
    # a silt floor far beyond reach cannot be initialized
    with pytest.raises(ChainInitializationError):
        sample_mcmc(cfg(n=8, beta=1.0, samples=10, window=(20.0, 28.0),
                        mcmc=McmcParams(init_attempts=4)))


def test_mcmc_retained_paths_are_consistent():
    ens = sample_mcmc(cfg(n=12, beta=1.0, samples=50, retain_paths=True))
    from wsaw.walk import endpoint_distance, hull_radius, silt_count

    for i, path in enumerate(ens.paths):
        assert path.n == 12
        assert silt_count(path) == ens.silt[i]
        assert endpoint_distance(path) == pytest.approx(ens.chi[i])
        assert hull_radius(path) == pytest.approx(ens.hull[i])


def test_integrated_autocorr_time_iid_near_half():
    rng = np.random.default_rng(0)
    tau = integrated_autocorr_time(rng.normal(size=20000))
    assert 0.45 <= tau <= 0.6


def test_integrated_autocorr_time_duplicated_series():
    rng = np.random.default_rng(1)
    base = rng.normal(size=5000)
    series = np.repeat(base, 4)  # every value held for 4 steps
    tau = integrated_autocorr_time(series)
    assert 1.6 <= tau <= 2.6  # about 4/2


def test_integrated_autocorr_time_constant_series():
    tau = integrated_autocorr_time(np.ones(100))
    assert tau >= 0.5


def test_weighted_mean_se_agrees_with_plain_mean():
    rng = np.random.default_rng(2)
    x = rng.normal(size=1000)
    w = np.ones(1000)
    mean, se = weighted_mean_se(x, w)
    assert mean == pytest.approx(x.mean())
    assert se == pytest.approx(x.std(ddof=1) / math.sqrt(1000), rel=0.01)


def test_distance_law_masses_and_mean():
    ens = sample_reweighted(cfg(n=30, beta=0.5, samples=4000))
    law = distance_law(ens)
    assert law.masses.sum() == pytest.approx(1.0)
    assert law.edges[1] - law.edges[0] == pytest.approx(30 ** 0.25)
    mean, _ = weighted_mean_se(ens.chi, ens.weight)
    assert law.mean_chi == pytest.approx(mean)
    # bin members partition the ensemble
    assert sum(len(m) for m in law.bin_members) == len(ens)


def test_distance_law_explicit_bins():
    ens = sample_reweighted(cfg(n=12, beta=0.0, samples=500))
    law = distance_law(ens, bins=5)
    assert len(law.masses) == 5
    law2 = distance_law(ens, bins=2.0)
    assert law2.edges[1] - law2.edges[0] == pytest.approx(2.0)


def test_save_load_round_trip(tmp_path):
    for beta, retain in ((1.0, True), (math.inf, False)):
        ens = sample_ensemble(cfg(n=8, beta=beta, samples=40, retain_paths=retain,
                                  sampler="mcmc"))
        buf = io.StringIO()
        ens.save(buf)
        buf.seek(0)
        back = WeightedEnsemble.load(buf)
        assert back.config == ens.config
        assert np.array_equal(back.silt, ens.silt)
        assert np.array_equal(back.chi, ens.chi)
        assert np.array_equal(back.hull, ens.hull)
        assert np.array_equal(back.weight, ens.weight)
        if retain:
            assert back.paths == ens.paths
        else:
            assert back.paths is None


def test_sample_ensemble_dispatch():
    a = sample_ensemble(cfg(sampler="reweight", samples=50))
    b = sample_reweighted(cfg(sampler="reweight", samples=50))
    assert np.array_equal(a.silt, b.silt)


def test_same_seed_reproduces_same_ensemble():
    a = sample_mcmc(cfg(n=14, beta=1.0, samples=100))
    b = sample_mcmc(cfg(n=14, beta=1.0, samples=100))
    assert np.array_equal(a.chi, b.chi)
    c = sample_mcmc(cfg(n=14, beta=1.0, samples=100, seed=SeededSource(1, 5)))
    assert not np.array_equal(a.chi, c.chi)
