import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from gridcopula.grid import CellCounts, MassGrid, cell_counts, rank_transform
from gridcopula.mcmc import (
    Chain,
    McmcConfig,
    conditional_support,
    eta_conditional_masses,
    log_conditional_theta,
    mh_update_theta,
    run_chain,
    sample_eta,
    sample_omega,
)
from gridcopula.mle import log_likelihood
from gridcopula.prior import LatentState, SpatialBetaPrior, log_prior_density

from .util import merge_thin_bins, random_feasible_grid


def _no_data(m):
    return CellCounts(m=m, r=np.zeros((m, m), dtype=int))


def _latent(p, omega=0.4, cap=None, rng=None):
    if cap is None:
        eta = np.zeros((p, p), dtype=int)
    else:
        eta = rng.integers(0, cap + 1, size=(p, p))
    return LatentState(eta=eta, omega=omega)


class TestConditionalSupport:
    def test_m2_single_cell(self):
        free = np.array([[0.2]])
        assert conditional_support(free, 1, 1) == (0.0, 0.5)

    def test_m3_uniform_state(self):
        free = np.full((2, 2), 1 / 9)
        lo, hi = conditional_support(free, 1, 1)
        assert lo == pytest.approx(0.0, abs=1e-15)
        assert hi == pytest.approx(2 / 9)

    def test_current_value_always_interior(self):
        rng = np.random.default_rng(41)
        for m in (3, 5, 8):
            free = random_feasible_grid(rng, m).free.copy()
            for j in range(1, m):
                for k in range(1, m):
                    lo, hi = conditional_support(free, j, k)
                    assert lo < free[j - 1, k - 1] < hi

    def test_out_of_range_cell(self):
        with pytest.raises(ValueError):
            conditional_support(np.full((2, 2), 0.1), 3, 1)


class TestLogConditional:
    def test_outside_support_is_minus_inf(self):
        free = np.full((2, 2), 1 / 9)
        prior = SpatialBetaPrior.constant(3, c=0)
        lat = _latent(2)
        counts = _no_data(3)
        assert log_conditional_theta(free, 1, 1, lat, counts, prior, value=0.3) == -np.inf
        assert log_conditional_theta(free, 1, 1, lat, counts, prior, value=-0.1) == -np.inf

    def test_no_data_reduces_to_beta_kernel(self):
        prior = SpatialBetaPrior.constant(2, a=0.7, b=1.9, c=0)
        lat = _latent(1)
        counts = _no_data(2)
        free = np.array([[0.2]])
        got = [
            log_conditional_theta(free, 1, 1, lat, counts, prior, value=t)
            for t in (0.1, 0.25, 0.4)
        ]
        want = [(0.7 - 1) * np.log(t) + (1.9 - 1) * np.log1p(-t) for t in (0.1, 0.25, 0.4)]
        assert_allclose(got, want, atol=1e-12)

    def test_ratio_matches_full_joint(self):
        # exp(logcond(t') - logcond(t)) must equal the likelihood x prior
        # ratio of the two full states with every other coordinate frozen
        rng = np.random.default_rng(42)
        m = 3
        counts = CellCounts(m=m, r=rng.multinomial(60, np.full(9, 1 / 9)).reshape(3, 3))
        prior = SpatialBetaPrior.constant(m, a=0.3, b=0.8, c=2)
        lat = _latent(2, omega=0.35, cap=2, rng=rng)
        free = random_feasible_grid(rng, m).free.copy()
        j, k = 2, 1
        lo, hi = conditional_support(free, j, k)
        t0 = 0.5 * (lo + hi)
        t1 = lo + 0.8 * (hi - lo)

        def full_state_log(t):
            f = free.copy()
            f[j - 1, k - 1] = t
            grid = MassGrid.from_free(f)
            return log_likelihood(grid, counts) + log_prior_density(f, lat, prior)

        got = log_conditional_theta(free, j, k, lat, counts, prior, value=t1) - \
            log_conditional_theta(free, j, k, lat, counts, prior, value=t0)
        want = full_state_log(t1) - full_state_log(t0)
        assert got == pytest.approx(want, abs=1e-10)


class TestMhUpdate:
    def test_proposals_stay_in_support(self):
        rng = np.random.default_rng(43)
        m = 3
        free = random_feasible_grid(rng, m).free.copy()
        prior = SpatialBetaPrior.constant(m, c=1)
        lat = _latent(2, cap=1, rng=rng)
        counts = _no_data(m)
        for _ in range(500):
            j, k = rng.integers(1, m, size=2)
            lo, hi = conditional_support(free, j, k)
            value, _ = mh_update_theta(free, int(j), int(k), lat, counts, prior, 0.25, rng)
            assert lo < value < hi
            free[j - 1, k - 1] = value
            assert MassGrid.from_free(free).full.min() > 0

    def test_flat_target_full_window_always_accepts(self):
        # a = b = 1, c = 0, no data: the conditional is flat on (l, u); with
        # delta = 1 the clipped window is the whole support on both ends, so
        # the acceptance ratio is exactly 1 for every proposal.
        rng = np.random.default_rng(44)
        prior = SpatialBetaPrior.constant(2, a=1.0, b=1.0, c=0)
        lat = _latent(1)
        counts = _no_data(2)
        free = np.array([[0.25]])
        for _ in range(200):
            value, accepted = mh_update_theta(free, 1, 1, lat, counts, prior, 1.0, rng)
            assert accepted
            free[0, 0] = value

    def test_detailed_balance_on_frozen_rest(self):
        # empirical law of repeated single-cell updates vs the normalised
        # conditional on a fine grid (chi-square after merging thin bins)
        rng = np.random.default_rng(45)
        m = 3
        free = random_feasible_grid(rng, m).free.copy()
        counts = CellCounts(m=m, r=rng.multinomial(60, np.full(9, 1 / 9)).reshape(3, 3))
        prior = SpatialBetaPrior.constant(m, a=0.1, b=0.1, c=1)
        lat = _latent(2, omega=0.4, cap=1, rng=rng)
        j, k = 1, 2
        draws = []
        for step in range(60_000):
            value, _ = mh_update_theta(free, j, k, lat, counts, prior, 0.25, rng)
            free[j - 1, k - 1] = value
            if step >= 2_000 and step % 10 == 0:
                draws.append(value)
        draws = np.asarray(draws)

        lo, hi = conditional_support(free, j, k)
        edges = np.linspace(lo, hi, 201)
        mids = 0.5 * (edges[:-1] + edges[1:])
        logd = np.array(
            [log_conditional_theta(free, j, k, lat, counts, prior, value=t) for t in mids]
        )
        probs = np.exp(logd - logd.max())
        probs /= probs.sum()
        observed, _ = np.histogram(draws, bins=edges)
        merged_obs, merged_probs = merge_thin_bins(observed, probs, min_expected=10 * 1.0)
        chi = stats.chisquare(merged_obs, merged_probs * len(draws))
        assert chi.pvalue > 0.01


class TestEtaConditional:
    def test_zero_cap_is_point_mass(self):
        prior = SpatialBetaPrior.constant(3, c=0)
        lat = _latent(2)
        free = np.full((2, 2), 1 / 9)
        assert_allclose(eta_conditional_masses(free, lat, prior, 1, 1), [1.0])
        rng = np.random.default_rng(46)
        assert sample_eta(free, lat, prior, 1, 1, rng) == 0

    def test_masses_normalised(self):
        rng = np.random.default_rng(47)
        m = 4
        prior = SpatialBetaPrior.constant(m, a=0.2, b=0.5, c=3)
        free = random_feasible_grid(rng, m).free.copy()
        lat = _latent(3, omega=0.55, cap=3, rng=rng)
        for j in range(1, m):
            for k in range(1, m):
                mass = eta_conditional_masses(free, lat, prior, j, k)
                assert mass.shape == (4,)
                assert mass.sum() == pytest.approx(1.0, abs=1e-12)
                assert np.all(mass >= 0)

    def test_masses_match_joint_enumeration_oracle(self):
        # compare against normalised evaluations of the full extended prior
        # (data terms cancel: eta does not enter the likelihood)
        rng = np.random.default_rng(48)
        m = 3
        prior = SpatialBetaPrior.constant(m, a=0.4, b=1.1, c=2)
        free = random_feasible_grid(rng, m).free.copy()
        eta0 = rng.integers(0, 3, size=(2, 2))
        omega = 0.5
        for j, k in [(1, 1), (2, 1), (2, 2)]:
            want = []
            for cand in range(3):
                eta = eta0.copy()
                eta[j - 1, k - 1] = cand
                want.append(
                    log_prior_density(free, LatentState(eta=eta, omega=omega), prior)
                )
            want = np.exp(np.array(want) - max(want))
            want /= want.sum()
            got = eta_conditional_masses(
                free, LatentState(eta=eta0, omega=omega), prior, j, k
            )
            assert_allclose(got, want, atol=1e-10)

    def test_two_point_case_frequencies(self):
        rng = np.random.default_rng(49)
        m = 3
        prior = SpatialBetaPrior.constant(m, a=0.3, b=0.3, c=1)
        free = np.full((2, 2), 0.12)
        lat = _latent(2, omega=0.5, cap=1, rng=rng)
        mass = eta_conditional_masses(free, lat, prior, 1, 2)
        draws = np.array([sample_eta(free, lat, prior, 1, 2, rng) for _ in range(20_000)])
        freq = np.bincount(draws, minlength=2) / draws.size
        se = np.sqrt(mass[1] * (1 - mass[1]) / draws.size)
        assert abs(freq[1] - mass[1]) < 4 * se


class TestOmega:
    def test_no_latents_is_prior(self):
        prior = SpatialBetaPrior.constant(4, a=0.7, b=0.4, c=0)
        lat = _latent(3)
        rng = np.random.default_rng(50)
        draws = np.array([sample_omega(lat, prior, rng) for _ in range(5_000)])
        ks = stats.kstest(draws, stats.beta(0.7, 0.4).cdf)
        assert ks.pvalue > 0.01

    def test_eta_at_cap(self):
        prior = SpatialBetaPrior.constant(3, a=0.5, b=0.5, c=2)
        lat = LatentState(eta=np.full((2, 2), 2, dtype=int), omega=0.5)
        rng = np.random.default_rng(51)
        draws = np.array([sample_omega(lat, prior, rng) for _ in range(5_000)])
        ks = stats.kstest(draws, stats.beta(0.5 + 8, 0.5).cdf)
        assert ks.pvalue > 0.01

    def test_conditional_mean(self):
        rng = np.random.default_rng(52)
        prior = SpatialBetaPrior.constant(3, a=0.2, b=0.9, c=3)
        eta = np.array([[1, 2], [0, 3]])
        lat = LatentState(eta=eta, omega=0.5)
        draws = np.array([sample_omega(lat, prior, rng) for _ in range(40_000)])
        want = (0.2 + eta.sum()) / (0.2 + 0.9 + 4 * 3)
        se = draws.std(ddof=1) / np.sqrt(draws.size)
        assert abs(draws.mean() - want) < 3 * se


class TestRunChain:
    def _quick_cfg(self, seed=0):
        return McmcConfig(iterations=400, burn_in=100, thin=3, delta=0.25, seed=seed)

    def test_identical_seeds_identical_chains(self, tmp_path):
        rng = np.random.default_rng(53)
        s = rank_transform(rng.normal(size=60), rng.normal(size=60))
        counts = cell_counts(s, 3)
        prior = SpatialBetaPrior.constant(3, c=1)
        a = run_chain(counts, prior, self._quick_cfg(seed=9))
        b = run_chain(counts, prior, self._quick_cfg(seed=9))
        assert np.array_equal(a.draws_theta, b.draws_theta)
        assert np.array_equal(a.draws_eta, b.draws_eta)
        assert np.array_equal(a.draws_omega, b.draws_omega)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        a.to_csv(pa)
        b.to_csv(pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_different_seeds_differ(self):
        counts = _no_data(3)
        prior = SpatialBetaPrior.constant(3, c=0)
        a = run_chain(counts, prior, self._quick_cfg(seed=1))
        b = run_chain(counts, prior, self._quick_cfg(seed=2))
        assert not np.array_equal(a.draws_theta, b.draws_theta)

    def test_stored_draws_feasible_and_bounded(self):
        rng = np.random.default_rng(54)
        s = rank_transform(rng.normal(size=80), rng.normal(size=80))
        counts = cell_counts(s, 5)
        prior = SpatialBetaPrior.constant(5, c=2)
        chain = run_chain(counts, prior, self._quick_cfg())
        assert len(chain) == 100
        for t in range(0, len(chain), 10):
            full = MassGrid.from_free(chain.draws_theta[t]).full
            assert full.min() > 0
            assert_allclose(full.sum(axis=0), 0.2, atol=1e-12)
            assert_allclose(full.sum(axis=1), 0.2, atol=1e-12)
        assert np.all(chain.draws_eta <= 2) and np.all(chain.draws_eta >= 0)
        rates = chain.acceptance_rates()
        assert 0.0 <= rates["pooled"] <= 1.0
        assert np.all(chain.propose_count == 400)

    def test_csv_round_trip(self, tmp_path):
        counts = _no_data(3)
        prior = SpatialBetaPrior.constant(3, c=1)
        chain = run_chain(counts, prior, self._quick_cfg(seed=5))
        path = tmp_path / "chain.csv"
        chain.to_csv(path)
        loaded = Chain.from_csv(path)
        assert loaded.m == chain.m
        assert np.array_equal(loaded.sweeps, chain.sweeps)
        assert np.array_equal(loaded.draws_theta, chain.draws_theta)
        assert np.array_equal(loaded.draws_eta, chain.draws_eta)
        assert np.array_equal(loaded.draws_omega, chain.draws_omega)

    def test_no_data_truncated_beta(self):
        # m=2, c=0, no observations: theta draws follow Beta(a, b)
        # truncated to (0, 1/2); oracle draws by rejection sampling.
        # Shapes 0.8 keep the density spike at 0 mild enough for a finite
        # random-walk chain to traverse (at 0.1 a third of the truncated
        # mass sits below 1e-5, unreachable by any finite run).
        counts = _no_data(2)
        prior = SpatialBetaPrior.constant(2, a=0.8, b=0.8, c=0)
        cfg = McmcConfig(iterations=6_000, burn_in=500, thin=2, delta=0.25, seed=3)
        chain = run_chain(counts, prior, cfg)
        draws = chain.draws_theta[::10, 0, 0]  # extra thinning -> near-independent
        rng = np.random.default_rng(60)
        pool = rng.beta(0.8, 0.8, size=20_000)
        oracle = pool[pool < 0.5][:2_000]
        ks = stats.ks_2samp(draws, oracle)
        assert ks.pvalue > 0.01

    def test_order_mismatch(self):
        with pytest.raises(ValueError):
            run_chain(_no_data(3), SpatialBetaPrior.constant(4, c=0), self._quick_cfg())

    def test_c_guidance_warning(self, caplog):
        counts = _no_data(2)  # sqrt(0)/5 = 0 < c
        prior = SpatialBetaPrior.constant(2, c=1)
        with caplog.at_level("WARNING", logger="gridcopula.mcmc"):
            run_chain(counts, prior, self._quick_cfg())
        assert any("sqrt(n)/5" in rec.message for rec in caplog.records)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            McmcConfig(iterations=100, burn_in=100)
        with pytest.raises(ValueError):
            McmcConfig(thin=0)
        with pytest.raises(ValueError):
            McmcConfig(delta=0.0)
