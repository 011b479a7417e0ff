import numpy as np
import pytest

from bridgediag.bridge import BridgeConfig
from bridgediag.draws import DrawsMatrix
from bridgediag.errors import BridgeDiagError
from bridgediag.numerics import RngStream
from bridgediag.proposal import fit_mvn_proposal
from bridgediag.reshuffle import multi_run_sd, reshuffle_estimates
from bridgediag.samplers import sample_exact_chains, sampler_ar1
from bridgediag.targets import ConjugateNormalModel, OffsetModel, ScaledMvnModel


@pytest.fixture(scope="module")
def easy_model():
    return ConjugateNormalModel.from_data(
        RngStream(50).generator().normal(0.5, 1.0, 20), sigma=1.0, tau=2.0
    )


def _proportional_setup(seed=51, chains=2, iters=200):
    # model = c * (the very proposal the pipeline will fit): constant ratios
    gen = RngStream(seed).generator()
    data = gen.standard_normal((chains, iters, 1))
    draws = DrawsMatrix(data)
    from bridgediag.draws import split_halves

    prop = fit_mvn_proposal(split_halves(draws).fit_half)
    return ScaledMvnModel(mean=prop.mean, chol=prop.chol, log_c=4.2), draws


class TestReshuffleEstimates:
    def test_replicate_draws_are_permutations(self, easy_model):
        draws = sample_exact_chains(easy_model, RngStream(52), 2, 50)
        from bridgediag.draws import block_reshuffle, default_block_len, make_block_plan

        plan = make_block_plan(draws, default_block_len(draws.iters))
        for r in (1, 2, 3):
            shuffled = block_reshuffle(RngStream(0).replicate(r).substream(0), draws, plan)
            assert np.array_equal(
                np.sort(draws.pooled().ravel()), np.sort(shuffled.pooled().ravel())
            )

    def test_deterministic(self, easy_model):
        draws = sample_exact_chains(easy_model, RngStream(53), 4, 100)
        a = reshuffle_estimates(easy_model, draws, 5, None, BridgeConfig(), RngStream(9))
        b = reshuffle_estimates(easy_model, draws, 5, None, BridgeConfig(), RngStream(9))
        assert np.array_equal(a.estimates, b.estimates)

    def test_shift_invariance_of_sd(self, easy_model):
        draws = sample_exact_chains(easy_model, RngStream(54), 2, 100)
        base = reshuffle_estimates(easy_model, draws, 8, None, BridgeConfig(), RngStream(10))
        shifted = reshuffle_estimates(
            OffsetModel(easy_model, 500.0), draws, 8, None, BridgeConfig(), RngStream(10)
        )
        assert shifted.sd_log == pytest.approx(base.sd_log, rel=1e-6, abs=1e-12)
        assert np.allclose(shifted.estimates - base.estimates, 500.0, atol=1e-9)

    def test_constant_ratio_sd_zero(self):
        # whole-chain blocks only permute chains, so every replicate refits the
        # identical pooled proposal and the target stays proportional to it
        model, draws = _proportional_setup()
        rep = reshuffle_estimates(
            model, draws, 6, draws.iters, BridgeConfig(), RngStream(11)
        )
        assert np.allclose(rep.estimates, 4.2, atol=1e-10)
        assert rep.sd_log == pytest.approx(0.0, abs=1e-10)

    def test_r2_boundary(self, easy_model):
        draws = sample_exact_chains(easy_model, RngStream(55), 2, 60)
        rep = reshuffle_estimates(easy_model, draws, 2, None, BridgeConfig(), RngStream(12))
        assert rep.replicates == 2
        assert rep.khat_estimates is None
        assert rep.khat_low_confidence

    def test_r1_rejected(self, easy_model):
        draws = sample_exact_chains(easy_model, RngStream(56), 2, 60)
        with pytest.raises(BridgeDiagError, match="at least 2"):
            reshuffle_estimates(easy_model, draws, 1, None, BridgeConfig(), RngStream(13))

    def test_block_len_limits_run(self, easy_model):
        # both extremes must run without error
        draws = sample_exact_chains(easy_model, RngStream(57), 2, 64)
        for block_len in (1, 64):
            rep = reshuffle_estimates(
                easy_model, draws, 4, block_len, BridgeConfig(), RngStream(14)
            )
            assert rep.block_len == block_len
            assert np.isfinite(rep.sd_log)

    def test_khat_present_for_r50(self, easy_model):
        draws = sample_exact_chains(easy_model, RngStream(58), 4, 100)
        rep = reshuffle_estimates(easy_model, draws, 50, None, BridgeConfig(), RngStream(15))
        assert rep.khat_estimates is not None
        assert rep.khat_estimates.tail_count == 10  # max(5, floor(min(10, 21.2)))
        assert not rep.khat_low_confidence

    def test_failed_replicates_counted_and_excluded(self, easy_model, monkeypatch):
        import bridgediag.reshuffle as module

        real = module.estimate_log_ml
        calls = {"n": 0}

        def flaky(model, draws, config, rng):
            calls["n"] += 1
            if calls["n"] % 10 == 0:
                raise BridgeDiagError("synthetic replicate failure")
            return real(model, draws, config, rng)

        monkeypatch.setattr(module, "estimate_log_ml", flaky)
        draws = sample_exact_chains(easy_model, RngStream(59), 2, 60)
        monkeypatch.setenv("BRIDGEDIAG_THREADS", "1")
        rep = reshuffle_estimates(easy_model, draws, 10, None, BridgeConfig(), RngStream(16))
        assert rep.n_failed == 1
        assert rep.estimates.size == 9

    def test_unstable_when_many_fail(self, easy_model, monkeypatch):
        import bridgediag.reshuffle as module

        def broken(model, draws, config, rng):
            raise BridgeDiagError("synthetic replicate failure")

        monkeypatch.setattr(module, "estimate_log_ml", broken)
        draws = sample_exact_chains(easy_model, RngStream(60), 2, 60)
        with pytest.raises(BridgeDiagError, match="reshuffle unstable"):
            reshuffle_estimates(easy_model, draws, 10, None, BridgeConfig(), RngStream(17))


class TestMultiRunSd:
    def test_constant_ratio_zero(self):
        model, draws = _proportional_setup(seed=60)

        def sampler(_model, rng):
            return draws  # same draws each repeat: pipeline randomness only

        sd, estimates = multi_run_sd(model, sampler, 10, BridgeConfig(), RngStream(16))
        assert sd == pytest.approx(0.0, abs=1e-10)
        assert np.allclose(estimates, 4.2, atol=1e-10)

    def test_autocorrelated_draws_increase_sd(self, easy_model):
        iid = lambda m, r: sample_exact_chains(m, r, 4, 250)
        corr = lambda m, r: sampler_ar1(m, 0.9, 4, 250, r)
        sd_iid, _ = multi_run_sd(easy_model, iid, 40, BridgeConfig(), RngStream(17))
        sd_corr, _ = multi_run_sd(easy_model, corr, 40, BridgeConfig(), RngStream(17))
        assert sd_corr > 1.5 * sd_iid

    def test_needs_ten_repeats(self, easy_model):
        sampler = lambda m, r: sample_exact_chains(m, r, 2, 50)
        with pytest.raises(BridgeDiagError, match="10"):
            multi_run_sd(easy_model, sampler, 9, BridgeConfig(), RngStream(18))
