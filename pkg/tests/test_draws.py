import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgediag.draws import (
    DrawsMatrix,
    block_reshuffle,
    default_block_len,
    make_block_plan,
    read_draws_csv,
    split_halves,
    write_draws_csv,
)
from bridgediag.errors import BridgeDiagError
from bridgediag.numerics import RngStream


def _draws(c, t, d, seed=0):
    return DrawsMatrix(RngStream(seed).generator().standard_normal((c, t, d)))


class TestDrawsMatrix:
    def test_shape_properties(self):
        m = _draws(2, 5, 3)
        assert (m.chains, m.iters, m.dim) == (2, 5, 3)
        assert m.pooled().shape == (10, 3)

    def test_rejects_non_finite(self):
        data = np.zeros((1, 4, 1))
        data[0, 1, 0] = np.nan
        with pytest.raises(BridgeDiagError, match="non-finite"):
            DrawsMatrix(data)

    def test_immutable(self):
        m = _draws(1, 4, 1)
        with pytest.raises(ValueError):
            m.data[0, 0, 0] = 5.0


class TestCsvRoundTrip:
    def test_basic_read(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text(
            "chain,iteration,theta.1\n1,1,0.5\n1,2,1.5\n1,3,2.5\n2,1,-1\n2,2,-2\n2,3,-3\n"
        )
        m = read_draws_csv(p)
        assert (m.chains, m.iters, m.dim) == (2, 3, 1)
        assert m.data[1, 2, 0] == -3.0

    def test_unbalanced_chains(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("chain,iteration,theta.1\n1,1,0\n1,2,0\n1,3,0\n2,1,0\n2,2,0\n2,3,0\n2,4,0\n")
        with pytest.raises(BridgeDiagError, match="unbalanced chains"):
            read_draws_csv(p)

    def test_non_numeric_cell_names_position(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("chain,iteration,theta.1\n1,1,0.5\n1,2,oops\n")
        with pytest.raises(BridgeDiagError, match="row 3, column 3"):
            read_draws_csv(p)

    def test_nan_cell_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("chain,iteration,theta.1\n1,1,nan\n1,2,0\n")
        with pytest.raises(BridgeDiagError, match="non-finite draw"):
            read_draws_csv(p)

    def test_round_trip_bit_exact(self, tmp_path):
        m = _draws(3, 7, 2, seed=4)
        p = tmp_path / "rt.csv"
        write_draws_csv(p, m)
        back = read_draws_csv(p)
        assert np.array_equal(back.data, m.data)

    def test_no_chain_cols(self, tmp_path):
        p = tmp_path / "bare.csv"
        p.write_text("0.1,0.2\n0.3,0.4\n0.5,0.6\n")
        m = read_draws_csv(p, no_chain_cols=True)
        assert (m.chains, m.iters, m.dim) == (1, 3, 2)

    def test_no_chain_cols_with_header(self, tmp_path):
        p = tmp_path / "bare.csv"
        p.write_text("a,b\n0.1,0.2\n0.3,0.4\n")
        m = read_draws_csv(p, no_chain_cols=True)
        assert (m.chains, m.iters, m.dim) == (1, 2, 2)


class TestSplitHalves:
    def test_even_split(self):
        m = _draws(1, 4, 1)
        s = split_halves(m)
        assert s.estimation_half.iters == 2 and s.fit_half.iters == 2
        assert np.array_equal(s.estimation_half.data, m.data[:, :2, :])

    def test_s1_count_for_default_budget(self):
        m = _draws(4, 1000, 1)
        s = split_halves(m)
        assert s.estimation_half.chains * s.estimation_half.iters == 2000

    def test_odd_split_loses_nothing(self):
        m = _draws(2, 5, 1)
        s = split_halves(m)
        assert s.estimation_half.iters == 2 and s.fit_half.iters == 3
        recon = np.concatenate([s.estimation_half.data, s.fit_half.data], axis=1)
        assert np.array_equal(recon, m.data)

    def test_too_few_iterations(self):
        with pytest.raises(BridgeDiagError, match="too few iterations"):
            split_halves(_draws(1, 3, 1))


class TestBlockPlan:
    def test_even_blocks(self):
        plan = make_block_plan(_draws(2, 10, 1), 5)
        assert len(plan.blocks) == 4
        assert all(length == 5 for _, _, length in plan.blocks)

    def test_remainder_block(self):
        plan = make_block_plan(_draws(1, 10, 1), 3)
        lengths = [length for _, _, length in plan.blocks]
        assert lengths == [3, 3, 3, 1]

    def test_block_len_equals_t(self):
        plan = make_block_plan(_draws(3, 10, 1), 10)
        assert len(plan.blocks) == 3

    def test_out_of_range(self):
        with pytest.raises(BridgeDiagError):
            make_block_plan(_draws(1, 10, 1), 11)
        with pytest.raises(BridgeDiagError):
            make_block_plan(_draws(1, 10, 1), 0)


class TestBlockReshuffle:
    def test_single_block_per_chain_relabels_chains(self):
        m = _draws(3, 6, 2)
        plan = make_block_plan(m, 6)
        out = block_reshuffle(RngStream(1), m, plan)
        orig = {m.data[c].tobytes() for c in range(3)}
        new = {out.data[c].tobytes() for c in range(3)}
        assert orig == new

    def test_multiset_preserved(self):
        m = _draws(2, 9, 2)
        plan = make_block_plan(m, 4)
        out = block_reshuffle(RngStream(3), m, plan)
        a = np.sort(m.pooled().view([("", float)] * 2), axis=0)
        b = np.sort(out.pooled().view([("", float)] * 2), axis=0)
        assert np.array_equal(a, b)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 12))
    def test_multiset_preserved_any_seed(self, seed, block_len):
        m = _draws(2, 12, 1, seed=8)
        plan = make_block_plan(m, block_len)
        out = block_reshuffle(RngStream(seed), m, plan)
        assert np.array_equal(np.sort(m.pooled().ravel()), np.sort(out.pooled().ravel()))

    def test_ar1_autocorrelation_preserved(self):
        # AR(1) with rho=0.8; sqrt-T blocks must keep lag-1 autocorrelation within 10%
        t = 10_000
        rho = 0.8
        gen = RngStream(5).generator()
        eta = gen.standard_normal(t)
        x = np.empty(t)
        x[0] = eta[0]
        for i in range(1, t):
            x[i] = rho * x[i - 1] + np.sqrt(1 - rho**2) * eta[i]
        m = DrawsMatrix(x[None, :, None])

        def lag1(v):
            v = v - v.mean()
            return float(v[:-1] @ v[1:] / (v @ v))

        plan = make_block_plan(m, default_block_len(t))
        out = block_reshuffle(RngStream(6), m, plan)
        assert lag1(out.data[0, :, 0]) == pytest.approx(lag1(m.data[0, :, 0]), rel=0.10)

    def test_iid_summary_statistics_invariant(self):
        # two-sample energy distance between original and reshuffled iid draws
        m = _draws(2, 100, 2, seed=11)
        plan = make_block_plan(m, 10)
        out = block_reshuffle(RngStream(12), m, plan)
        x, y = m.pooled(), out.pooled()

        def energy(a, b):
            def mean_dist(u, v):
                diff = u[:, None, :] - v[None, :, :]
                return float(np.sqrt((diff**2).sum(-1)).mean())

            return 2 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b)

        observed = energy(x, y)
        pooled = np.concatenate([x, y])
        gen = RngStream(13).generator()
        null = []
        for _ in range(200):
            perm = gen.permutation(pooled.shape[0])
            null.append(energy(pooled[perm[: x.shape[0]]], pooled[perm[x.shape[0] :]]))
        # reshuffling permutes rows, so the energy statistic sits inside the null
        assert observed <= np.quantile(null, 0.99)
