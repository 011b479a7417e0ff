import numpy as np
import pytest

from bridgediag.draws import DrawsMatrix
from bridgediag.errors import BridgeDiagError, DegenerateCovarianceError
from bridgediag.numerics import RngStream, mvn_logpdf
from bridgediag.proposal import Proposal, fit_mvn_proposal, log_g_at, sample_proposal


def _fit_half(points: np.ndarray) -> DrawsMatrix:
    return DrawsMatrix(points[None, :, :])


class TestFit:
    def test_constant_draws_error(self):
        pts = np.tile([1.5, -2.0], (50, 1))
        with pytest.raises(DegenerateCovarianceError):
            fit_mvn_proposal(_fit_half(pts))

    def test_recovers_moments(self):
        gen = RngStream(1).generator()
        a = np.array([[1.0, 0.0], [0.4, 0.8]])
        cov0 = a @ a.T
        mean0 = np.array([2.0, -1.0])
        pts = mean0 + gen.standard_normal((100_000, 2)) @ a.T
        prop = fit_mvn_proposal(_fit_half(pts))
        assert np.allclose(prop.mean, mean0, atol=4 * np.sqrt(np.diag(cov0) / 1e5))
        fitted_cov = prop.chol.covariance()
        assert np.linalg.norm(fitted_cov - cov0) / np.linalg.norm(cov0) < 0.05

    def test_two_point_variance(self):
        pts = np.array([[-1.0], [1.0]] * 10)
        prop = fit_mvn_proposal(_fit_half(pts))
        n = 20
        assert prop.mean[0] == 0.0
        assert prop.chol.covariance()[0, 0] == pytest.approx(n / (n - 1), rel=1e-12)

    def test_insufficient_draws(self):
        pts = RngStream(2).generator().standard_normal((3, 3))
        with pytest.raises(BridgeDiagError, match="insufficient draws"):
            fit_mvn_proposal(_fit_half(pts))

    def test_affine_equivariance(self):
        gen = RngStream(3).generator()
        pts = gen.standard_normal((5000, 2))
        a = np.array([[2.0, 0.3], [-0.5, 1.2]])
        b = np.array([3.0, -4.0])
        p0 = fit_mvn_proposal(_fit_half(pts))
        p1 = fit_mvn_proposal(_fit_half(pts @ a.T + b))
        assert np.allclose(p1.mean, a @ p0.mean + b, rtol=1e-10, atol=1e-12)
        assert np.allclose(
            p1.chol.covariance(), a @ p0.chol.covariance() @ a.T, rtol=1e-8, atol=1e-12
        )


class TestSampleAndEvaluate:
    @pytest.fixture()
    def std_proposal(self):
        pts = RngStream(4).generator().standard_normal((4000, 1))
        return fit_mvn_proposal(_fit_half(pts))

    def test_mean_log_density(self, std_proposal):
        # E[log N(x;mu,s^2)] = -0.5*log(2*pi*s^2) - 0.5 for x ~ N(mu, s^2)
        _, log_g = sample_proposal(RngStream(5), std_proposal, 100_000)
        var = std_proposal.chol.covariance()[0, 0]
        expected = -0.5 * np.log(2 * np.pi * var) - 0.5
        assert log_g.mean() == pytest.approx(expected, rel=0.01)

    def test_deterministic(self, std_proposal):
        a = sample_proposal(RngStream(6), std_proposal, 64)
        b = sample_proposal(RngStream(6), std_proposal, 64)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_two_draws_distinct(self, std_proposal):
        pts, _ = sample_proposal(RngStream(7), std_proposal, 2)
        assert pts[0, 0] != pts[1, 0]

    def test_log_g_matches_returned_exactly(self, std_proposal):
        pts, log_g = sample_proposal(RngStream(8), std_proposal, 100)
        assert np.array_equal(log_g_at(std_proposal, pts), log_g)

    def test_log_g_is_mvn_logpdf(self, std_proposal):
        pts = np.array([[0.0], [1.0], [-2.5]])
        expected = mvn_logpdf(pts, std_proposal.mean, std_proposal.chol)
        assert np.array_equal(log_g_at(std_proposal, pts), expected)


class TestSerialization:
    def test_json_round_trip(self):
        pts = RngStream(9).generator().standard_normal((500, 3))
        prop = fit_mvn_proposal(_fit_half(pts))
        back = Proposal.from_json_dict(prop.to_json_dict())
        assert np.array_equal(back.mean, prop.mean)
        assert np.array_equal(back.chol.lower, prop.chol.lower)
        assert back.log_norm_const == pytest.approx(prop.log_norm_const, rel=1e-15)
        assert back.jitter_applied == prop.jitter_applied
