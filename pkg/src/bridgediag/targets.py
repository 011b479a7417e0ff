"""Evaluable target models: log unnormalized posteriors with analytic oracles.

A target is anything that can evaluate log(p(y|theta) * p(theta)) at points of
the unconstrained parameter space. The built-ins are conjugate (or t-family)
so they also expose the exact log marginal likelihood and an exact posterior
sampler, which is what the calibration and acceptance suites lean on.

Evaluators map points outside the support to ``-inf`` rather than raising:
proposal draws routinely land outside the support and a zero term is a
perfectly valid summand for the estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .draws import DrawsMatrix
from .errors import BridgeDiagError, DimensionError
from .numerics import CholFactor, RngStream, cholesky_with_jitter, mvn_logpdf, mvn_sample

_LOG_2PI = float(np.log(2.0 * np.pi))


class TargetModel:
    """Base class: a dim plus a vectorized log unnormalized posterior.

    Subclasses implement :meth:`log_unnorm_batch`; the remaining hooks
    (analytic marginal, exact posterior sampler, Gaussian posterior) raise by
    default and are overridden where closed forms exist. Instances are
    immutable and safe to share across threads.
    """

    dim: int

    def log_unnorm_batch(self, thetas: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_unnorm(self, theta) -> float:
        pts = np.asarray(theta, dtype=float)
        if pts.shape != (self.dim,):
            raise DimensionError(f"point shape {pts.shape}, model dim {self.dim}")
        return float(self.log_unnorm_batch(pts[None, :])[0])

    def oracle_log_ml(self) -> float:
        raise BridgeDiagError("no analytic marginal")

    def sample_posterior(self, rng: RngStream, n: int) -> np.ndarray:
        raise BridgeDiagError("no exact sampler")

    def posterior_gaussian(self) -> tuple[np.ndarray, CholFactor]:
        """(mean, covariance factor) of the posterior when it is exactly Gaussian."""
        raise BridgeDiagError("AR(1) sampler requires Gaussian posterior")

    def _check_batch(self, thetas) -> np.ndarray:
        pts = np.asarray(thetas, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise DimensionError(f"batch shape {pts.shape}, model dim {self.dim}")
        return pts


def log_unnorm_posterior(model: TargetModel, theta) -> float:
    """log(p(y|theta) * p(theta)) at one point; finite or -inf, never nan."""
    return model.log_unnorm(theta)


def exact_log_marginal(model: TargetModel) -> float:
    """The analytic log marginal likelihood, when the model has one."""
    return model.oracle_log_ml()


def exact_posterior_sample(model: TargetModel, rng: RngStream, n: int) -> DrawsMatrix:
    """n iid exact-posterior draws as a single chain (models with closed forms only)."""
    if n < 1:
        raise BridgeDiagError("need at least one draw")
    return DrawsMatrix(model.sample_posterior(rng, n)[None, :, :])


@dataclass(frozen=True)
class ConjugateNormalModel(TargetModel):
    """Normal observations with known sd and a normal prior on the mean.

    y_i ~ N(mu, sigma^2) for i in 1..n, mu ~ N(0, tau^2). Stored through the
    sufficient statistics (ybar, ssq = sum of y_i^2), so the evaluator is a
    closed-form quadratic and the marginal is a single Gaussian density.
    """

    n: int
    sigma: float
    tau: float
    ybar: float
    ssq: float
    dim: int = field(default=1, init=False)

    @classmethod
    def from_data(cls, y, sigma: float, tau: float) -> "ConjugateNormalModel":
        arr = np.asarray(y, dtype=float)
        return cls(n=arr.size, sigma=sigma, tau=tau,
                   ybar=float(arr.mean()), ssq=float(np.sum(arr * arr)))

    def log_unnorm_batch(self, thetas) -> np.ndarray:
        pts = self._check_batch(thetas)
        mu = pts[:, 0]
        sse = self.ssq - 2.0 * self.n * self.ybar * mu + self.n * mu * mu
        loglik = -0.5 * self.n * (_LOG_2PI + 2.0 * np.log(self.sigma)) - sse / (2.0 * self.sigma**2)
        logprior = -0.5 * (_LOG_2PI + 2.0 * np.log(self.tau)) - mu * mu / (2.0 * self.tau**2)
        return loglik + logprior

    def oracle_log_ml(self) -> float:
        # y ~ N(0, sigma^2 I + tau^2 11^T); Sherman-Morrison closes the form.
        s2, t2, n = self.sigma**2, self.tau**2, self.n
        logdet = (n - 1) * np.log(s2) + np.log(s2 + n * t2)
        quad = (self.ssq - t2 * (n * self.ybar) ** 2 / (s2 + n * t2)) / s2
        return float(-0.5 * (n * _LOG_2PI + logdet + quad))

    def _posterior_moments(self) -> tuple[float, float]:
        s2, t2 = self.sigma**2, self.tau**2
        var = s2 * t2 / (s2 + self.n * t2)
        mean = self.n * self.ybar * t2 / (s2 + self.n * t2)
        return mean, var

    def sample_posterior(self, rng: RngStream, n: int) -> np.ndarray:
        mean, var = self._posterior_moments()
        z = rng.generator().standard_normal((n, 1))
        return mean + np.sqrt(var) * z

    def posterior_gaussian(self) -> tuple[np.ndarray, CholFactor]:
        mean, var = self._posterior_moments()
        return np.array([mean]), CholFactor(1, np.array([[np.sqrt(var)]]))


@dataclass(frozen=True)
class ConjugateLinRegModel(TargetModel):
    """Linear regression with known noise sd and an isotropic normal prior.

    y ~ N(X beta, sigma^2 I), beta ~ N(0, prior_sd^2 I). The marginal is
    log N(y; 0, sigma^2 I + prior_sd^2 X X^T).
    """

    X: np.ndarray
    y: np.ndarray
    sigma: float
    prior_sd: float

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise DimensionError(f"X shape {X.shape} incompatible with y shape {y.shape}")
        X = X.copy()
        y = y.copy()
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        # Gram-form sufficient statistics make the batch likelihood O(k^2) per
        # point with no (points x observations) intermediate.
        object.__setattr__(self, "_gram", X.T @ X)
        object.__setattr__(self, "_xty", X.T @ y)
        object.__setattr__(self, "_yty", float(y @ y))

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @classmethod
    def simulate(cls, rng: RngStream, n: int, k: int, *, sigma: float = 1.0,
                 prior_sd: float = 1.0) -> "ConjugateLinRegModel":
        """A random instance with standardized design and data drawn from the model."""
        gen = rng.generator()
        X = gen.standard_normal((n, k)) / np.sqrt(n * k)
        beta = gen.standard_normal(k)
        y = X @ beta + sigma * gen.standard_normal(n)
        return cls(X=X, y=y, sigma=sigma, prior_sd=prior_sd)

    def log_unnorm_batch(self, thetas) -> np.ndarray:
        pts = self._check_batch(thetas)
        n, k = self.X.shape
        sse = self._yty - 2.0 * (pts @ self._xty) + np.sum((pts @ self._gram) * pts, axis=1)
        loglik = -0.5 * n * (_LOG_2PI + 2.0 * np.log(self.sigma)) \
            - sse / (2.0 * self.sigma**2)
        logprior = -0.5 * k * (_LOG_2PI + 2.0 * np.log(self.prior_sd)) \
            - np.sum(pts * pts, axis=1) / (2.0 * self.prior_sd**2)
        return loglik + logprior

    def oracle_log_ml(self) -> float:
        n = self.X.shape[0]
        cov = self.sigma**2 * np.eye(n) + self.prior_sd**2 * (self.X @ self.X.T)
        chol = cholesky_with_jitter(cov, schedule=())
        return mvn_logpdf(self.y, np.zeros(n), chol)

    def _posterior_moments(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.dim
        prec = self.X.T @ self.X / self.sigma**2 + np.eye(k) / self.prior_sd**2
        cov = np.linalg.inv(prec)
        cov = 0.5 * (cov + cov.T)
        mean = cov @ (self.X.T @ self.y) / self.sigma**2
        return mean, cov

    def sample_posterior(self, rng: RngStream, n: int) -> np.ndarray:
        mean, chol = self.posterior_gaussian()
        return mvn_sample(rng, mean, chol, n)

    def posterior_gaussian(self) -> tuple[np.ndarray, CholFactor]:
        mean, cov = self._posterior_moments()
        return mean, cholesky_with_jitter(cov)


@dataclass(frozen=True)
class DifficultyDialModel(TargetModel):
    """Heavy-tailed synthetic target: a d-dimensional Student-t kernel.

    The unnormalized density is exp(log_scale) * (1 + |theta|^2/dof)^(-(dof+d)/2),
    so the exact log marginal is log_scale plus the known t normalizer. Raising
    ``dim`` (or lowering ``dof``) dials up how badly a normal proposal fits,
    which is exactly the stress regime the tail diagnostics are for.
    """

    dim: int
    dof: float
    log_scale: float = 0.0

    def __post_init__(self):
        if self.dof <= 2.0:
            raise BridgeDiagError("dof must exceed 2 so posterior moments exist")

    def log_unnorm_batch(self, thetas) -> np.ndarray:
        pts = self._check_batch(thetas)
        ssq = np.sum(pts * pts, axis=1)
        return self.log_scale - 0.5 * (self.dof + self.dim) * np.log1p(ssq / self.dof)

    def oracle_log_ml(self) -> float:
        d, nu = self.dim, self.dof
        log_z = gammaln(nu / 2.0) - gammaln((nu + d) / 2.0) + 0.5 * d * np.log(nu * np.pi)
        return float(self.log_scale + log_z)

    def sample_posterior(self, rng: RngStream, n: int) -> np.ndarray:
        gen = rng.generator()
        z = gen.standard_normal((n, self.dim))
        g = gen.chisquare(self.dof, size=n)
        return z * np.sqrt(self.dof / g)[:, None]


@dataclass(frozen=True)
class OffsetModel(TargetModel):
    """A wrapper adding a constant to the base model's log density.

    Shifts the log marginal likelihood by exactly the same constant, which is
    the testable form of the estimator's scale equivariance.
    """

    base: TargetModel
    offset: float

    @property
    def dim(self) -> int:
        return self.base.dim

    def log_unnorm_batch(self, thetas) -> np.ndarray:
        return self.base.log_unnorm_batch(thetas) + self.offset

    def oracle_log_ml(self) -> float:
        return self.base.oracle_log_ml() + self.offset

    def sample_posterior(self, rng: RngStream, n: int) -> np.ndarray:
        return self.base.sample_posterior(rng, n)

    def posterior_gaussian(self) -> tuple[np.ndarray, CholFactor]:
        return self.base.posterior_gaussian()


@dataclass(frozen=True)
class ScaledMvnModel(TargetModel):
    """Target equal to exp(log_c) times a fixed normalized Gaussian density.

    The marginal likelihood is exactly exp(log_c); when the pipeline's fitted
    proposal coincides with this Gaussian, every estimator ratio is the
    constant c, which pins down the estimator's exactness properties.
    """

    mean: np.ndarray
    chol: CholFactor
    log_c: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).copy()
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)

    @property
    def dim(self) -> int:
        return self.chol.dim

    def log_unnorm_batch(self, thetas) -> np.ndarray:
        pts = self._check_batch(thetas)
        return self.log_c + mvn_logpdf(pts, self.mean, self.chol)

    def oracle_log_ml(self) -> float:
        return self.log_c

    def sample_posterior(self, rng: RngStream, n: int) -> np.ndarray:
        return mvn_sample(rng, self.mean, self.chol, n)

    def posterior_gaussian(self) -> tuple[np.ndarray, CholFactor]:
        return self.mean, self.chol
