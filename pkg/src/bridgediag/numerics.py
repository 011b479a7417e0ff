"""Log-space arithmetic, counter-based RNG streams, and small dense linear algebra.

Every routine here is a pure function: the only state is the explicitly
passed :class:`RngStream`, so everything is safe to call from any thread.
Log-space values are plain floats where ``-inf`` encodes an exact zero;
``nan`` and ``+inf`` are never valid and are rejected on input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BridgeDiagError, DegenerateCovarianceError, DimensionError

_MASK64 = (1 << 64) - 1

#: Relative jitter levels tried in order when a covariance fails to factor.
JITTER_SCHEDULE = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)

_LOG_2PI = float(np.log(2.0 * np.pi))


def _splitmix64(x: int) -> int:
    """Finalizer of the splitmix64 generator; bijective on 64-bit ints."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    """Addressable randomness: a (seed, stream_id) pair backed by Philox.

    Identical pairs give bit-identical draw sequences on every run and under
    any thread schedule; distinct stream ids give statistically independent
    streams (128-bit keyed counter-based generator). Streams are cheap value
    objects, so pass them around freely instead of sharing generator state.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.seed & _MASK64, spawn_key=(self.stream_id & _MASK64,)
        )
        return np.random.Generator(np.random.Philox(seed=seq))

    def substream(self, index: int) -> "RngStream":
        """A derived stream that is independent of this one and of other indices."""
        mixed = _splitmix64((self.stream_id & _MASK64) ^ _splitmix64(index & _MASK64))
        return RngStream(self.seed, mixed)

    def replicate(self, index: int) -> "RngStream":
        """The root stream for bootstrap replicate ``index``: stream_id == index."""
        return RngStream(self.seed, index)


def _as_log_values(xs) -> np.ndarray:
    arr = np.asarray(xs, dtype=float)
    if arr.size == 0:
        raise BridgeDiagError("empty sequence")
    if np.isnan(arr).any():
        raise BridgeDiagError("nan is not a valid log value")
    if np.isposinf(arr).any():
        raise BridgeDiagError("+inf is not a valid log value")
    return arr


def log_sum_exp(xs) -> float:
    """log(sum(exp(xs))) with max-shift protection; exact when one term dominates.

    ``-inf`` entries contribute nothing; an all ``-inf`` input returns ``-inf``.
    """
    arr = _as_log_values(xs)
    m = float(np.max(arr))
    if m == -np.inf:
        return -np.inf
    return m + float(np.log(np.sum(np.exp(arr - m))))


def log_mean_exp(xs) -> float:
    """log of the arithmetic mean of exp(xs), computed as log_sum_exp - log n."""
    arr = _as_log_values(xs)
    return log_sum_exp(arr) - float(np.log(arr.size))


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular Cholesky factor of a (possibly jittered) covariance.

    ``jitter_applied`` is the absolute amount added to each diagonal entry of
    the input before factorization succeeded (0 when none was needed).
    """

    dim: int
    lower: np.ndarray
    jitter_applied: float = 0.0

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        if lower.shape != (self.dim, self.dim):
            raise DimensionError(f"factor shape {lower.shape} != ({self.dim}, {self.dim})")
        lower = np.tril(lower)
        lower.setflags(write=False)
        object.__setattr__(self, "lower", lower)

    def covariance(self) -> np.ndarray:
        return self.lower @ self.lower.T

    def log_det_cov(self) -> float:
        """log determinant of lower @ lower.T."""
        return 2.0 * float(np.sum(np.log(np.diag(self.lower))))

    def solve_lower(self, b: np.ndarray) -> np.ndarray:
        """Solve lower @ x = b (b can hold multiple right-hand-side columns)."""
        return scipy.linalg.solve_triangular(self.lower, b, lower=True, check_finite=False)


def cholesky_with_jitter(m, schedule=JITTER_SCHEDULE) -> CholFactor:
    """Factor a symmetric matrix, escalating diagonal jitter until it succeeds.

    The jitter added at level ``eps`` is ``eps * trace(m)/dim`` on every
    diagonal entry. Raises :class:`DegenerateCovarianceError` if the matrix is
    still not positive definite at the last level.
    """
    mat = np.asarray(m, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {mat.shape}")
    if not np.isfinite(mat).all():
        raise BridgeDiagError("covariance contains non-finite entries")
    scale = float(np.max(np.abs(mat)))
    if float(np.max(np.abs(mat - mat.T))) > 1e-8 * max(scale, 1.0):
        raise BridgeDiagError("matrix is not symmetric within tolerance")
    mat = 0.5 * (mat + mat.T)
    dim = mat.shape[0]
    mean_diag_scale = float(np.trace(mat)) / dim

    for eps in (0.0, *schedule):
        jitter = eps * mean_diag_scale
        try:
            lower = np.linalg.cholesky(mat + jitter * np.eye(dim))
        except np.linalg.LinAlgError:
            continue
        if np.min(np.diag(lower)) <= 0.0:
            continue
        return CholFactor(dim=dim, lower=lower, jitter_applied=jitter)
    raise DegenerateCovarianceError("degenerate covariance")


def mvn_logpdf(x, mean, chol: CholFactor):
    """Exact log N(x; mean, lower @ lower.T), normalization constant included.

    ``x`` may be a single point of shape (d,) or a batch of shape (n, d);
    the return is a float or an (n,) array accordingly.
    """
    pts = np.asarray(x, dtype=float)
    mu = np.asarray(mean, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.shape[1] != chol.dim or mu.shape != (chol.dim,):
        raise DimensionError(
            f"point dim {pts.shape[1]}, mean shape {mu.shape}, factor dim {chol.dim}"
        )
    z = chol.solve_lower((pts - mu).T)
    quad = np.sum(z * z, axis=0)
    out = -0.5 * (chol.dim * _LOG_2PI + chol.log_det_cov() + quad)
    return float(out[0]) if single else out


def mvn_sample(rng: RngStream, mean, chol: CholFactor, n: int) -> np.ndarray:
    """n draws mean + lower @ z with z standard normal; deterministic per stream."""
    if n < 1:
        raise BridgeDiagError("need at least one draw")
    mu = np.asarray(mean, dtype=float)
    if mu.shape != (chol.dim,):
        raise DimensionError(f"mean shape {mu.shape} does not match factor dim {chol.dim}")
    z = rng.generator().standard_normal((n, chol.dim))
    return mu + z @ chol.lower.T
