"""Generalized Pareto tail-shape diagnostic for estimator summands.

A fitted shape khat below 0.5 says the empirical mean of the summands behaves
well at this sample size; between 0.5 and 0.7 is suspect; at or above 0.7 the
finite-sample behavior resembles a heavy tail and the variance-based MCSE can
no longer be trusted, even though the summands are bounded by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bridge import BridgeResult
from .errors import BridgeDiagError

KHAT_GOOD_BELOW = 0.5
KHAT_BAD_FROM = 0.7


@dataclass(frozen=True)
class GpdFit:
    """Fitted tail: shape khat (positive = heavy), scale, and the tail used.

    ``degenerate`` marks inputs with no usable tail spread (all excesses
    equal), for which the point-mass limit khat = -1 is reported.
    """

    khat: float
    sigma_hat: float
    tail_count: int
    threshold_u: float
    degenerate: bool = False

    @property
    def label(self) -> str:
        if self.khat < KHAT_GOOD_BELOW:
            return "good"
        if self.khat < KHAT_BAD_FROM:
            return "suspect"
        return "bad"


def default_tail_count(s: int) -> int:
    """floor(min(0.2*S, 3*sqrt(S))) tail values for a sample of size S."""
    if s < 25:
        raise BridgeDiagError("too few draws for tail fit")
    return int(math.floor(min(0.2 * s, 3.0 * math.sqrt(s))))


def fit_gpd_excesses(excesses, *, tail_count: int | None = None,
                     threshold_u: float = 0.0) -> GpdFit:
    """Shape/scale estimate for positive excesses over a threshold.

    Profile-posterior-mean estimator: candidate inverse-scale values b_m on a
    quantile-spaced grid of size ceil(30 + sqrt(M)) are weighted by profile
    likelihood; their weighted mean b* gives khat = mean(log(1 - b* E)) and
    sigma = -khat/b*. Signs follow the density (1/sigma)(1 + k x/sigma)^(-1/k-1),
    so khat > 0 means a heavy tail.
    """
    e = np.sort(np.asarray(excesses, dtype=float))
    m = e.size
    if m < 5:
        raise BridgeDiagError(f"need at least 5 excesses, got {m}")
    if not np.isfinite(e).all() or e[0] <= 0.0:
        raise BridgeDiagError("excesses must all be positive and finite")
    reported_count = m if tail_count is None else tail_count
    if e[0] == e[-1]:
        return GpdFit(khat=-1.0, sigma_hat=float(e[0]), tail_count=reported_count,
                      threshold_u=threshold_u, degenerate=True)

    grid = int(math.ceil(30.0 + math.sqrt(m)))
    j = np.arange(1, grid + 1, dtype=float)
    quartile = e[int(m / 4.0 + 0.5) - 1]
    b = 1.0 / e[-1] + (1.0 - np.sqrt(grid / (j - 0.5))) / (3.0 * quartile)
    with np.errstate(divide="ignore", invalid="ignore"):
        k_of_b = np.log1p(-b[:, None] * e).mean(axis=1)
        profile = m * (np.log(-b / k_of_b) - k_of_b - 1.0)
    profile[~np.isfinite(profile)] = -np.inf
    weights = 1.0 / np.exp(profile - profile[:, None]).sum(axis=1)
    weights /= weights.sum()
    b_star = float(np.sum(b * weights))
    if b_star == 0.0:
        return GpdFit(khat=0.0, sigma_hat=float(e.mean()), tail_count=reported_count,
                      threshold_u=threshold_u)
    khat = float(np.log1p(-b_star * e).mean())
    return GpdFit(khat=khat, sigma_hat=-khat / b_star, tail_count=reported_count,
                  threshold_u=threshold_u)


def khat_of_terms(log_terms, tail_count: int | None = None) -> GpdFit:
    """Tail shape of exp(log_terms), fitted to the top order statistics.

    The max is subtracted before exponentiating; khat is invariant to that
    (and to any additive shift of the log terms). -inf entries are exact
    zeros: they sit in the lower tail but still count toward the sample size
    that the default tail-count rule sees.
    """
    lt = np.asarray(log_terms, dtype=float)
    if lt.ndim != 1:
        raise BridgeDiagError(f"log terms must be 1-d, got shape {lt.shape}")
    if np.isnan(lt).any() or np.isposinf(lt).any():
        raise BridgeDiagError("log terms contain nan or +inf")
    s = lt.size
    finite = np.isfinite(lt)
    if tail_count is None:
        m = default_tail_count(s)
    else:
        m = tail_count
        if m < 5:
            raise BridgeDiagError("tail_count must be at least 5")
    if finite.sum() < m + 1:
        raise BridgeDiagError(
            f"too few finite terms for a {m}-value tail fit ({int(finite.sum())} finite)"
        )
    z = np.exp(lt[finite] - np.max(lt[finite]))
    z_desc = np.sort(z)[::-1]
    tail = z_desc[:m]
    u = z_desc[m]  # largest value below the fitted tail
    if tail[0] == u:
        return GpdFit(khat=-1.0, sigma_hat=float(max(u, np.finfo(float).tiny)),
                      tail_count=m, threshold_u=float(u), degenerate=True)
    positive = tail[tail > u] - u
    if positive.size < 5:
        return GpdFit(khat=-1.0, sigma_hat=float(positive.max() if positive.size else u),
                      tail_count=m, threshold_u=float(u), degenerate=True)
    return fit_gpd_excesses(positive, tail_count=m, threshold_u=float(u))


def khat_report(result: BridgeResult, tail_count: int | None = None) -> tuple[GpdFit, GpdFit]:
    """(numerator khat, denominator khat) of a bridge result's term vectors.

    The term vectors are positive multiples of the estimator's raw summands,
    and khat is scale invariant, so the fits apply to the summands themselves.
    """
    return (
        khat_of_terms(result.log_f2, tail_count),
        khat_of_terms(result.log_f1, tail_count),
    )
