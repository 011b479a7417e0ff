"""The multivariate normal proposal: fitted from draws, sampled, evaluated."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .draws import DrawsMatrix
from .errors import BridgeDiagError
from .numerics import CholFactor, RngStream, cholesky_with_jitter, mvn_logpdf, mvn_sample

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class Proposal:
    """Normalized multivariate normal g(theta) with a Cholesky covariance factor."""

    mean: np.ndarray
    chol: CholFactor
    log_norm_const: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).copy()
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)

    @property
    def dim(self) -> int:
        return self.chol.dim

    @property
    def jitter_applied(self) -> float:
        return self.chol.jitter_applied

    def logpdf(self, points):
        return mvn_logpdf(points, self.mean, self.chol)

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "mean": self.mean.tolist(),
            "chol_lower_row_major": self.chol.lower[np.tril_indices(self.dim)].tolist(),
            "jitter_applied": self.chol.jitter_applied,
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "Proposal":
        dim = int(payload["dim"])
        lower = np.zeros((dim, dim))
        lower[np.tril_indices(dim)] = payload["chol_lower_row_major"]
        chol = CholFactor(dim, lower, jitter_applied=float(payload["jitter_applied"]))
        return _from_chol(np.asarray(payload["mean"], dtype=float), chol)


def _from_chol(mean: np.ndarray, chol: CholFactor) -> Proposal:
    log_norm = -0.5 * chol.dim * _LOG_2PI - 0.5 * chol.log_det_cov()
    return Proposal(mean=mean, chol=chol, log_norm_const=log_norm)


def fit_mvn_proposal(fit_half: DrawsMatrix) -> Proposal:
    """Pooled sample mean and covariance (n-1 denominator) of the fit half.

    The pooled moments, not per-chain ones, are used because the proposal
    should approximate the full posterior mass.
    """
    pts = fit_half.pooled()
    n, d = pts.shape
    if n <= d:
        raise BridgeDiagError("insufficient draws for covariance")
    mean = pts.mean(axis=0)
    cov = np.cov(pts, rowvar=False, ddof=1)
    if d == 1:
        cov = np.array([[float(cov)]])
    chol = cholesky_with_jitter(cov)
    return _from_chol(mean, chol)


def sample_proposal(rng: RngStream, proposal: Proposal, s2: int):
    """s2 iid proposal draws with their log densities; deterministic per stream."""
    if s2 < 2:
        raise BridgeDiagError("need at least 2 proposal draws")
    points = mvn_sample(rng, proposal.mean, proposal.chol, s2)
    return points, proposal.logpdf(points)


def log_g_at(proposal: Proposal, points):
    """Element-wise log proposal density."""
    return proposal.logpdf(points)
