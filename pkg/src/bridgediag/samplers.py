"""Synthetic samplers for calibration: exact iid, AR(1)-correlated, random walk.

These stand in for real MCMC at desk scale. The AR(1) sampler produces chains
whose marginal law is exactly the posterior but with a controllable lag-1
autocorrelation, which is what exercises the ESS adjustment and the block
rationale of the reshuffle diagnostic.
"""

from __future__ import annotations

import numpy as np

from .draws import DrawsMatrix
from .errors import BridgeDiagError
from .numerics import RngStream
from .targets import TargetModel


def sample_exact_chains(model: TargetModel, rng: RngStream, chains: int, iters: int) -> DrawsMatrix:
    """chains x iters iid exact-posterior draws, one substream per chain."""
    data = np.stack(
        [model.sample_posterior(rng.substream(c), iters) for c in range(chains)]
    )
    return DrawsMatrix(data)


def sampler_ar1(model: TargetModel, rho: float, chains: int, iters: int,
                rng: RngStream) -> DrawsMatrix:
    """Stationary AR(1) chains whose marginal equals the exact Gaussian posterior.

    Each coordinate of the whitened process follows z_t = rho*z_{t-1} +
    sqrt(1-rho^2)*eta_t from a stationary start, so the lag-1 autocorrelation
    of every parameter is exactly rho and the marginal law is untouched.
    """
    if not 0.0 <= rho < 1.0:
        raise BridgeDiagError(f"rho must be in [0, 1), got {rho}")
    mean, chol = model.posterior_gaussian()
    d = chol.dim
    innovation_sd = np.sqrt(1.0 - rho * rho)
    data = np.empty((chains, iters, d))
    for c in range(chains):
        gen = rng.substream(c).generator()
        eta = gen.standard_normal((iters, d))
        z = np.empty((iters, d))
        z[0] = eta[0]
        for t in range(1, iters):
            z[t] = rho * z[t - 1] + innovation_sd * eta[t]
        data[c] = mean + z @ chol.lower.T
    return DrawsMatrix(data)


def sampler_rwm(model: TargetModel, step_scale: float, chains: int, iters: int,
                rng: RngStream) -> tuple[DrawsMatrix, np.ndarray]:
    """Gaussian random-walk Metropolis; returns (draws, per-chain acceptance).

    Runs 2*iters steps per chain and discards the first half as warm-up.
    Chains start from an exact posterior draw when the model has one, else
    from a standard normal point.
    """
    if step_scale <= 0.0:
        raise BridgeDiagError(f"step_scale must be positive, got {step_scale}")
    d = model.dim
    total = 2 * iters
    gen = rng.substream(0).generator()
    try:
        current = model.sample_posterior(rng.substream(1), chains)
    except BridgeDiagError:
        current = gen.standard_normal((chains, d))
    current_logp = model.log_unnorm_batch(current)
    steps = step_scale * gen.standard_normal((total, chains, d))
    log_unif = np.log(gen.uniform(size=(total, chains)))
    data = np.empty((chains, total, d))
    accepted = np.zeros(chains, dtype=int)
    for t in range(total):
        candidate = current + steps[t]
        cand_logp = model.log_unnorm_batch(candidate)
        take = cand_logp - current_logp > log_unif[t]
        current = np.where(take[:, None], candidate, current)
        current_logp = np.where(take, cand_logp, current_logp)
        accepted += take
        data[:, t, :] = current
    acceptance = accepted / total
    if np.any(accepted == 0):
        chain = int(np.argmin(accepted))
        raise BridgeDiagError(
            f"zero acceptance in chain {chain}; try a smaller step_scale than {step_scale}"
        )
    return DrawsMatrix(data[:, iters:, :]), acceptance
