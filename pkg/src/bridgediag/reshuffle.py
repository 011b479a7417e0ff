"""Block-reshuffling bootstrap over the whole estimation pipeline.

A single-run MCSE conditions on the half-split and the fitted proposal. Each
reshuffle replicate permutes autocorrelation-preserving blocks of the draws,
then re-runs split, fit, sampling, and iteration from scratch, so the spread
of the replicate estimates captures those algorithm stages too. Because the
reshuffled sets overlap, the spread is expected to be slightly optimistic
compared to genuinely re-running MCMC.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bridge import BridgeConfig, estimate_log_ml
from .draws import DrawsMatrix, block_reshuffle, default_block_len, make_block_plan
from .errors import BridgeDiagError
from .numerics import RngStream
from .parallel import ordered_map
from .pareto import GpdFit, khat_of_terms
from .targets import TargetModel

#: Replicate count giving a relative SD-of-SD around 10% at desk scale.
DEFAULT_REPLICATES = 50


@dataclass(frozen=True)
class ReshuffleReport:
    """Replicate log estimates, their spread, and the tail shape across them."""

    estimates: np.ndarray
    sd_log: float
    khat_estimates: GpdFit | None
    khat_low_confidence: bool
    n_nonconverged: int
    n_failed: int
    block_len: int
    replicates: int
    iterations: np.ndarray
    converged: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "replicates": self.replicates,
            "block_len": self.block_len,
            "sd_log": self.sd_log,
            "n_nonconverged": self.n_nonconverged,
            "n_failed": self.n_failed,
            "khat_estimates": None if self.khat_estimates is None else self.khat_estimates.khat,
            "khat_low_confidence": self.khat_low_confidence,
            "estimates": self.estimates.tolist(),
        }


def _replicate_tail_count(r: int) -> int:
    return max(5, int(math.floor(min(0.2 * r, 3.0 * math.sqrt(r)))))


def reshuffle_estimates(
    model: TargetModel,
    draws: DrawsMatrix,
    replicates: int = DEFAULT_REPLICATES,
    block_len: int | None = None,
    config: BridgeConfig = BridgeConfig(),
    rng: RngStream = RngStream(0),
) -> ReshuffleReport:
    """Run ``replicates`` reshuffle-and-re-estimate passes; replicate r uses
    the stream with stream_id == r, so results are independent of scheduling.

    Hard failures of single replicates are recorded and excluded; more than
    20% of them aborts with "reshuffle unstable".
    """
    if replicates < 2:
        raise BridgeDiagError("need at least 2 replicates")
    if block_len is None:
        block_len = default_block_len(draws.iters)
    plan = make_block_plan(draws, block_len)

    def one(index: int):
        stream = rng.replicate(index + 1)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                shuffled = block_reshuffle(stream.substream(0), draws, plan)
                result, _, _ = estimate_log_ml(model, shuffled, config, stream.substream(1))
            return result.log_ml, result.converged, result.iterations
        except BridgeDiagError:
            return None

    outcomes = ordered_map(one, replicates)
    kept = [o for o in outcomes if o is not None]
    n_failed = replicates - len(kept)
    if n_failed > 0.2 * replicates:
        raise BridgeDiagError(f"reshuffle unstable: {n_failed}/{replicates} replicates failed")

    estimates = np.array([o[0] for o in kept])
    converged = np.array([o[1] for o in kept], dtype=bool)
    iterations = np.array([o[2] for o in kept], dtype=int)
    sd_log = float(np.std(estimates, ddof=1))

    tail = _replicate_tail_count(estimates.size)
    low_confidence = estimates.size < 25
    khat: GpdFit | None = None
    if estimates.size >= tail + 1:
        try:
            khat = khat_of_terms(estimates, tail_count=tail)
        except BridgeDiagError:
            khat = None
    return ReshuffleReport(
        estimates=estimates,
        sd_log=sd_log,
        khat_estimates=khat,
        khat_low_confidence=low_confidence,
        n_nonconverged=int(np.sum(~converged)),
        n_failed=n_failed,
        block_len=block_len,
        replicates=replicates,
        iterations=iterations,
        converged=converged,
    )


def multi_run_sd(
    model: TargetModel,
    sampler,
    repeats: int,
    config: BridgeConfig = BridgeConfig(),
    rng: RngStream = RngStream(0),
) -> tuple[float, np.ndarray]:
    """Ground-truth spread: fresh draws and a fresh full pipeline per repeat.

    ``sampler`` is any callable (model, rng) -> DrawsMatrix. This is the
    calibration oracle the single-run MCSE and the reshuffle SD are judged
    against; it is deliberately not a production diagnostic.
    """
    if repeats < 10:
        raise BridgeDiagError("need at least 10 repeats")

    def one(index: int) -> float:
        stream = rng.substream(index)
        draws = sampler(model, stream.substream(0))
        result, _, _ = estimate_log_ml(model, draws, config, stream.substream(1))
        return result.log_ml

    estimates = np.array(ordered_map(one, repeats))
    return float(np.std(estimates, ddof=1)), estimates
