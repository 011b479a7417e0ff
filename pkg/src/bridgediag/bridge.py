"""The bridge estimator: density ratios, the fixed-point iteration, the pipeline.

All arithmetic runs in a shifted log space. With lam the median finite log
ratio at the posterior draws, the iteration works on exp(log_l - lam), which
keeps both the mixture terms and the running estimate representable even when
the raw densities would under- or overflow by hundreds of orders of magnitude.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .draws import DrawsMatrix, HalfSplit, split_halves
from .errors import BridgeDiagError
from .numerics import RngStream, log_mean_exp
from .proposal import Proposal, fit_mvn_proposal, log_g_at, sample_proposal
from .targets import TargetModel


@dataclass(frozen=True)
class BridgeConfig:
    """Iteration controls. s2_count overrides the number of proposal draws
    (default: equal to the posterior-half count, the variance derivation's
    assumption)."""

    tol: float = 1e-10
    max_iter: int = 1000
    s2_count: int | None = None

    def __post_init__(self):
        if self.tol <= 0.0 or self.max_iter < 1:
            raise BridgeDiagError("tol must be > 0 and max_iter >= 1")


@dataclass(frozen=True)
class LogRatios:
    """log ratios of unnormalized posterior to proposal density.

    ``log_l1`` is evaluated at the posterior draws (length S1), ``log_l2``
    at the proposal draws (length S2). Entries are finite or -inf.
    """

    log_l1: np.ndarray
    log_l2: np.ndarray

    def __post_init__(self):
        for name in ("log_l1", "log_l2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1 or arr.size < 2:
                raise BridgeDiagError(f"{name} must be 1-d with at least 2 entries")
            if np.isnan(arr).any() or np.isposinf(arr).any():
                raise BridgeDiagError(f"{name} contains nan or +inf")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not np.isfinite(self.log_l1).any():
            raise BridgeDiagError("no posterior draw has positive density ratio")


@dataclass(frozen=True)
class BridgeResult:
    """Converged estimate plus the per-term quantities diagnostics consume.

    ``log_f2`` are the numerator summands l2/(s1*l2 + s2*p_hat) and ``log_f1``
    the denominator summands 1/(s1*l1 + s2*p_hat), both at the final estimate;
    ``chain_layout`` records the (chains, iters) provenance of the f1 terms so
    the autocorrelation-aware variance can regroup them.
    """

    log_ml: float
    iterations: int
    converged: bool
    log_f2: np.ndarray
    log_f1: np.ndarray
    chain_layout: tuple[int, int]
    s1_weight: float = field(default=0.5)
    s2_weight: float = field(default=0.5)

    @property
    def s1_count(self) -> int:
        return self.log_f1.size

    @property
    def s2_count(self) -> int:
        return self.log_f2.size

    def to_json_dict(self, *, include_terms: bool = True) -> dict:
        payload = {
            "log_ml": self.log_ml,
            "iterations": self.iterations,
            "converged": self.converged,
            "s1_weight": self.s1_weight,
            "s2_weight": self.s2_weight,
            "chain_layout": list(self.chain_layout),
        }
        if include_terms:
            payload["log_f2"] = self.log_f2.tolist()
            payload["log_f1"] = self.log_f1.tolist()
        return payload

    @classmethod
    def from_json_dict(cls, payload: dict) -> "BridgeResult":
        return cls(
            log_ml=float(payload["log_ml"]),
            iterations=int(payload["iterations"]),
            converged=bool(payload["converged"]),
            log_f2=np.asarray(payload["log_f2"], dtype=float),
            log_f1=np.asarray(payload["log_f1"], dtype=float),
            chain_layout=tuple(payload["chain_layout"]),
            s1_weight=float(payload["s1_weight"]),
            s2_weight=float(payload["s2_weight"]),
        )


def compute_log_ratios(
    model: TargetModel,
    proposal: Proposal,
    est_half_points: np.ndarray,
    proposal_points: np.ndarray,
    proposal_log_g: np.ndarray,
) -> LogRatios:
    """log(q/g) at the posterior draws and at the proposal draws.

    q is the unnormalized posterior density. A -inf entry means the point has
    zero posterior density, which the estimator handles as an exact zero term.
    """
    log_q1 = np.asarray(model.log_unnorm_batch(est_half_points), dtype=float)
    log_q2 = np.asarray(model.log_unnorm_batch(proposal_points), dtype=float)
    for name, arr in (("posterior", log_q1), ("proposal", log_q2)):
        bad = np.flatnonzero(np.isnan(arr))
        if bad.size:
            raise BridgeDiagError(f"evaluator returned nan at {name} draw {bad[0]}")
    return LogRatios(
        log_l1=log_q1 - log_g_at(proposal, est_half_points),
        log_l2=log_q2 - proposal_log_g,
    )


def bridge_iterate(
    ratios: LogRatios,
    config: BridgeConfig = BridgeConfig(),
    *,
    chain_layout: tuple[int, int] | None = None,
) -> BridgeResult:
    """Run the fixed-point refinement of the estimate to convergence.

    Works on l = exp(log_l - lam) with lam the median finite log_l1 and a unit
    starting value in the shifted space; terminates when the relative update
    drops below ``tol``. Hitting ``max_iter`` is a warning, not an error: the
    result is still returned with ``converged=False`` so the reshuffling
    diagnostic can quantify the damage.
    """
    log_l1, log_l2 = ratios.log_l1, ratios.log_l2
    s1_count, s2_count = log_l1.size, log_l2.size
    if not np.isfinite(log_l2).any():
        raise BridgeDiagError("proposal disjoint from target")
    s1 = s1_count / (s1_count + s2_count)
    s2 = s2_count / (s1_count + s2_count)

    lam = float(np.median(log_l1[np.isfinite(log_l1)]))
    with np.errstate(over="ignore"):
        l1t = np.exp(log_l1 - lam)
        l2t = np.exp(log_l2 - lam)
    l2t_inf = np.isposinf(l2t)

    r = 1.0  # unit start in the shifted space keeps the whole map shift-equivariant
    converged = False
    iterations = 0
    for _ in range(config.max_iter):
        iterations += 1
        with np.errstate(over="ignore", invalid="ignore"):
            num_terms = np.where(l2t_inf, 1.0 / s1, l2t / (s1 * l2t + s2 * r))
            den_terms = 1.0 / (s1 * l1t + s2 * r)
        r_new = float(num_terms.mean() / den_terms.mean())
        if not np.isfinite(r_new) or r_new <= 0.0:
            raise BridgeDiagError(
                f"iteration produced a non-positive update (r={r_new}) at step {iterations}"
            )
        if abs(r_new - r) / r_new < config.tol:
            r = r_new
            converged = True
            break
        r = r_new
    if not converged:
        warnings.warn(
            f"bridge iteration did not converge within {config.max_iter} steps",
            stacklevel=2,
        )

    log_ml = float(np.log(r) + lam)
    log_s1, log_s2 = float(np.log(s1)), float(np.log(s2))
    # softplus forms keep the construction bounds exact in floating point:
    # log_f2 <= -log(s1), log_f1 <= -(log(s2) + log_ml). A -inf ratio falls
    # through to the correct limit (zero numerator term, 1/(s2*p_hat) denominator).
    log_f2 = -log_s1 - np.logaddexp(0.0, (log_s2 + log_ml) - (log_s1 + log_l2))
    log_f1 = -(log_s2 + log_ml) - np.logaddexp(0.0, (log_s1 + log_l1) - (log_s2 + log_ml))

    layout = chain_layout if chain_layout is not None else (1, s1_count)
    if layout[0] * layout[1] != s1_count:
        raise BridgeDiagError(f"chain layout {layout} does not match {s1_count} terms")
    return BridgeResult(
        log_ml=log_ml,
        iterations=iterations,
        converged=converged,
        log_f2=log_f2,
        log_f1=log_f1,
        chain_layout=layout,
        s1_weight=s1,
        s2_weight=s2,
    )


def estimate_log_ml(
    model: TargetModel,
    draws: DrawsMatrix,
    config: BridgeConfig = BridgeConfig(),
    rng: RngStream = RngStream(0),
) -> tuple[BridgeResult, Proposal, HalfSplit]:
    """Full pipeline: split, fit the proposal, sample it, build ratios, iterate.

    Deterministic given (draws, rng). Returns every artifact the downstream
    diagnostics need: the per-term result, the fitted proposal, and the split.
    """
    if model.dim != draws.dim:
        raise BridgeDiagError(f"model dim {model.dim} != draws dim {draws.dim}")
    split = split_halves(draws)
    prop = fit_mvn_proposal(split.fit_half)
    est_points = split.estimation_half.pooled()
    s2_count = config.s2_count if config.s2_count is not None else est_points.shape[0]
    prop_points, prop_log_g = sample_proposal(rng.substream(1), prop, s2_count)
    ratios = compute_log_ratios(model, prop, est_points, prop_points, prop_log_g)
    layout = (split.estimation_half.chains, split.estimation_half.iters)
    result = bridge_iterate(ratios, config, chain_layout=layout)
    return result, prop, split


def check_self_consistency(result: BridgeResult) -> float:
    """Residual of the fixed point: mean-exp(log_f2) / mean-exp(log_f1) vs log_ml."""
    return log_mean_exp(result.log_f2) - log_mean_exp(result.log_f1) - result.log_ml
