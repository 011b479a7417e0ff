"""Calibration harness and draw-budget planning.

Calibration runs many independent end-to-end estimates of the same model and
compares the spread of the estimates (the truth about this pipeline's
variability) with the single-run MCSE and tail diagnostics each run reported
about itself.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bridge import BridgeConfig, estimate_log_ml
from .errors import BridgeDiagError
from .mcse import mcse_of_bridge
from .numerics import RngStream
from .parallel import ordered_map
from .pareto import khat_report
from .reshuffle import reshuffle_estimates
from .targets import TargetModel

CALIBRATION_COLUMNS = (
    "repeat_id",
    "log_ml",
    "mcse_log",
    "khat_num",
    "khat_den",
    "ess_den",
    "reshuffle_sd",
    "converged",
)


@dataclass(frozen=True)
class CalibrationRow:
    """One end-to-end run's estimate and self-reported diagnostics."""

    repeat_id: int
    log_ml: float
    mcse_log: float
    khat_num: float
    khat_den: float
    ess_den: float
    reshuffle_sd: float | None
    converged: bool


def run_calibration(
    model: TargetModel,
    sampler,
    repeats: int,
    config: BridgeConfig = BridgeConfig(),
    rng: RngStream = RngStream(0),
    *,
    tail_count: int | None = None,
    reshuffle_replicates: int | None = None,
    block_len: int | None = None,
) -> tuple[list[CalibrationRow], dict]:
    """``repeats`` independent estimates with fresh draws from ``sampler``.

    ``sampler`` is a callable (model, rng) -> DrawsMatrix. The summary holds
    the empirical SD of the estimates alongside the mean self-reported MCSE;
    their ratio is the calibration statistic of interest.
    """
    if repeats < 10:
        raise BridgeDiagError("need at least 10 repeats")

    def one(index: int) -> CalibrationRow:
        stream = rng.substream(index)
        draws = sampler(model, stream.substream(0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result, _, _ = estimate_log_ml(model, draws, config, stream.substream(1))
            report = mcse_of_bridge(result)
            khat_num, khat_den = khat_report(result, tail_count)
            reshuffle_sd = None
            if reshuffle_replicates is not None:
                reshuffle_sd = reshuffle_estimates(
                    model, draws, reshuffle_replicates, block_len, config, stream.substream(2)
                ).sd_log
        return CalibrationRow(
            repeat_id=index,
            log_ml=result.log_ml,
            mcse_log=report.mcse_log,
            khat_num=khat_num.khat,
            khat_den=khat_den.khat,
            ess_den=report.ess_den,
            reshuffle_sd=reshuffle_sd,
            converged=result.converged,
        )

    rows = ordered_map(one, repeats)
    estimates = np.array([r.log_ml for r in rows])
    mean_mcse = float(np.mean([r.mcse_log for r in rows]))
    sd = float(np.std(estimates, ddof=1))
    summary = {
        "repeats": repeats,
        "empirical_sd_log_ml": sd,
        "mean_mcse_log": mean_mcse,
        "mcse_to_sd_ratio": mean_mcse / sd if sd > 0.0 else None,
        "mean_khat_num": float(np.mean([r.khat_num for r in rows])),
        "mean_khat_den": float(np.mean([r.khat_den for r in rows])),
        "mean_ess_den": float(np.mean([r.ess_den for r in rows])),
        "n_nonconverged": int(sum(not r.converged for r in rows)),
        "mean_reshuffle_sd": (
            float(np.mean([r.reshuffle_sd for r in rows]))
            if reshuffle_replicates is not None
            else None
        ),
    }
    return rows, summary


def write_calibration_csv(path, rows: list[CalibrationRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CALIBRATION_COLUMNS)
        for r in rows:
            writer.writerow([
                r.repeat_id,
                f"{r.log_ml:.17g}",
                f"{r.mcse_log:.17g}",
                f"{r.khat_num:.17g}",
                f"{r.khat_den:.17g}",
                f"{r.ess_den:.17g}",
                "" if r.reshuffle_sd is None else f"{r.reshuffle_sd:.17g}",
                "true" if r.converged else "false",
            ])


def read_calibration_csv(path) -> list[CalibrationRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CALIBRATION_COLUMNS:
            raise BridgeDiagError(f"unexpected calibration header: {header}")
        rows = []
        for rec in reader:
            rows.append(CalibrationRow(
                repeat_id=int(rec[0]),
                log_ml=float(rec[1]),
                mcse_log=float(rec[2]),
                khat_num=float(rec[3]),
                khat_den=float(rec[4]),
                ess_den=float(rec[5]),
                reshuffle_sd=None if rec[6] == "" else float(rec[6]),
                converged=rec[7] == "true",
            ))
    return rows


@dataclass(frozen=True)
class PlanningAdvice:
    """Suggested draw multiplier for a target accuracy, with its caveats."""

    multiplier: int
    note: str


def planning_helper(current_mcse: float, target_mcse: float) -> PlanningAdvice:
    """How many times more posterior draws a target MCSE calls for.

    The estimator variance is finite, so the MCSE shrinks with the square
    root of the draw count: halving it takes four times the draws. The
    multiplier is the square-law factor rounded up.
    """
    if current_mcse <= 0.0 or target_mcse <= 0.0:
        raise BridgeDiagError("MCSE values must be positive")
    raw = (current_mcse / target_mcse) ** 2
    multiplier = int(math.ceil(raw))
    note = (
        f"at least {multiplier}x draws (square-law factor {raw:g} rounded up); "
        "more may be needed if the pre-asymptotic convergence rate is lower, "
        "e.g. when a tail bound is far from the observed summands"
    )
    return PlanningAdvice(multiplier=multiplier, note=note)


def difference_mcse(mcse_a: float, mcse_b: float) -> float:
    """MCSE of a difference of two independent log marginal likelihood estimates.

    Variances add, so for two equal MCSEs m the difference MCSE is sqrt(2)*m.
    """
    return float(math.hypot(mcse_a, mcse_b))
