"""Result JSON schema and run-artifact persistence for the CLI."""

from __future__ import annotations

import json

import numpy as np

from .bridge import BridgeResult
from .errors import BridgeDiagError
from .mcse import McseReport
from .pareto import GpdFit
from .proposal import Proposal

#: Stable key order of the success JSON emitted by ``estimate`` and ``diagnose``.
RESULT_JSON_KEYS = (
    "log_ml",
    "mcse_log",
    "mcse_rel_linear",
    "khat_numerator",
    "khat_denominator",
    "ess_denominator",
    "iterations",
    "converged",
    "S1",
    "S2",
    "tail_count_used",
    "jitter_applied",
    "seed",
)

ARTIFACT_FORMAT = "bridgediag-run/1"


def to_builtin(value):
    """Recursively convert numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return [to_builtin(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    return value


def result_json(
    result: BridgeResult,
    mcse: McseReport,
    khat_num: GpdFit,
    khat_den: GpdFit,
    *,
    jitter_applied: float,
    seed: int,
) -> dict:
    """The fixed-schema success payload; every key present, in pinned order."""
    payload = {
        "log_ml": result.log_ml,
        "mcse_log": mcse.mcse_log,
        "mcse_rel_linear": mcse.mcse_rel_linear,
        "khat_numerator": khat_num.khat,
        "khat_denominator": khat_den.khat,
        "ess_denominator": mcse.ess_den,
        "iterations": result.iterations,
        "converged": result.converged,
        "S1": result.s1_count,
        "S2": result.s2_count,
        "tail_count_used": khat_den.tail_count,
        "jitter_applied": jitter_applied,
        "seed": seed,
    }
    assert tuple(payload) == RESULT_JSON_KEYS
    return to_builtin(payload)


def dump_json(payload: dict) -> str:
    return json.dumps(to_builtin(payload), indent=2)


def save_run_artifact(path, *, result: BridgeResult, proposal: Proposal, seed: int,
                      tail_count: int | None) -> None:
    """Persist everything ``diagnose`` needs to reproduce the diagnostics."""
    payload = {
        "format": ARTIFACT_FORMAT,
        "seed": seed,
        "tail_count": tail_count,
        "bridge": result.to_json_dict(include_terms=True),
        "proposal": proposal.to_json_dict(),
    }
    with open(path, "w") as fh:
        json.dump(to_builtin(payload), fh)
        fh.write("\n")


def load_run_artifact(path) -> tuple[BridgeResult, Proposal, int, int | None]:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != ARTIFACT_FORMAT:
        raise BridgeDiagError(f"not a saved run artifact: {path}")
    result = BridgeResult.from_json_dict(payload["bridge"])
    proposal = Proposal.from_json_dict(payload["proposal"])
    tail = payload["tail_count"]
    return result, proposal, int(payload["seed"]), None if tail is None else int(tail)
