"""Command line interface.

Subcommands: ``estimate`` (one run + diagnostics as JSON), ``calibrate``
(repeated independent runs, per-run CSV plus a summary), ``reshuffle`` (the
block-reshuffling bootstrap), ``diagnose`` (re-derive diagnostics from a saved
run artifact), and ``plan`` (draw-budget arithmetic).

Exit codes: 0 on success (including non-converged runs, which are warnings),
1 on estimation errors, 2 on usage errors. Every command is bit-reproducible
for a fixed ``--seed`` regardless of the worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import shlex
import sys
import warnings

from . import __version__
from .bridge import BridgeConfig, estimate_log_ml
from .draws import read_draws_csv
from .errors import BridgeDiagError
from .experiments import (
    difference_mcse,
    planning_helper,
    run_calibration,
    write_calibration_csv,
)
from .external import ExternalEvaluator, ExternalModel
from .mcse import mcse_of_bridge
from .numerics import RngStream
from .pareto import khat_report
from .report import dump_json, load_run_artifact, result_json, save_run_artifact
from .reshuffle import DEFAULT_REPLICATES, reshuffle_estimates
from .samplers import sample_exact_chains, sampler_ar1, sampler_rwm
from .targets import ConjugateLinRegModel, ConjugateNormalModel, DifficultyDialModel

#: Fixed stream for generating the built-in models' synthetic datasets, so a
#: model name always denotes the same instance regardless of --seed.
_BUILTIN_DATA_STREAM = RngStream(20090103)

BUILTIN_MODELS = ("conjugate-normal", "conjugate-linreg", "difficulty-dial")


class UsageError(Exception):
    pass


def build_builtin_model(name: str, *, dim: int | None, dof: float):
    if name == "conjugate-normal":
        y = _BUILTIN_DATA_STREAM.substream(1).generator().normal(1.0, 1.0, size=20)
        return ConjugateNormalModel.from_data(y, sigma=1.0, tau=2.0)
    if name == "conjugate-linreg":
        k = 5 if dim is None else dim
        return ConjugateLinRegModel.simulate(
            _BUILTIN_DATA_STREAM.substream(2), n=100, k=k, sigma=1.0, prior_sd=1.0
        )
    if name == "difficulty-dial":
        return DifficultyDialModel(dim=2 if dim is None else dim, dof=dof)
    raise UsageError(f"unknown model {name!r}")


def _add_run_flags(p: argparse.ArgumentParser, *, with_draws_source: bool = True) -> None:
    if with_draws_source:
        p.add_argument("--model", choices=BUILTIN_MODELS, help="built-in target model")
        p.add_argument("--evaluator", metavar="PATH",
                       help="external evaluator command (newline-delimited JSON protocol)")
        p.add_argument("--draws", metavar="CSV", help="posterior draws file")
        p.add_argument("--no-chain-cols", action="store_true",
                       help="read --draws as a bare numeric matrix (one chain)")
        p.add_argument("--sampler", choices=("exact", "ar1", "rwm"), default="exact",
                       help="synthetic sampler used when --draws is absent")
        p.add_argument("--rho", type=float, default=0.5, help="AR(1) lag-1 autocorrelation")
        p.add_argument("--step-scale", type=float, default=None,
                       help="random-walk step sd (default 2.4/sqrt(dim))")
        p.add_argument("--draws-total", type=int, default=4000,
                       help="total draws across chains when sampling")
        p.add_argument("--chains", type=int, default=4)
        p.add_argument("--dim", type=int, default=None,
                       help="dimension for conjugate-linreg / difficulty-dial")
        p.add_argument("--dof", type=float, default=3.0, help="difficulty-dial tail dof")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--tail-count", type=int, default=None,
                   help="override the tail size used by the khat diagnostics")
    p.add_argument("--out", metavar="PATH", help="also write the primary output here")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--save-config", metavar="PATH",
                   help="persist the resolved run configuration for `run --config`")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgediag",
        description="Bridge-sampling log marginal likelihood estimation with "
                    "MCSE, Pareto tail, and block-reshuffling diagnostics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="one estimate with its full diagnostics")
    _add_run_flags(p_est)
    p_est.add_argument("--save-result", metavar="PATH",
                       help="persist the run artifact for later `diagnose`")

    p_cal = sub.add_parser("calibrate", help="repeated independent runs vs their MCSE")
    _add_run_flags(p_cal)
    p_cal.add_argument("--repeats", type=int, default=200)
    p_cal.add_argument("--replicates", type=int, default=None,
                       help="per-repeat reshuffle replicates (omit to skip)")
    p_cal.add_argument("--block-len", type=int, default=None)
    p_cal.add_argument("--plot", metavar="PNG", help="render the calibration figure")

    p_res = sub.add_parser("reshuffle", help="block-reshuffling bootstrap of one run")
    _add_run_flags(p_res)
    p_res.add_argument("--replicates", type=int, default=DEFAULT_REPLICATES)
    p_res.add_argument("--block-len", type=int, default=None)
    p_res.add_argument("--plot", metavar="PNG", help="render the replicate histogram")

    p_diag = sub.add_parser("diagnose", help="recompute diagnostics from a saved run")
    p_diag.add_argument("--result", required=True, metavar="PATH",
                        help="artifact written by estimate --save-result")
    p_diag.add_argument("--tail-count", type=int, default=None)
    p_diag.add_argument("--out", metavar="PATH")
    p_diag.add_argument("--format", choices=("json", "csv"), default="json")

    p_plan = sub.add_parser("plan", help="draw-budget arithmetic for a target MCSE")
    p_plan.add_argument("--current-mcse", type=float, required=True)
    p_plan.add_argument("--target-mcse", type=float, required=True)

    p_run = sub.add_parser("run", help="replay a configuration saved with --save-config")
    p_run.add_argument("--config", required=True, metavar="PATH")
    return parser


CONFIG_FORMAT = "bridgediag-config/1"


def _maybe_save_config(args) -> None:
    """Persist the fully resolved flag set; `run --config` replays it bit-for-bit."""
    if getattr(args, "save_config", None) is None:
        return
    payload = {k: v for k, v in vars(args).items() if k not in ("save_config", "command")}
    with open(args.save_config, "w") as fh:
        json.dump({"format": CONFIG_FORMAT, "command": args.command, "args": payload}, fh,
                  indent=2)
        fh.write("\n")


def cmd_run(args) -> int:
    with open(args.config) as fh:
        payload = json.load(fh)
    if payload.get("format") != CONFIG_FORMAT:
        raise BridgeDiagError(f"not a saved run configuration: {args.config}")
    replay = argparse.Namespace(command=payload["command"], save_config=None,
                                **payload["args"])
    return _COMMANDS[payload["command"]](replay)


def _bridge_config(args) -> BridgeConfig:
    return BridgeConfig(tol=args.tol, max_iter=args.max_iter)


def _resolve_model_and_draws(args, rng: RngStream):
    """(model, draws, evaluator-or-None) per the flag combination rules."""
    evaluator = None
    if args.draws is not None:
        draws = read_draws_csv(args.draws, no_chain_cols=args.no_chain_cols)
        if args.evaluator is not None:
            evaluator = ExternalEvaluator(shlex.split(args.evaluator))
            model = ExternalModel(draws.dim, evaluator)
        elif args.model is not None:
            model = build_builtin_model(args.model, dim=args.dim, dof=args.dof)
            if model.dim != draws.dim:
                raise BridgeDiagError(
                    f"model dim {model.dim} != draws dim {draws.dim}"
                )
        else:
            raise UsageError("either --model or --evaluator is required")
        return model, draws, evaluator

    if args.model is None:
        raise UsageError("either --model or --evaluator is required"
                         " (an --evaluator also needs --draws)")
    model = build_builtin_model(args.model, dim=args.dim, dof=args.dof)
    if args.chains < 1 or args.draws_total < 4 * args.chains:
        raise UsageError("--draws-total must allow at least 4 iterations per chain")
    iters = args.draws_total // args.chains
    if args.sampler == "exact":
        draws = sample_exact_chains(model, rng, args.chains, iters)
    elif args.sampler == "ar1":
        draws = sampler_ar1(model, args.rho, args.chains, iters, rng)
    else:
        step = args.step_scale if args.step_scale is not None else 2.4 / math.sqrt(model.dim)
        draws, _ = sampler_rwm(model, step, args.chains, iters, rng)
    return model, draws, None


def _emit(payload: dict, args) -> None:
    if args.format == "csv":
        import io

        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(payload.keys())
        writer.writerow(["" if v is None else v for v in payload.values()])
        text = buf.getvalue()
    else:
        text = dump_json(payload) + "\n"
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def cmd_estimate(args) -> int:
    _maybe_save_config(args)
    rng = RngStream(args.seed)
    model, draws, evaluator = _resolve_model_and_draws(args, rng.substream(1))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result, prop, _ = estimate_log_ml(model, draws, _bridge_config(args), rng.substream(2))
        report = mcse_of_bridge(result)
        khat_num, khat_den = khat_report(result, args.tail_count)
    finally:
        if evaluator is not None:
            evaluator.close()
    if not result.converged:
        print("warning: iteration hit max-iter without converging", file=sys.stderr)
    payload = result_json(result, report, khat_num, khat_den,
                          jitter_applied=prop.jitter_applied, seed=args.seed)
    _emit(payload, args)
    if args.save_result:
        save_run_artifact(args.save_result, result=result, proposal=prop,
                          seed=args.seed, tail_count=args.tail_count)
    return 0


def _sampler_callable(args):
    if args.sampler == "exact":
        return lambda model, rng: sample_exact_chains(
            model, rng, args.chains, args.draws_total // args.chains
        )
    if args.sampler == "ar1":
        return lambda model, rng: sampler_ar1(
            model, args.rho, args.chains, args.draws_total // args.chains, rng
        )

    def rwm(model, rng):
        step = args.step_scale if args.step_scale is not None else 2.4 / math.sqrt(model.dim)
        return sampler_rwm(model, step, args.chains, args.draws_total // args.chains, rng)[0]

    return rwm


def cmd_calibrate(args) -> int:
    _maybe_save_config(args)
    if args.repeats < 10:
        raise UsageError("--repeats must be at least 10")
    if args.model is None:
        raise UsageError("calibrate needs a built-in --model with a sampler")
    model = build_builtin_model(args.model, dim=args.dim, dof=args.dof)
    rows, summary = run_calibration(
        model,
        _sampler_callable(args),
        args.repeats,
        _bridge_config(args),
        RngStream(args.seed),
        tail_count=args.tail_count,
        reshuffle_replicates=args.replicates,
        block_len=args.block_len,
    )
    summary = {"model": args.model, "seed": args.seed, **summary}
    if args.out:
        write_calibration_csv(args.out, rows)
    if args.plot:
        from .plots import render_calibration_figure

        render_calibration_figure(rows, summary, args.plot)
    sys.stdout.write(dump_json(summary) + "\n")
    return 0


def cmd_reshuffle(args) -> int:
    _maybe_save_config(args)
    rng = RngStream(args.seed)
    model, draws, evaluator = _resolve_model_and_draws(args, rng.substream(1))
    try:
        report = reshuffle_estimates(
            model, draws, args.replicates, args.block_len, _bridge_config(args), rng
        )
    finally:
        if evaluator is not None:
            evaluator.close()
    payload = {"seed": args.seed, **report.to_json_dict()}
    sys.stdout.write(dump_json(payload) + "\n")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replicate", "log_ml", "converged", "iterations"])
            for i, (est, conv, iters) in enumerate(
                zip(report.estimates, report.converged, report.iterations), start=1
            ):
                writer.writerow([i, f"{est:.17g}", "true" if conv else "false", iters])
    if args.plot:
        from .plots import render_reshuffle_figure

        render_reshuffle_figure(report, args.plot)
    return 0


def cmd_diagnose(args) -> int:
    result, prop, seed, saved_tail = load_run_artifact(args.result)
    tail = args.tail_count if args.tail_count is not None else saved_tail
    report = mcse_of_bridge(result)
    khat_num, khat_den = khat_report(result, tail)
    payload = result_json(result, report, khat_num, khat_den,
                          jitter_applied=prop.jitter_applied, seed=seed)
    _emit(payload, args)
    return 0


def cmd_plan(args) -> int:
    advice = planning_helper(args.current_mcse, args.target_mcse)
    payload = {
        "multiplier": advice.multiplier,
        "note": advice.note,
        "difference_mcse_equal_runs": difference_mcse(args.current_mcse, args.current_mcse),
    }
    sys.stdout.write(dump_json(payload) + "\n")
    return 0


_COMMANDS = {
    "estimate": cmd_estimate,
    "calibrate": cmd_calibrate,
    "reshuffle": cmd_reshuffle,
    "diagnose": cmd_diagnose,
    "plan": cmd_plan,
    "run": cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        parser.exit(2, f"{parser.prog}: error: {exc}\n")
    except BridgeDiagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
