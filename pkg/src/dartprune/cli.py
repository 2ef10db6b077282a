"""
dartprune command line

Subcommands: prune, compare, verify, flops, synth, bias, schema.

The JSON report goes to stdout (or --out); logs and errors go to stderr.
Errors are one JSON line ``{"code", "message"}``. Exit codes: 0 ok,
1 bound violated (verify), 2 bad input.
"""
import argparse
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from dartprune.analysis import BoundMode, LipschitzModel, flops_summary, overlap_stats, position_stats, verify_bounds
from dartprune.errors import BadArguments, DartError, MissingAttention, WrongAggregator
from dartprune.io import load_tokens, read_attention, read_tokens, write_tokens
from dartprune.logging_config import bind_context, clear_context, configure_logging, get_logger
from dartprune.metrics import write_metrics
from dartprune.models import (
    Aggregator,
    AuxFeatures,
    ModelDims,
    PivotKind,
    PivotSource,
    PivotStrategy,
    ReductionConfig,
    Report,
    RetentionResult,
    RunSummary,
    TokenMatrix,
    validate,
    validate_attention,
)
from dartprune.pruning import attention_received, dart_prune, importance_prune, random_prune, recalibration_bias
from dartprune.pruning.baselines import over_pool
from dartprune.pruning.dedup import prunable_indices
from dartprune.resource_limits import ResourceLimitError, ResourceValidator
from dartprune.settings import Settings
from dartprune.synth import gen_clustered, gen_oversmoothed
from dartprune.utils.json_utils import render_error, render_report

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2

STRATEGY_NAMES = [
    "random",
    "embed-l1-max", "embed-l1-min", "embed-l2-max", "embed-l2-min",
    "knorm-max", "knorm-min", "vnorm-max", "vnorm-min",
    "attn-max", "attn-min",
]


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of printing usage and exiting"""

    def error(self, message):
        raise BadArguments(message)


def _quota(text: str) -> Tuple[int, int]:
    try:
        visual, text_k = (int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"quota must look like VISUAL,TEXT, got {text!r}")
    return visual, text_k


def _reduction_args(parser: argparse.ArgumentParser, settings: Settings):
    parser.add_argument("--tokens", required=True, help="DTOK or .csv token file")
    parser.add_argument("--attn", help="DATT attention map")
    parser.add_argument("--keys", help="DTOK key rows (default: the token embeddings)")
    parser.add_argument("--values", help="DTOK value rows (default: the token embeddings)")
    size = parser.add_mutually_exclusive_group(required=True)
    size.add_argument("--ratio", type=float, help="Fraction of prunable tokens to remove")
    size.add_argument("--budget", type=int, help="Prunable tokens to keep")
    parser.add_argument("--pivots", type=int, default=8, help="Pivot count k")
    parser.add_argument("--strategy", default="knorm-max", choices=STRATEGY_NAMES)
    parser.add_argument("--aggregator", default="max", choices=[a.value for a in Aggregator])
    parser.add_argument("--seed", type=int, default=settings.default_seed)
    parser.add_argument("--quota", type=_quota, help="Pivots per modality as VISUAL,TEXT")
    parser.add_argument("--pivot-source", default="all", choices=[s.value for s in PivotSource])
    parser.add_argument("--per-pivot", action="store_true", help="Each pivot removes an equal share")
    parser.add_argument("--progressive", action="store_true", help="Kept tokens join the anchor set")
    parser.add_argument("--prune-text", action="store_true", help="Let text-tagged tokens be pruned")


def _common_args(parser: argparse.ArgumentParser):
    parser.add_argument("--metrics-out", help="Write Prometheus metrics to this textfile")
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Override DARTPRUNE_LOG_LEVEL",
    )
    parser.add_argument("--json-logs", action="store_true", help="Structured JSON logs on stderr")


def build_parser(settings: Optional[Settings] = None) -> argparse.ArgumentParser:
    settings = settings or Settings()
    parser = _Parser(prog="dartprune", description="Duplication-aware token reduction")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    prune = commands.add_parser("prune", help="Prune a token file")
    _reduction_args(prune, settings)
    prune.add_argument("--with-bounds", action="store_true", help="Also verify the general-mode bounds")
    prune.add_argument("--timing", action="store_true", help="Record pruning wall time in timing_ms")
    prune.add_argument("--out", help="Report path (default stdout)")

    compare = commands.add_parser("compare", help="Run two methods and report their overlap")
    _reduction_args(compare, settings)
    compare.add_argument(
        "--methods",
        nargs=2,
        required=True,
        metavar="SPEC",
        help="<strategy>[@seed], random-prune@SEED or importance",
    )
    compare.add_argument("--out", help="Report path (default stdout)")

    verify = commands.add_parser("verify", help="Prune, then check the distance and output bounds")
    _reduction_args(verify, settings)
    verify.add_argument("--mode", default="normalized", choices=[m.value for m in BoundMode])
    verify.add_argument("--lipschitz-dim", type=int, default=8, help="Output width of the Lipschitz map")
    verify.add_argument("--out", help="Report path (default stdout)")

    flops = commands.add_parser("flops", help="Theoretical FLOPs before and after pruning")
    defaults = ModelDims()
    flops.add_argument("--T", type=int, default=defaults.T)
    flops.add_argument("--d", type=int, default=defaults.d)
    flops.add_argument("--m", type=int, default=defaults.m)
    flops.add_argument("--L", type=int, default=defaults.L)
    flops.add_argument("--n", type=int, required=True)
    flops.add_argument("--n-hat", type=int, required=True)
    flops.add_argument("--text-tokens", type=int, help="Text tokens included in n (recorded only)")
    flops.add_argument("--out", help="Report path (default stdout)")

    synth = commands.add_parser("synth", help="Write a synthetic DTOK file")
    synth.add_argument("--kind", required=True, choices=["clustered", "oversmoothed"])
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--d", type=int, required=True)
    synth.add_argument("--clusters", type=int, default=3)
    synth.add_argument("--spread", type=float, default=0.05)
    synth.add_argument("--steps", type=int, default=1)
    synth.add_argument("--mix", type=float, default=0.3)
    synth.add_argument("--seed", type=int, default=settings.default_seed)
    synth.add_argument("--no-normalize", action="store_true")
    synth.add_argument("--out", required=True, help="DTOK destination")

    bias = commands.add_parser("bias", help="Score drift of static importance after pruning")
    bias.add_argument("--attn", required=True, help="DATT attention map")
    bias.add_argument("--budget", type=int, required=True)
    bias.add_argument("--samples", type=int, default=1000)
    bias.add_argument("--seed", type=int, default=settings.default_seed)
    bias.add_argument("--exhaustive", action="store_true", help="Enumerate every subset (small maps)")
    bias.add_argument("--out", help="Report path (default stdout)")

    commands.add_parser("schema", help="Print the report JSON schema")

    for sub in commands.choices.values():
        _common_args(sub)
    return parser


def _config(args) -> ReductionConfig:
    return ReductionConfig(
        budget=args.budget,
        ratio=args.ratio,
        pivot_count=args.pivots,
        pivot_strategy=PivotStrategy.parse(args.strategy),
        aggregator=Aggregator(args.aggregator),
        seed=args.seed,
        modality_quota=args.quota,
        pivot_source=PivotSource(args.pivot_source),
        per_pivot=args.per_pivot,
        progressive=args.progressive,
        prune_text=args.prune_text,
    )


def _load_inputs(args):
    tokens = validate(load_tokens(args.tokens))
    attn = read_attention(args.attn) if args.attn else None
    keys = read_tokens(args.keys).data if args.keys else None
    values = read_tokens(args.values).data if args.values else None
    logger.debug("inputs_loaded", n=tokens.n, d=tokens.d, memory=ResourceValidator.get_memory_stats())
    return tokens, attn, keys, values


def _aux_for(tokens: TokenMatrix, strategy: PivotStrategy, keys, values) -> AuxFeatures:
    """Missing key/value rows fall back to the embeddings themselves"""
    if strategy.kind == PivotKind.K_NORM and keys is None:
        logger.warning("keys_default_to_embeddings")
        keys = tokens.data
    if strategy.kind == PivotKind.V_NORM and values is None:
        logger.warning("values_default_to_embeddings")
        values = tokens.data
    return AuxFeatures(keys=keys, values=values)


def _config_echo(command: str, cfg: Optional[ReductionConfig] = None, **extra: Any) -> Dict[str, Any]:
    echo: Dict[str, Any] = {"command": command}
    if cfg is not None:
        echo.update(cfg.model_dump(mode="json"))
        echo["strategy"] = cfg.pivot_strategy.label
    echo.update(extra)
    return echo


def _run_dart(cfg: ReductionConfig, tokens, attn, keys, values) -> Tuple[RetentionResult, float]:
    aux = _aux_for(tokens, cfg.pivot_strategy, keys, values)
    start = time.perf_counter()
    result = dart_prune(tokens, aux, attn, cfg)
    return result, (time.perf_counter() - start) * 1000.0


def cmd_prune(args) -> Tuple[Report, int]:
    cfg = _config(args)
    if args.with_bounds and cfg.aggregator != Aggregator.MAX:
        raise WrongAggregator(
            f"--with-bounds needs the max aggregator, got {cfg.aggregator.value}",
            aggregator=cfg.aggregator.value,
        )
    tokens, attn, keys, values = _load_inputs(args)
    result, elapsed_ms = _run_dart(cfg, tokens, attn, keys, values)

    bounds = None
    if args.with_bounds:
        model = LipschitzModel.random(tokens.d, seed=cfg.seed)
        bounds = verify_bounds(tokens, result, model, BoundMode.GENERAL)

    report = Report(
        config=_config_echo("prune", cfg, n=tokens.n, d=tokens.d),
        retained=result.retained_list(),
        pivots=list(result.pivots.indices),
        tau=result.cut_threshold,
        eps_eff=result.effective_epsilon,
        flops=flops_summary(ModelDims(), tokens.n, int(result.retained.size)),
        bounds=bounds,
        position=position_stats(result, tokens.n, tokens.grid, tokens.modality),
        timing_ms=elapsed_ms if args.timing else None,
    )
    return report, EXIT_OK


def _run_method(
    spec: str, cfg: ReductionConfig, tokens, attn, keys, values, pool: np.ndarray, budget: int
) -> Tuple[RunSummary, RetentionResult]:
    """Baselines draw from the same prunable pool as DART and keep the exempt tokens"""
    name, _, seed_text = spec.partition("@")
    seed = int(seed_text) if seed_text else cfg.seed

    if name == "random-prune":
        result = over_pool(random_prune(int(pool.size), budget, seed), pool, tokens.n)
    elif name == "importance":
        if attn is None:
            raise MissingAttention("importance retention needs --attn")
        validate_attention(attn, tokens.n)
        result = over_pool(importance_prune(attention_received(attn)[pool], budget), pool, tokens.n)
    else:
        method_cfg = cfg.model_copy(update={"pivot_strategy": PivotStrategy.parse(name), "seed": seed})
        result, _ = _run_dart(method_cfg, tokens, attn, keys, values)

    return RunSummary(
        label=spec,
        method=result.method,
        retained=result.retained_list(),
        pivots=list(result.pivots.indices),
        tau=result.cut_threshold,
        eps_eff=result.effective_epsilon,
    ), result


def cmd_compare(args) -> Tuple[Report, int]:
    cfg = _config(args)
    tokens, attn, keys, values = _load_inputs(args)
    pool = prunable_indices(tokens, cfg.prune_text)
    budget = cfg.resolve_budget(int(pool.size), min(cfg.pivot_count, int(pool.size)))

    summaries, results = [], []
    for spec in args.methods:
        summary, result = _run_method(spec, cfg, tokens, attn, keys, values, pool, budget)
        summaries.append(summary)
        results.append(result)

    report = Report(
        config=_config_echo("compare", cfg, n=tokens.n, d=tokens.d, methods=list(args.methods), budget=budget),
        overlap=overlap_stats(results[0], results[1]),
        compared=summaries,
    )
    return report, EXIT_OK


def cmd_verify(args) -> Tuple[Report, int]:
    cfg = _config(args)
    tokens, attn, keys, values = _load_inputs(args)
    result, _ = _run_dart(cfg, tokens, attn, keys, values)
    model = LipschitzModel.random(tokens.d, d_out=args.lipschitz_dim, seed=cfg.seed)
    bounds = verify_bounds(tokens, result, model, BoundMode(args.mode), strict=False)

    report = Report(
        config=_config_echo("verify", cfg, n=tokens.n, d=tokens.d, mode=args.mode),
        retained=result.retained_list(),
        pivots=list(result.pivots.indices),
        tau=result.cut_threshold,
        eps_eff=result.effective_epsilon,
        bounds=bounds,
    )
    if not bounds.ok:
        logger.warning("bound_violated", mode=args.mode, worst_margin=bounds.worst_margin)
    return report, EXIT_OK if bounds.ok else EXIT_VIOLATION


def cmd_flops(args) -> Tuple[Report, int]:
    dims = ModelDims(T=args.T, d=args.d, m=args.m, L=args.L)
    summary = flops_summary(dims, args.n, args.n_hat, text_tokens=args.text_tokens)
    return Report(config=_config_echo("flops", **dims.model_dump()), flops=summary), EXIT_OK


def cmd_synth(args) -> Tuple[Report, int]:
    normalize = not args.no_normalize
    if args.kind == "clustered":
        tokens = gen_clustered(args.n, args.d, args.clusters, args.spread, args.seed, normalize)
        params = {"clusters": args.clusters, "spread": args.spread}
    else:
        tokens = gen_oversmoothed(args.n, args.d, args.steps, args.mix, args.seed, normalize)
        params = {"steps": args.steps, "mix": args.mix}
    write_tokens(args.out, tokens)

    echo = _config_echo("synth", kind=args.kind, n=args.n, d=args.d, seed=args.seed, normalize=normalize, **params)
    return Report(config=echo), EXIT_OK


def cmd_bias(args) -> Tuple[Report, int]:
    attn = read_attention(args.attn)
    estimate = recalibration_bias(attn, args.budget, args.samples, args.seed, exhaustive=args.exhaustive)
    echo = _config_echo(
        "bias", budget=args.budget, samples=args.samples, seed=args.seed, exhaustive=args.exhaustive
    )
    return Report(config=echo, bias=estimate), EXIT_OK


def report_schema() -> str:
    return resources.files("dartprune.schemas").joinpath("report.schema.json").read_text()


COMMANDS = {
    "prune": cmd_prune,
    "compare": cmd_compare,
    "verify": cmd_verify,
    "flops": cmd_flops,
    "synth": cmd_synth,
    "bias": cmd_bias,
}


def _emit_report(report: Report, out: Optional[str]):
    rendered = render_report(report)
    if out:
        Path(out).write_text(rendered)
    else:
        sys.stdout.write(rendered)


def _error_payload(exc: BaseException) -> Dict[str, Any]:
    if isinstance(exc, DartError):
        return exc.to_payload()
    if isinstance(exc, ValidationError):
        return {"code": "BadParams", "message": "; ".join(e["msg"] for e in exc.errors())}
    if isinstance(exc, ResourceLimitError):
        return {"code": "ResourceLimit", "message": str(exc)}
    if isinstance(exc, OSError):
        return {"code": "IOError", "message": str(exc)}
    return {"code": "BadParams", "message": str(exc)}


def main(argv: Optional[Sequence[str]] = None) -> int:
    failure: Optional[BaseException] = None
    exit_code = EXIT_OK
    settings: Optional[Settings] = None
    args = None
    try:
        settings = Settings.from_env()
        args = build_parser(settings).parse_args(argv)
        configure_logging(log_level=args.log_level or settings.log_level, json_logs=args.json_logs or settings.json_logs)
        bind_context(command=args.command)

        if args.command == "schema":
            sys.stdout.write(report_schema())
        else:
            report, exit_code = COMMANDS[args.command](args)
            _emit_report(report, getattr(args, "out", None) if args.command != "synth" else None)
    except (DartError, ValidationError, ResourceLimitError, OSError, ValueError) as exc:
        failure = exc

    metrics_path = getattr(args, "metrics_out", None) or (settings.metrics_path if settings else None)
    if metrics_path:
        write_metrics(str(metrics_path))
    clear_context()

    if failure is not None:
        logger.debug("command_failed", error=str(failure))
        sys.stderr.write(render_error(_error_payload(failure)) + "\n")
        return EXIT_INPUT
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
