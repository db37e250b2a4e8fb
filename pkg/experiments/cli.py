import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from shiftfusion.data import (
    SynthSpec,
    get_scheme,
    load_corpus,
    map_to_sentiment,
    synth_corpus,
    write_corpus,
)
from shiftfusion.errors import ConfigError, DivergenceError, ShiftFusionError
from shiftfusion.models import FusionEncoder
from shiftfusion.training import (
    LambdaMode,
    check_compatible,
    compute_metrics,
    load_checkpoint,
    predict,
)
from shiftfusion.utils import apply_overrides

from .ablation import GRIDS, custom_grid, named_grid, results_frame, run_grid, summary_table
from .config import (
    CONFIG_FILE_NAME,
    ExperimentConfig,
    describe_validation_error,
    list_presets,
    load_experiment_config,
    read_preset,
)
from .gradcheck import all_variants, check_model_gradients
from .runner import (
    run_experiment,
    write_confusion,
    write_embeddings,
    write_metrics,
    write_predictions,
)

load_dotenv()

logger = logging.getLogger("shiftfusion.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_GRADCHECK = 4

_STY_PASS_COLOR = "\033[38;5;46m"
_STY_FAIL_COLOR = "\033[38;5;196m"
_STY_RESET = "\033[0m"


class GradCheckFailed(ShiftFusionError):
    pass


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = list(args.set or [])
    if getattr(args, "progress", False):
        overrides.append("train.progress=true")
    config = load_experiment_config(args.config, args.preset, overrides)
    if getattr(args, "output_dir", None):
        config = config.model_copy(update={"output_dir": Path(args.output_dir)})
    return config


def cmd_train(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    summary, _ = run_experiment(config)
    print(summary.test.to_table())
    print(f"Artifacts written to {summary.output_dir}")
    return EXIT_OK


def _eval_corpus(args: argparse.Namespace, checkpoint_path: Path):
    if args.manifest:
        corpus = load_corpus(args.manifest)
        if args.sentiment:
            corpus = map_to_sentiment(corpus, get_scheme(args.sentiment, corpus.labels))
        return corpus
    if args.config or args.preset:
        config = load_experiment_config(args.config, args.preset, args.set or [])
    else:
        run_config = checkpoint_path.parent / CONFIG_FILE_NAME
        if not run_config.is_file():
            raise FileNotFoundError(
                f"no corpus given and no {CONFIG_FILE_NAME} next to {checkpoint_path}"
            )
        config = load_experiment_config(run_config, None, args.set or [])
    source = config.corpus
    if args.sentiment:
        source = source.model_copy(update={"sentiment": args.sentiment})
    return source.load()


def cmd_eval(args: argparse.Namespace) -> int:
    checkpoint_path = Path(args.checkpoint)
    checkpoint = load_checkpoint(checkpoint_path)
    corpus = _eval_corpus(args, checkpoint_path)
    check_compatible(checkpoint.model, corpus)

    train = checkpoint.header.train
    predictions = predict(
        checkpoint.model,
        corpus.split(args.split),
        args.batch_size or train.eval_batch_size,
        train.precision.dtype,
        with_embeddings=bool(args.embeddings),
    )
    report = compute_metrics(
        predictions.gold, predictions.preds, corpus.labels, predictions.shift_f1
    )
    print(report.to_table())

    output_dir = Path(args.output_dir) if args.output_dir else checkpoint_path.parent
    output_dir.mkdir(parents=True, exist_ok=True)
    write_metrics(
        {"split": args.split, "checkpoint": str(checkpoint_path), **report.model_dump(mode="json")},
        output_dir / f"eval_{args.split}.json",
    )
    write_confusion(report, output_dir / f"confusion_{args.split}.csv")
    if args.predictions:
        write_predictions(predictions, corpus.labels, args.predictions)
    if args.embeddings:
        write_embeddings(predictions, corpus.labels, args.embeddings)
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    base = _experiment_config(args)
    if args.grid_file:
        with open(args.grid_file, "r") as file:
            cells = custom_grid(json.load(file))
    else:
        cells = named_grid(args.grid, args.depth_target)
    output_root = Path(args.output_dir) if args.output_dir else base.resolved_output_dir()
    base = base.model_copy(update={"output_dir": None})

    results = run_grid(base, cells, output_root, args.repeats, args.workers)
    output_root.mkdir(parents=True, exist_ok=True)
    results_frame(results).to_csv(output_root / "ablation.csv", index=False)
    print(summary_table(results))
    failed = [r for r in results if r.status != "ok"]
    if failed:
        logger.warning(f"{len(failed)} of {len(results)} runs failed")
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    if not args.config and not args.preset:
        args.preset = "tiny"
    config = load_experiment_config(args.config, args.preset, args.set or [])
    if args.all_variants:
        variants = all_variants()
    else:
        variants = [
            (
                FusionEncoder(args.encoder) if args.encoder else config.encoder,
                LambdaMode(args.lambda_mode) if args.lambda_mode else config.objective.lambda_mode,
            )
        ]

    failures = []
    for encoder, mode in variants:
        report = check_model_gradients(
            config,
            encoder,
            mode,
            eps=args.eps,
            tolerance=args.tolerance,
            max_entries=args.max_entries or None,
            degenerate=args.degenerate,
        )
        color = _STY_PASS_COLOR if report.passed else _STY_FAIL_COLOR
        print(
            f"{color}{encoder.value} / {mode.value}: max relative error"
            f" {report.max_rel_error:.3e} (tolerance {report.tolerance:.0e}){_STY_RESET}"
        )
        if args.verbose or not report.passed:
            print(report.to_table())
        failures += [f"{encoder.value}/{mode.value}:{c.name}" for c in report.failures()]

    if failures:
        raise GradCheckFailed("gradient check failed for " + ", ".join(failures))
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    if args.spec:
        with open(args.spec, "r") as file:
            data = json.load(file)
    else:
        name = args.preset or "synthetic"
        data = read_preset(name).get("corpus", {}).get("synthetic")
        if data is None:
            raise ConfigError(f"preset {name!r} does not describe a synthetic corpus")
    try:
        data = apply_overrides(data, args.set or [])
        spec = SynthSpec.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid synthetic spec: {describe_validation_error(e)}") from e
    except ValueError as e:
        raise ConfigError(str(e)) from e
    manifest = write_corpus(synth_corpus(spec), args.out)
    print(f"Wrote {manifest}")
    return EXIT_OK


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", type=str, help="Experiment config JSON file.")
    source.add_argument("--preset", type=str, help=f"Built-in preset ({', '.join(list_presets())}).")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="Override a config field by dotted path; VALUE is parsed as JSON.",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shiftfusion",
        description="Train and evaluate multimodal emotion recognition models.",
    )
    parser.add_argument("--verbose", action="store_true", help="Debug logging.")
    parser.add_argument("--log-level", type=str, default=None)
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Train one model and write its artifacts.")
    _add_config_arguments(train)
    train.add_argument("--output-dir", type=str)
    train.add_argument("--progress", action="store_true", help="Show progress bars.")
    train.set_defaults(func=cmd_train)

    evaluate = commands.add_parser("eval", help="Evaluate a checkpoint on a corpus split.")
    evaluate.add_argument("--checkpoint", type=str, required=True)
    _add_config_arguments(evaluate)
    evaluate.add_argument("--manifest", type=str, help="Corpus manifest to evaluate on.")
    evaluate.add_argument("--split", type=str, default="test")
    evaluate.add_argument("--sentiment", type=str, help="Relabel to sentiment first (e.g. iemocap).")
    evaluate.add_argument("--batch-size", type=int)
    evaluate.add_argument("--output-dir", type=str)
    evaluate.add_argument("--predictions", type=str, help="Per-utterance prediction CSV.")
    evaluate.add_argument("--embeddings", type=str, help="Fused feature CSV.")
    evaluate.set_defaults(func=cmd_eval)

    ablate = commands.add_parser("ablate", help="Run a grid of training runs.")
    _add_config_arguments(ablate)
    grid = ablate.add_mutually_exclusive_group(required=True)
    grid.add_argument("--grid", choices=GRIDS)
    grid.add_argument("--grid-file", type=str, help="JSON object of dotted key -> list of values.")
    ablate.add_argument("--depth-target", choices=("unimodal", "crossmodal"), default="crossmodal")
    ablate.add_argument("--repeats", type=int, default=1)
    ablate.add_argument("--workers", type=int, default=1)
    ablate.add_argument("--output-dir", type=str)
    ablate.set_defaults(func=cmd_ablate)

    gradcheck = commands.add_parser("gradcheck", help="Finite-difference check of the objective.")
    _add_config_arguments(gradcheck)
    gradcheck.add_argument("--encoder", choices=[e.value for e in FusionEncoder])
    gradcheck.add_argument("--lambda-mode", choices=[m.value for m in LambdaMode])
    gradcheck.add_argument("--all-variants", action="store_true")
    gradcheck.add_argument("--eps", type=float, default=1e-6)
    gradcheck.add_argument("--tolerance", type=float, default=1e-4)
    gradcheck.add_argument(
        "--max-entries", type=int, default=16, help="Entries perturbed per tensor; 0 perturbs all."
    )
    gradcheck.add_argument(
        "--degenerate", action="store_true", help="Check a constant (zero) objective."
    )
    gradcheck.set_defaults(func=cmd_gradcheck)

    synth = commands.add_parser("synth", help="Write a synthetic corpus to disk.")
    spec = synth.add_mutually_exclusive_group()
    spec.add_argument("--spec", type=str, help="Synthetic spec JSON file.")
    spec.add_argument("--preset", type=str, help="Take the spec from a preset.")
    synth.add_argument("--set", action="append", metavar="KEY=VALUE")
    synth.add_argument("--out", type=str, required=True)
    synth.set_defaults(func=cmd_synth)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = "DEBUG" if args.verbose else (args.log_level or os.getenv("SHIFTFUSION_LOG_LEVEL", "INFO"))
    logging.basicConfig(level=level.upper())

    try:
        return args.func(args)
    except GradCheckFailed as e:
        logger.error(f"{_STY_FAIL_COLOR}{e}{_STY_RESET}")
        return EXIT_GRADCHECK
    except DivergenceError as e:
        logger.error(f"Training diverged: {e}")
        return EXIT_DIVERGENCE
    except (ShiftFusionError, ValueError, KeyError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
