"""Command-line front end.

Every subcommand is a thin wrapper over the library; anything scripted
here can be done in Python with the same names. Exit code is nonzero
when any requested work fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .decoding import read_predictions, write_predictions
from .errors import SegglossError
from .harness import (
    ExperimentSpec,
    learning_curve,
    report,
    run,
    saturation_grid,
)
from .igt import (
    LANGUAGE_NAMES,
    extract_word_examples,
    load_split,
    parse_igt_corpus,
    split_unique_words,
    write_split,
)
from .metrics import evaluate_pairs
from .model import ModelConfig, load_checkpoint
from .synth import FixtureClient, LiveClient, generate, load_cache, plan_prompts
from .training import MULTITASK, SINGLE_TASK, TrainConfig, evaluate_on, train


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model")
    group.add_argument("--encoder-layers", type=int, default=4)
    group.add_argument("--decoder-layers", type=int, default=4)
    group.add_argument("--attention-heads", type=int, default=4)
    group.add_argument("--embedding-dim", type=int, default=256)
    group.add_argument("--hidden-dim", type=int, default=1024)
    group.add_argument("--dropout", type=float, default=0.1)
    group.add_argument("--attention-dropout", type=float, default=0.1)
    group.add_argument("--max-positions", type=int, default=128)


def _model_config(args) -> ModelConfig:
    return ModelConfig(
        encoder_layers=args.encoder_layers,
        decoder_layers=args.decoder_layers,
        attention_heads=args.attention_heads,
        embedding_dim=args.embedding_dim,
        hidden_dim=args.hidden_dim,
        dropout=args.dropout,
        attention_dropout=args.attention_dropout,
        max_positions=args.max_positions,
    )


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training")
    group.add_argument("--mode", choices=[MULTITASK, SINGLE_TASK], default=MULTITASK)
    group.add_argument("--seg-loss-weight", type=float, default=0.9)
    group.add_argument("--learning-rate", type=float, default=0.001)
    group.add_argument("--batch-size", type=int, default=400)
    group.add_argument("--batch-unit", choices=["tokens", "sequences"], default="tokens")
    group.add_argument("--epochs", type=int, default=150)
    group.add_argument("--beam-width", type=int, default=5)
    group.add_argument("--seed", type=int, default=0)


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        seg_loss_weight=args.seg_loss_weight,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        batch_unit=args.batch_unit,
        max_epochs=args.epochs,
        beam_width_for_dev=args.beam_width,
        seed=args.seed,
        mode=args.mode,
    )


def _apply_config_file(args: argparse.Namespace) -> argparse.Namespace:
    """Values from a JSON file fill flags still at their defaults; flags
    given explicitly on the command line win."""
    if not getattr(args, "config", None):
        return args
    overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
    explicit = {a.lstrip("-").replace("-", "_").split("=")[0] for a in sys.argv[1:] if a.startswith("--")}
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise SegglossError(f"unknown config key {key!r}")
        if attr not in explicit:
            setattr(args, attr, value)
    return args


def cmd_prepare_data(args) -> int:
    result = parse_igt_corpus(args.input, strict=args.strict)
    examples = extract_word_examples(result.entries, language=args.language)
    if result.issues and not args.quiet:
        print(f"skipped or flagged {len(result.issues)} problem lines", file=sys.stderr)
    split = split_unique_words(examples, seed=args.seed)
    out_dir = Path(args.out_dir) / args.language
    write_split(split, out_dir, language=args.language)
    print(
        f"{args.language}: {len(split.train)} train / {len(split.dev)} dev / {len(split.test)} test"
        f" -> {out_dir}"
    )
    return 0


def cmd_train(args) -> int:
    split, _ = load_split(Path(args.data_dir) / args.language)
    result = train(
        split.train,
        split.dev,
        _model_config(args),
        _train_config(args),
        log_path=args.log,
        checkpoint_path=args.checkpoint,
        quiet=args.quiet,
    )
    best = result.best_dev_accuracy
    print(
        f"trained {args.epochs} epochs; best epoch {result.best_epoch}"
        + (f" (dev accuracy {best:.2f})" if best is not None else "")
    )
    if args.checkpoint:
        print(f"checkpoint -> {args.checkpoint}")
    return 0


def cmd_evaluate(args) -> int:
    if args.predictions:
        gold_rows = read_predictions(args.gold)
        pred_rows = read_predictions(args.predictions)
        if len(gold_rows) != len(pred_rows):
            raise SegglossError("gold and prediction files have different lengths")
        pairs = [(g[1], p[1]) for g, p in zip(gold_rows, pred_rows)]
        result = evaluate_pairs(pairs)
    else:
        if not args.checkpoint:
            raise SegglossError("need either --predictions or --checkpoint")
        model, vocabs, _ = load_checkpoint(args.checkpoint)
        split, _ = load_split(Path(args.data_dir) / args.language)
        examples = getattr(split, args.split)
        result, predictions = evaluate_on(model, vocabs, examples, beam_width=args.beam_width)
        if args.write_predictions:
            write_predictions(args.write_predictions, predictions)
    print(json.dumps(result.to_dict(), indent=2))
    return 0


def cmd_generate_synthetic(args) -> int:
    split, manifest = load_split(Path(args.data_dir) / args.language)
    # fixture directories carry the plan that produced them; explicit
    # flags still win, but unset ones must match or no hash will resolve
    params: dict = {}
    if args.fixtures:
        params_path = Path(args.fixtures) / "params.json"
        if params_path.exists():
            params = json.loads(params_path.read_text(encoding="utf-8"))
    language_name = params.get("language", LANGUAGE_NAMES.get(args.language, args.language))
    n_morphemes = params.get("n_morphemes", (2, 5))
    jobs, inventory = plan_prompts(
        split.train,
        n_words=args.words_per_prompt or params.get("n_words", 3),
        n_morphemes=(
            args.min_morphemes or n_morphemes[0],
            args.max_morphemes or n_morphemes[1],
        ),
        language=language_name,
        max_stems=args.max_stems or params.get("max_stems"),
    )
    if args.fixtures:
        client = FixtureClient(args.fixtures)
    else:
        if not args.endpoint or not args.model_name:
            raise SegglossError("live generation needs --endpoint and --model-name (or use --fixtures)")
        client = LiveClient(args.endpoint, args.model_name, temperature=args.temperature)
    records = generate(client, jobs, inventory, split.train, budget=args.budget, cache_path=args.cache)
    by_status: dict[str, int] = {}
    for record in records:
        by_status[record.status] = by_status.get(record.status, 0) + 1
    accepted = by_status.get("accepted", 0)
    print(f"cache {args.cache}: {accepted} accepted of {len(records)} records")
    for status in sorted(by_status):
        print(f"  {status}: {by_status[status]}")
    return 0


def cmd_sweep_lambda(args) -> int:
    from .training import sweep_lambda

    split, _ = load_split(Path(args.data_dir) / args.language)
    weights = [float(w) for w in args.weights.split(",") if w]
    rows = sweep_lambda(
        split.train,
        split.dev,
        split.test,
        _model_config(args),
        _train_config(args),
        weights,
        include_single_task=args.include_single_task,
    )
    text = json.dumps(rows, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _spec_kwargs(args) -> dict:
    return {
        "seed": args.seed,
        "max_epochs": args.epochs,
        "beam_width": args.beam_width,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
        "model": _model_config(args),
    }


def cmd_run(args) -> int:
    spec = ExperimentSpec(
        language=args.language,
        mode=args.mode,
        seg_loss_weight=args.seg_loss_weight,
        train_fraction=args.train_fraction,
        synth_ratio=args.synth_ratio,
        **_spec_kwargs(args),
    )
    row = run(
        spec,
        args.data_dir,
        args.results_dir,
        synth_cache=args.synth_cache,
        force=args.force,
        quiet=args.quiet,
    )
    print(json.dumps(row.to_dict(), indent=2))
    return 0


def cmd_learning_curve(args) -> int:
    fractions = [float(f) for f in args.fractions.split(",") if f]
    modes = args.modes.split(",") if args.modes else [MULTITASK, SINGLE_TASK]
    rows = learning_curve(
        args.language,
        args.data_dir,
        args.results_dir,
        fractions=fractions,
        modes=modes,
        force=args.force,
        **_spec_kwargs(args),
    )
    for row in rows:
        spec = row.spec
        print(
            f"{spec['language']} {spec['mode']:>11} fraction {spec['train_fraction']}: "
            f"ACC {row.word_accuracy:.2f} F1 {row.morpheme_f1:.2f} ED {row.edit_distance_sum}"
        )
    print(f"curve data -> {Path(args.results_dir) / f'learning_curve_{args.language}.csv'}")
    return 0


def cmd_saturation_grid(args) -> int:
    ratios = [float(r) for r in args.ratios.split(",") if r]
    modes = args.modes.split(",") if args.modes else [MULTITASK, SINGLE_TASK]
    caches = {}
    for pair in args.synth_cache or []:
        if "=" not in pair:
            raise SegglossError(f"--synth-cache expects language=path, got {pair!r}")
        language, path = pair.split("=", 1)
        caches[language] = path
    table = saturation_grid(
        args.languages.split(","),
        args.data_dir,
        args.results_dir,
        synth_caches=caches,
        ratios=ratios,
        modes=modes,
        force=args.force,
        **_spec_kwargs(args),
    )
    for row in table:
        print(
            f"{row['language']:>6} {row['mode']:>11} ratio {row['synth_ratio']}: "
            f"ACC {row['word_accuracy']:.2f} F1 {row['morpheme_f1']:.2f}"
        )
    return 0


def cmd_report(args) -> int:
    text = report(args.results_dir, out_path=args.out)
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seggloss", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare-data", help="parse an IGT corpus and write 6:2:2 unique-word splits")
    p.add_argument("--input", required=True, help="IGT corpus file")
    p.add_argument("--language", required=True, help="language code (e.g. lez, git)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true", help="abort on any malformed entry")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_prepare_data)

    p = sub.add_parser("train", help="train one model on a prepared split")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--log", help="JSONL per-epoch training log")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--quiet", action="store_true")
    _add_train_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score predictions or a checkpoint on a split")
    p.add_argument("--checkpoint")
    p.add_argument("--data-dir")
    p.add_argument("--language")
    p.add_argument("--split", choices=["train", "dev", "test"], default="test")
    p.add_argument("--beam-width", type=int, default=5)
    p.add_argument("--predictions", help="prediction file to score instead of decoding")
    p.add_argument("--gold", help="gold file when scoring a prediction file")
    p.add_argument("--write-predictions", help="save decoded predictions here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate-synthetic", help="create synthetic training examples via an LLM")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--budget", type=int, required=True, help="accepted examples to aim for")
    p.add_argument("--cache", required=True, help="JSONL cache consulted before new requests")
    p.add_argument("--fixtures", help="directory of offline fixture responses")
    p.add_argument("--endpoint", help="chat-completions URL for live generation")
    p.add_argument("--model-name")
    p.add_argument("--temperature", type=float, default=0.7)
    p.add_argument("--words-per-prompt", type=int, help="default 3, or the fixture plan's value")
    p.add_argument("--min-morphemes", type=int, help="default 2, or the fixture plan's value")
    p.add_argument("--max-morphemes", type=int, help="default 5, or the fixture plan's value")
    p.add_argument("--max-stems", type=int, help="default all, or the fixture plan's value")
    p.set_defaults(func=cmd_generate_synthetic)

    p = sub.add_parser("sweep-lambda", help="train and evaluate across loss weights")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--weights", required=True, help="comma-separated, e.g. 0.5,0.7,0.9")
    p.add_argument("--include-single-task", action="store_true")
    p.add_argument("--out", help="write the sweep table to this JSON file")
    p.add_argument("--config", help="JSON file of flag defaults")
    _add_train_flags(p)
    _add_model_flags(p)
    p.set_defaults(func=cmd_sweep_lambda)

    p = sub.add_parser("run", help="run a single experiment spec against the ledger")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--results-dir", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--mode", choices=[MULTITASK, SINGLE_TASK], default=MULTITASK)
    p.add_argument("--seg-loss-weight", type=float, default=0.9)
    p.add_argument("--train-fraction", type=float, default=1.0)
    p.add_argument("--synth-ratio", type=float, default=0.0)
    p.add_argument("--synth-cache")
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--beam-width", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=400)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true", help="re-run even if the ledger has this spec")
    p.add_argument("--quiet", action="store_true")
    _add_model_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("learning-curve", help="train at nested train fractions and emit curve data")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--results-dir", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--fractions", default="0.25,0.5,0.75,1.0")
    p.add_argument("--modes", default=f"{MULTITASK},{SINGLE_TASK}")
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--beam-width", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=400)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true")
    _add_model_flags(p)
    p.set_defaults(func=cmd_learning_curve)

    p = sub.add_parser("saturation-grid", help="gold + synthetic mixes over a ratio grid")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--results-dir", required=True)
    p.add_argument("--languages", required=True, help="comma-separated language codes")
    p.add_argument("--ratios", default="0,0.25,0.5,0.75")
    p.add_argument("--modes", default=f"{MULTITASK},{SINGLE_TASK}")
    p.add_argument("--synth-cache", action="append", help="language=path, repeatable")
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--beam-width", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=400)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true")
    _add_model_flags(p)
    p.set_defaults(func=cmd_saturation_grid)

    p = sub.add_parser("report", help="render the results ledger as a metrics table")
    p.add_argument("--results-dir", required=True)
    p.add_argument("--out", help="also write the table to this file")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config_file(args)
        return args.func(args)
    except (SegglossError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
