"""Command-line harness.

Subcommands: train, eval, predict, gradcheck, experiment, synth. Exit codes
are stable so scripts can branch on them:

  0  success
  2  usage errors (bad flags, missing files, malformed predict input)
  3  data errors (corpus / vector-file / checkpoint contents)
  4  numeric failures (training diverged, gradient check failed,
     every experiment cell failed)

All commands are deterministic given their flags and --seed; the only
nondeterministic outputs are wall-clock timing fields.
"""

import argparse
import json
import sys
from pathlib import Path

from .corpus import CLASS_NAMES, class_to_label, make_instance, parse_corpus
from .embeddings import (
    Vocabulary,
    assemble_table,
    load_pretrained,
    random_table,
    read_vector_file,
)
from .errors import (
    CheckpointError,
    ConsistencyError,
    FormatError,
    ToolkitError,
    TrainingDiverged,
    ValidationError,
)
from .evaluation import evaluate
from .gradcheck import check_gradients, random_case
from .models import (
    COMBINE_MODES,
    VARIANTS,
    init_params,
    load_params,
    predict,
    save_params,
)
from .synthetic import write_corpus_files
from .training import CLIP_MODES, TrainConfig, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

DTYPES = ("float64", "float32")


def _dtype(name):
    import numpy as np
    return np.float64 if name == "float64" else np.float32


def _build_vocabulary(corpora, lowercase=True):
    return Vocabulary.build(
        (inst.tokens for instances in corpora for inst in instances),
        lowercase=lowercase)


def _assemble_model(args, train_instances, test_instances):
    vocabulary = _build_vocabulary([train_instances, test_instances])
    trainable = args.trainable_embeddings
    if args.embeddings:
        table = load_pretrained(args.embeddings, vocabulary, args.seed,
                                trainable=trainable, dtype=_dtype(args.dtype))
    else:
        if not args.dim:
            raise ValidationError("--dim is required when no --embeddings file is given")
        table = random_table(vocabulary, args.dim, args.seed,
                             trainable=trainable, dtype=_dtype(args.dtype))
    hidden = args.hidden or table.dim
    return init_params(args.variant, hidden, 3, args.seed, table, vocabulary,
                       combine=args.combine)


def cmd_train(args) -> int:
    train_instances = parse_corpus(args.train)
    test_instances = parse_corpus(args.test) if args.test else []
    params = _assemble_model(args, train_instances, test_instances)
    config = TrainConfig(epochs=args.epochs, learning_rate=args.lr,
                         clip_threshold=args.clip, clip_mode=args.clip_mode,
                         seed=args.seed)
    params, log = train(params, train_instances, test_instances, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    checkpoint = out / "model.ckpt"
    log_path = out / "train_log.jsonl"
    save_params(params, checkpoint)
    log.save(log_path)
    for record in log:
        print(record.to_json())
    final = log[-1]
    if final.test_accuracy is not None:
        print(f"final test accuracy {final.test_accuracy:.4f}  "
              f"macro-F1 {final.test_macro_f1:.4f}")
    print(f"checkpoint written to {checkpoint}")
    print(f"log written to {log_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    params = load_params(args.checkpoint)
    instances = parse_corpus(args.corpus)
    predictions = [predict(params, inst).predicted_class for inst in instances]
    golds = [inst.gold_class for inst in instances]
    report = evaluate(predictions, golds, num_classes=params.num_classes)
    print(report.to_text())
    return EXIT_OK


def cmd_predict(args) -> int:
    params = load_params(args.checkpoint)
    # label 0 is a placeholder; prediction never reads it
    instance = make_instance(args.sentence.split(), args.target.split(), 0)
    prediction = predict(params, instance)
    cls = prediction.predicted_class
    print(f"predicted class: {CLASS_NAMES[cls]} (label {class_to_label(cls)})")
    for i, name in enumerate(CLASS_NAMES):
        print(f"  p({name}) = {prediction.probabilities.item(i):.6f}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    params, example, gold = random_case(args.variant, args.dim, args.seed)
    report = check_gradients(params, example, gold, eps=args.eps,
                             tolerance=args.tolerance, corrupt=args.corrupt)
    print(report.to_text())
    return EXIT_OK if report.passed else EXIT_NUMERIC


def _experiment_cells(spec):
    for variant in spec["variants"]:
        for emb in spec["embeddings"]:
            for seed in spec["seeds"]:
                yield variant, emb, seed


def cmd_experiment(args) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON ({exc})", path=args.spec) from None
    for key in ("train", "test", "variants", "embeddings", "seeds", "epochs"):
        if key not in spec:
            raise ValidationError(f"experiment spec is missing {key!r}")
    if not (spec["variants"] and spec["embeddings"] and spec["seeds"]):
        raise ValidationError("experiment grid is empty")
    for variant in spec["variants"]:
        if variant not in VARIANTS:
            raise ValidationError(f"unknown variant {variant!r}")

    train_instances = parse_corpus(spec["train"])
    test_instances = parse_corpus(spec["test"])
    vocabulary = _build_vocabulary([train_instances, test_instances])
    parsed_files = {}  # path -> (dim, vectors); parse each file once
    trainable = spec.get("trainable_embeddings", True)
    dtype = _dtype(spec.get("dtype", "float64"))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for variant, emb, seed in _experiment_cells(spec):
        emb_label = emb.get("path") or f"random-{emb.get('dim')}d"
        cell = {"variant": variant, "embeddings": emb_label, "seed": seed}
        try:
            if "path" in emb:
                if emb["path"] not in parsed_files:
                    parsed_files[emb["path"]] = read_vector_file(emb["path"])
                dim, vectors = parsed_files[emb["path"]]
                table = assemble_table(dim, vectors, vocabulary, seed,
                                       trainable=trainable, dtype=dtype)
            else:
                table = random_table(vocabulary, int(emb["dim"]), seed,
                                     trainable=trainable, dtype=dtype)
            hidden = spec.get("hidden") or table.dim
            params = init_params(variant, hidden, 3, seed, table, vocabulary,
                                 combine=spec.get("combine", "concat"))
            config = TrainConfig(
                epochs=spec["epochs"],
                learning_rate=spec.get("lr", 0.01),
                clip_threshold=spec.get("clip", 200.0),
                clip_mode=spec.get("clip_mode", "norm-clip"),
                seed=seed)
            _, log = train(params, train_instances, test_instances, config)
            final = log[-1]
            cell.update(
                test_accuracy=final.test_accuracy,
                test_macro_f1=final.test_macro_f1,
                seconds_per_epoch=sum(r.seconds for r in log) / len(log))
        except ToolkitError as exc:
            cell["error"] = str(exc)
        results.append(cell)

    results_path = out / "results.jsonl"
    with open(results_path, "w", encoding="utf-8") as fh:
        for cell in results:
            fh.write(json.dumps(cell, sort_keys=True) + "\n")

    print(f"{'variant':<14}{'embeddings':<22}{'seed':<6}"
          f"{'accuracy':<10}{'macro_f1':<10}{'sec/epoch':<10}")
    for cell in results:
        if "error" in cell:
            print(f"{cell['variant']:<14}{cell['embeddings']:<22}"
                  f"{cell['seed']:<6}error: {cell['error']}")
        else:
            print(f"{cell['variant']:<14}{cell['embeddings']:<22}"
                  f"{cell['seed']:<6}{cell['test_accuracy']:<10.4f}"
                  f"{cell['test_macro_f1']:<10.4f}"
                  f"{cell['seconds_per_epoch']:<10.2f}")
    print(f"results written to {results_path}")
    if all("error" in cell for cell in results):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_synth(args) -> int:
    train_path, test_path, vectors_path = write_corpus_files(
        args.out, args.sentences, args.seed, args.dim)
    print(f"train corpus: {train_path}")
    print(f"test corpus: {test_path}")
    print(f"vectors: {vectors_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdsent",
        description="Train and evaluate target-dependent sentiment classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    p.add_argument("--train", required=True, help="training corpus path")
    p.add_argument("--test", help="test corpus path (metrics per epoch)")
    p.add_argument("--variant", choices=VARIANTS, default="td-lstm")
    p.add_argument("--embeddings", help="pretrained vector file")
    p.add_argument("--dim", type=int, help="dim for random vectors when no file is given")
    p.add_argument("--hidden", type=int, help="hidden size (default: embedding dim)")
    p.add_argument("--combine", choices=COMBINE_MODES, default="concat")
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--clip", type=float, default=200.0)
    p.add_argument("--clip-mode", choices=CLIP_MODES, default="norm-clip")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dtype", choices=DTYPES, default="float64")
    p.add_argument("--trainable-embeddings", action=argparse.BooleanOptionalAction,
                   default=True,
                   help="update word vectors during training (default: yes)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one sentence/target pair")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sentence", required=True,
                   help="tokens with the target as $T$")
    p.add_argument("--target", required=True, help="target tokens")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gradcheck",
                       help="compare analytic gradients with finite differences")
    p.add_argument("--variant", choices=VARIANTS, default="td-lstm")
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--corrupt", action="store_true",
                   help=argparse.SUPPRESS)  # negative control for tests
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("experiment", help="run a grid from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--sentences", type=int, default=1000)
    p.add_argument("--dim", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (FormatError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, ConsistencyError, FileNotFoundError,
            IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
