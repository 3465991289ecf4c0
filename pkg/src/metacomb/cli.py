"""Command-line entry point: ``metacomb <subcommand> ...``.

Stages communicate through files only. Typical run::

    metacomb generate --output data            # synthetic data + data/pipeline.json
    metacomb train-combiner --config data/pipeline.json
    metacomb train-thresholds --config data/pipeline.json
    metacomb evaluate --config data/pipeline.json
    metacomb evaluate --config data/pipeline.json --with-tm
    metacomb verify-theorem --config data/pipeline.json

Set ``METACOMB_LOG`` (DEBUG, INFO, WARNING, ...) to control logging.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from . import synth
from .bounds import POSITIVE
from .data_io import dumps, load_json, save_json
from .errors import MetacombError, ParameterError
from .pipeline import (
    PipelineConfig,
    describe_weights,
    run_evaluate,
    run_predict,
    run_train_combiner,
    run_train_thresholds,
    run_verify,
)

log = logging.getLogger("metacomb")

SCHEMAS = """\
file formats:
  predictions CSV  sample_id,<class_1>,...,<class_N>   scores in [0, 1], one file per base model
  gold CSV         sample_id,<class_1>,...,<class_N>[,group][,split]   0/1 cells, split in {train,dev,test}
  pipeline JSON    {"predictions": {model: path | {split: path}}, "gold": path | {split: path},
                    "output": dir, "training": {...}, "grid": [alpha, beta, delta], ...}
"""

PRESETS = {
    "binary": lambda seed: synth.binary_spec(seed=seed),
    "transfer": lambda seed: synth.transfer_spec(synth.binary_spec(seed=seed)),
    "cad": lambda seed: synth.cad_spec(seed=seed),
    "noise": lambda seed: synth.noise_model_spec(seed=seed),
}


def _grid(text):
    try:
        parts = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be alpha,beta,delta; got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must have three values; got {text!r}")
    return parts


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _load_config(args):
    if not args.config:
        raise ParameterError("--config is required for this command")
    cfg = PipelineConfig.load(args.config)
    mode = {"exact": "exact_match", "labelwise": "label_wise"}.get(getattr(args, "accuracy_mode", None))
    return cfg.with_overrides(
        seed=args.seed,
        output=Path(args.output) if args.output else None,
        grid=getattr(args, "grid", None),
        accuracy_mode=mode,
        fallback_argmax=True if getattr(args, "fallback_argmax", False) else None,
    )


def cmd_generate(args):
    if args.config:
        spec = synth.SyntheticSpec.from_dict(load_json(args.config))
        if args.seed is not None:
            spec = synth.replace(spec, seed=args.seed)
    else:
        spec = PRESETS[args.preset](args.seed or 0)
    if not args.output:
        raise ParameterError("--output is required for generate")
    out = Path(args.output)
    data = synth.generate(spec)
    synth.write_synthetic(data, spec, out)
    pipeline = {
        "predictions": {m.model_id: f"{m.model_id}.csv" for m in spec.models},
        "gold": "gold.csv",
        "output": "run",
        "seed": spec.seed,
    }
    save_json(pipeline, out / "pipeline.json")
    dist = data.gold.class_distribution()
    print(f"wrote {spec.n_samples} samples, {len(spec.models)} models to {out}")
    print("class distribution: " + ", ".join(f"{c}={v:.3f}" for c, v in dist.items()))
    return 0


def cmd_train_combiner(args):
    cfg = _load_config(args)
    model = run_train_combiner(cfg)
    for line in describe_weights(model):
        print(line)
    print(f"wrote {cfg.combiner_file}")
    return 0


def cmd_train_thresholds(args):
    cfg = _load_config(args)
    tv = run_train_thresholds(cfg)
    for c in tv.classes:
        print(f"{c}: t={tv.per_class[c]:.4g} dev_f1={tv.achieved_f1[c]:.4f}")
    print(f"wrote {cfg.thresholds_file}")
    return 0


def cmd_predict(args):
    cfg = _load_config(args)
    for p in run_predict(cfg, split=args.split, with_tm=args.with_tm):
        print(f"wrote {p}")
    return 0


def cmd_evaluate(args):
    cfg = _load_config(args)
    report, _ = run_evaluate(cfg, with_tm=args.with_tm, split=args.split)
    for c in report.classes:
        m = report.per_class[c]
        print(f"{c}: P={m.precision:.4f} R={m.recall:.4f} F1={m.f1:.4f}")
    print(f"macroF1={report.macro_f1:.4f} accuracy({report.accuracy_mode})={report.accuracy:.4f}")
    return 0


def _batch_verify(args):
    from .bounds import verify_weight_bounds
    from .combiner import train_br_combiners

    seed = args.seed or 0
    qualifying = valid = contained = 0
    for i in range(args.batch):
        spec = synth.random_ensemble_spec(seed + i)
        data = synth.generate(spec)
        dev = data.gold.for_split("dev")
        tables = {m: t.select(dev.sample_ids) for m, t in data.tables.items()}
        model = train_br_combiners(tables, dev)
        for r in verify_weight_bounds(model, tables, dev, args.t).values():
            if r.reason == "mixed_sign_weights":
                continue
            qualifying += 1
            if r.applicable:
                valid += 1
                contained += r.contained
    summary = {
        "instances": args.batch,
        "sign_homogeneous": qualifying,
        "valid_intervals": valid,
        "contained": contained,
        "violations": valid - contained,
        "t": args.t,
    }
    if args.output:
        save_json(summary, Path(args.output) / "verification_batch.json")
    print(dumps(summary), end="")
    return 0 if valid == contained else 1


def cmd_verify_theorem(args):
    if args.batch:
        return _batch_verify(args)
    cfg = _load_config(args)
    if args.t is not None:
        cfg = cfg.with_overrides(bound_threshold=args.t)
    results, _ = run_verify(cfg)
    for c, r in results.items():
        if r.interval is None:
            print(f"{c}: W={r.W:.4f} applicable=False ({r.reason})")
            continue
        side = "+1" if r.interval.sign_case == POSITIVE else "-1"
        print(
            f"{c}: W={r.W:.4f} interval=[{r.interval.lo:.4f}, {r.interval.hi:.4f}] around {side} "
            f"applicable={r.applicable} contained={r.contained if r.applicable else None} ({r.reason})"
        )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="metacomb",
        description="Stacked logistic combiner with per-class threshold moving.",
        epilog=SCHEMAS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, tm=False, grid=False, split=False):
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=SCHEMAS,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="pipeline JSON (synthetic spec JSON for generate)")
        p.add_argument("--seed", type=_seed, default=None, help="unsigned 64-bit seed")
        p.add_argument("--output", help="output directory")
        if tm:
            p.add_argument("--with-tm", action="store_true", help="apply trained thresholds instead of 0.5")
            p.add_argument("--fallback-argmax", action="store_true",
                           help="give samples with no passing class their top-scoring class")
        if grid:
            p.add_argument("--grid", type=_grid, help="threshold grid as alpha,beta,delta")
        if split:
            p.add_argument("--split", default=None, help="split to score (default: test split)")
        p.set_defaults(func=fn)
        return p

    g = add("generate", cmd_generate, "write synthetic per-model prediction CSVs and gold labels")
    g.add_argument("--preset", choices=sorted(PRESETS), default="binary",
                   help="built-in spec used when --config is not given")
    add("train-combiner", cmd_train_combiner, "fit one combiner per class on the dev split")
    add("train-thresholds", cmd_train_thresholds, "grid-search per-class thresholds on dev combiner output",
        grid=True)
    add("predict", cmd_predict, "write combined scores and label sets", tm=True, split=True)
    e = add("evaluate", cmd_evaluate, "per-class P/R/F1, macro-F1 and accuracy report", tm=True, split=True)
    e.add_argument("--accuracy-mode", choices=("exact", "labelwise"), default=None)
    v = add("verify-theorem", cmd_verify_theorem, "check the weight-sum interval of trained combiners")
    v.add_argument("--t", type=float, default=None, help="assignment threshold for the norms (default 0.5)")
    v.add_argument("--batch", type=int, default=0,
                   help="instead of --config, train and check this many random synthetic ensembles")
    return parser


def _setup_logging():
    level = os.environ.get("METACOMB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    if getattr(args, "t", None) is None and args.command == "verify-theorem" and args.batch:
        args.t = 0.5
    try:
        return args.func(args)
    except MetacombError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
