"""Operator-facing command line: synth, infer, train, hpsearch, eval, export.

Configuration layering is the same everywhere: built-in defaults, then a JSON
config file (--config), then explicit flags. The effective values are echoed
into the run report so a run can be reproduced from its report alone. Every
command appends one JSON line to <report dir>/report.jsonl when --report is
given and always prints the report to stdout.

Exit status is 0 only when the command succeeded; failures print the name of
the violated contract (the exception class) to stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import datastore, reports
from .bridge import BridgeModel, estimate_eos_norm
from .errors import InvalidSpec, MissingFile, SemoBridgeError
from .hpsearch import STRATEGIES, SearchSpec, search_task
from .inference import BlendConfig, build_state, confusion_rates, evaluate
from .linalg import ProjectionPair
from .synthetic import SynthSpec, generate
from .training import TrainConfig, train

SPLITS = ("test", "val")


def _default_seed() -> int:
    return int(os.environ.get("SEMOBRIDGE_SEED", "0"))


def _layered(defaults: dict, config_path, flags: dict) -> dict:
    """defaults <- config file <- explicitly passed flags."""
    merged = dict(defaults)
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise MissingFile(f"config file not found: {path}")
        file_cfg = json.loads(path.read_text(encoding="utf-8"))
        unknown = sorted(set(file_cfg) - set(defaults))
        if unknown:
            raise InvalidSpec(f"unknown config keys: {', '.join(unknown)}")
        merged.update(file_cfg)
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def _manifest_path(task_path) -> Path:
    path = Path(task_path)
    return path / "manifest.json" if path.is_dir() else path


_BLEND_SHORT = {"l1": "lambda1", "l2": "lambda2", "l3": "lambda3"}
_BLEND_FIELDS = {f.name for f in dataclasses.fields(BlendConfig)}


def parse_blend(text: str) -> BlendConfig:
    """Inline assignments (``l1=1,l2=0,theta=-3``) or a JSON file path."""
    path = Path(text)
    if text.endswith(".json") or path.exists():
        if not path.exists():
            raise MissingFile(f"blend file not found: {path}")
        return BlendConfig(**json.loads(path.read_text(encoding="utf-8"))).validate()
    kwargs = {}
    for part in text.split(","):
        name, sep, raw = part.partition("=")
        key = _BLEND_SHORT.get(name.strip(), name.strip())
        if not sep or key not in _BLEND_FIELDS:
            raise InvalidSpec(f"bad blend assignment {part!r}")
        kwargs[key] = float(raw)
    return BlendConfig(**kwargs).validate()


def _load_task(task_path):
    task = datastore.load_task(_manifest_path(task_path))
    return task, ProjectionPair.from_forward(task.w_txt)


def _load_optional_model(model_path, task_path):
    if model_path is None:
        return None, None
    model, blend, _ = datastore.load_model(model_path, _manifest_path(task_path))
    return model, blend


def _split_arrays(task, split: str):
    if split == "val":
        return task.val_x, task.val_y
    return task.test_x, task.test_y


def _eval_metrics(task, proj, model, blend, split: str):
    state = build_state(
        task.train_x, task.train_y, task.prompt_eos, task.text_txt, proj,
        model=model, blend=blend, temperature=task.temperature,
    )
    x, y = _split_arrays(task, split)
    res = evaluate(x, y, state)
    per_class = np.diag(confusion_rates(res.confusion))
    metrics = {
        "accuracy": res.accuracy,
        "per_class_accuracy": [float(v) for v in per_class],
        "split": split,
    }
    return res, metrics, state


def _emit_report(report: dict, report_dir) -> None:
    """Print the report; append it to report.jsonl when a directory is given."""
    line = json.dumps(report, sort_keys=True)
    print(line)
    if report_dir is None:
        return
    out = Path(report_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.jsonl", "a", encoding="utf-8") as fh:
        fh.write(line + "\n")


def cmd_synth(args) -> dict:
    flags = {
        "n_classes": args.classes,
        "shots": args.shots,
        "queries_per_class": args.queries,
        "val_per_class": args.val,
        "prompts_per_class": args.prompts,
        "dim": args.dim,
        "eos_dim": args.eos_dim,
        "gap_magnitude": args.gap_magnitude,
        "image_noise": args.image_noise,
        "text_noise": args.text_noise,
        "temperature": args.temperature,
        "seed": args.seed,
    }
    defaults = asdict(SynthSpec(seed=_default_seed()))
    cfg = _layered(defaults, args.config, flags)
    task = generate(SynthSpec(**cfg))
    manifest = datastore.save_task(task, args.out)
    print(manifest)
    return {
        "command": "synth",
        "config": cfg,
        "seed": cfg["seed"],
        "metrics": {},
        "artifacts": [str(manifest)],
    }


def cmd_infer(args) -> dict:
    task, proj = _load_task(args.task)
    model, stored_blend = _load_optional_model(args.model, args.task)
    blend = parse_blend(args.blend) if args.blend else stored_blend
    res, metrics, state = _eval_metrics(task, proj, model, blend, args.split)
    artifacts = []
    if args.report is not None:
        out = Path(args.report)
        artifacts.append(str(reports.write_confusion_csv(
            out / "confusion.csv", res.confusion, task.class_names
        )))
        sim = reports.similarity_report(task, proj, model=model, split=args.split)
        for mode, hist in sim.items():
            artifacts.append(str(reports.write_similarity_csv(
                out / f"similarity_{mode}.csv", hist
            )))
    return {
        "command": "infer",
        "config": asdict(state.blend),
        "seed": args.seed if args.seed is not None else _default_seed(),
        "metrics": metrics,
        "artifacts": artifacts,
    }


def cmd_train(args) -> dict:
    task, proj = _load_task(args.task)
    flags = {
        "epochs": args.epochs,
        "learning_rate": args.learning_rate,
        "warmup_epochs": args.warmup_epochs,
        "weight_decay": args.weight_decay,
        "lambda_it": args.lambda_it,
        "lambda_c": args.lambda_c,
        "lambda_b": args.lambda_b,
        "eval_interval": args.eval_interval,
        "seed": args.seed,
    }
    cfg_dict = _layered(asdict(TrainConfig(seed=_default_seed())), args.config, flags)
    if args.warmup_epochs is None:
        # keep short --epochs runs valid without asking for a warmup flag too
        cfg_dict["warmup_epochs"] = min(cfg_dict["warmup_epochs"], cfg_dict["epochs"])
    cfg = TrainConfig(**cfg_dict)
    result = train(task, proj, cfg)
    out = Path(args.out)
    train_info = {
        "config": cfg_dict,
        "best_epoch": result.best_epoch,
        "best_val_accuracy": result.best_val_accuracy,
    }
    model_json = datastore.save_model(
        result.model, out, _manifest_path(args.task), train_info=train_info
    )
    history_csv = reports.write_history_csv(out / "history.csv", result.history)
    return {
        "command": "train",
        "config": cfg_dict,
        "seed": cfg.seed,
        "metrics": {
            "best_epoch": result.best_epoch,
            "best_val_accuracy": result.best_val_accuracy,
            "epochs_run": len(result.history),
        },
        "artifacts": [str(model_json), str(history_csv)],
    }


def cmd_hpsearch(args) -> dict:
    task, proj = _load_task(args.task)
    model, _ = _load_optional_model(args.model, args.task)
    defaults = asdict(SearchSpec(seed=_default_seed()))
    flags = {"budget": args.budget, "strategy": args.strategy, "seed": args.seed}
    cfg = _layered(defaults, args.config, flags)
    spec = SearchSpec(**cfg)
    result = search_task(task, proj, spec, model=model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    blend_path = out / "blend.json"
    blend_path.write_text(
        json.dumps(asdict(result.best), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    trace_csv = reports.write_trace_csv(out / "trace.csv", result.trace)
    cfg_echo = dict(cfg)
    cfg_echo["bounds"] = {k: list(v) for k, v in spec.bounds.items()}
    return {
        "command": "hpsearch",
        "config": cfg_echo,
        "seed": spec.seed,
        "metrics": {
            "best_val_accuracy": result.best_accuracy,
            "evaluations": len(result.trace),
        },
        "artifacts": [str(blend_path), str(trace_csv)],
    }


def cmd_eval(args) -> dict:
    task, proj = _load_task(args.task)
    model, stored_blend = _load_optional_model(args.model, args.task)
    blend = parse_blend(args.blend) if args.blend else stored_blend
    _, metrics, state = _eval_metrics(task, proj, model, blend, args.split)
    return {
        "command": "eval",
        "config": asdict(state.blend),
        "seed": args.seed if args.seed is not None else _default_seed(),
        "metrics": metrics,
        "artifacts": [],
    }


def cmd_export(args) -> dict:
    task, proj = _load_task(args.task)
    model, stored_blend = _load_optional_model(args.model, args.task)
    out = Path(args.out)
    if args.what == "bias-norms":
        if model is None:
            model = BridgeModel.untrained(
                proj, task.n_classes, estimate_eos_norm(task.prompt_eos)
            )
        path = reports.write_bias_norms_csv(out, model, task.class_names)
    elif args.what == "similarity-hist":
        sim = reports.similarity_report(task, proj, model=model, split=args.split)
        path = reports.write_similarity_csv(out, sim[args.mode])
    else:  # confusion
        res, _, _ = _eval_metrics(task, proj, model, stored_blend, args.split)
        path = reports.write_confusion_csv(out, res.confusion, task.class_names)
    return {
        "command": "export",
        "config": {"what": args.what, "split": args.split, "mode": args.mode},
        "seed": args.seed if args.seed is not None else _default_seed(),
        "metrics": {},
        "artifacts": [str(path)],
    }


def _add_common(sub, task=True):
    if task:
        sub.add_argument("--task", required=True, help="task directory or manifest path")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--threads", type=int, default=None,
                     help="cap BLAS threads; 1 gives bit-reproducible runs")
    sub.add_argument("--config", default=None, help="JSON config file")
    sub.add_argument("--report", default=None, help="directory for report.jsonl")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semobridge",
        description="Bridge image embeddings into the text modality and classify.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate a synthetic few-shot task")
    _add_common(p, task=False)
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--queries", type=int, default=None)
    p.add_argument("--val", type=int, default=None)
    p.add_argument("--prompts", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--eos-dim", type=int, default=None)
    p.add_argument("--gap-magnitude", type=float, default=None)
    p.add_argument("--image-noise", type=float, default=None)
    p.add_argument("--text-noise", type=float, default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("infer", help="classify the test split and write artifacts")
    _add_common(p)
    p.add_argument("--model", default=None)
    p.add_argument("--blend", default=None,
                   help="l1=..,l2=..,l3=..,alpha=..,theta=.. or a JSON file")
    p.add_argument("--split", choices=SPLITS, default="test")
    p.set_defaults(func=cmd_infer)

    p = subs.add_parser("train", help="train the bridge and save the best model")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--warmup-epochs", type=int, default=None)
    p.add_argument("--weight-decay", type=float, default=None)
    p.add_argument("--lambda-it", type=float, default=None)
    p.add_argument("--lambda-c", type=float, default=None)
    p.add_argument("--lambda-b", type=float, default=None)
    p.add_argument("--eval-interval", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("hpsearch", help="search blend parameters on the val split")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--strategy", choices=STRATEGIES, default=None)
    p.set_defaults(func=cmd_hpsearch)

    p = subs.add_parser("eval", help="report accuracy without writing artifacts")
    _add_common(p)
    p.add_argument("--model", default=None)
    p.add_argument("--blend", default=None)
    p.add_argument("--split", choices=SPLITS, default="test")
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("export", help="write one diagnostic CSV")
    _add_common(p)
    p.add_argument("--model", default=None)
    p.add_argument("--what", required=True,
                   choices=("bias-norms", "similarity-hist", "confusion"))
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=SPLITS, default="test")
    p.add_argument("--mode", choices=reports.HISTOGRAM_MODES, default="bridged")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        if args.threads is not None:
            from threadpoolctl import threadpool_limits

            threadpool_limits(limits=args.threads)
        report = args.func(args)
    except SemoBridgeError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    report["metrics"]["wall_time_s"] = time.perf_counter() - started
    _emit_report(report, args.report)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
