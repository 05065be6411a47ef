"""``adversarial-au`` command-line driver.

Exit codes: 0 success, 2 invalid configuration or input, 3 training divergence.
"""
import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import BACKEND_NAME
from .config import build_dataset, experiment_from_mapping, load_config, run_experiment
from .data import load_dataset, save_dataset
from .errors import ConfigError, DimensionError, DomainError, ParseError, ProtocolError, TrainingDiverged
from .metrics import evaluate
from .models import load_checkpoint, save_checkpoint

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3
SWEEP_COLUMNS = ("axis", "value", "seed", "avg_f1", "avg_auc", "avg_acc",
                 "marginal_diff_mean", "conditional_diff_mean")
SWEEP_AXES = ("alpha", "missing_rate")


def _overrides(args):
    out = {}
    if getattr(args, "seed", None) is not None:
        out["seed"] = str(args.seed)
    if getattr(args, "threshold", None) is not None:
        out["train.threshold"] = str(args.threshold)
    if getattr(args, "n", None) is not None:
        out["data.n"] = str(args.n)
    return out


def _experiment(args):
    if args.config is None:
        return experiment_from_mapping(_overrides(args))
    return load_config(args.config, _overrides(args))


def write_run(exp, result, out_dir):
    """Artifacts of one training run. Only ``run.json`` carries a timestamp."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.classifier, out / "classifier.ckpt")
    save_checkpoint(result.discriminator, out / "discriminator.ckpt")
    (out / "history.csv").write_text(result.history.to_csv(), encoding="utf-8")
    (out / "report.json").write_text(result.report.to_json() + "\n", encoding="utf-8")
    meta = {
        "variant": exp.variant,
        "alpha": exp.train.alpha,
        "missing_rate": exp.missing_rate,
        "seed": exp.seed,
        "steps": exp.train.K,
        "backend": BACKEND_NAME,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    (out / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_gen_data(args):
    exp = _experiment(args)
    ds = build_dataset(replace(exp, data_path=None))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out)
    print(f"wrote {ds.n} rows to {out}")
    return EXIT_OK


def cmd_train(args):
    exp = _experiment(args)
    out = args.out or exp.out_dir
    result = run_experiment(exp)
    write_run(exp, result, out)
    r = result.report
    print(f"{exp.variant}: avg_f1={r.avg_f1:.4f} avg_auc={r.avg_auc:.4f} -> {out}")
    return EXIT_OK


def cmd_eval(args):
    params = load_checkpoint(args.checkpoint)
    ds = load_dataset(args.data)
    threshold = 0.5 if args.threshold is None else args.threshold
    if not 0.0 < threshold < 1.0:
        raise ConfigError("--threshold", "must lie in (0, 1)")
    text = evaluate(params, ds, threshold, args.min_support).to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _sweep_cell(exp, axis, value, seed, cell_dir):
    cell = exp.with_seed(seed)
    if axis == "alpha":
        cell = replace(cell, train=replace(cell.train, alpha=value))
    else:
        cell = replace(cell, missing_rate=value)
    result = run_experiment(cell)
    write_run(cell, result, cell_dir)
    r = result.report
    return [axis, repr(value), seed, repr(r.avg_f1), repr(r.avg_auc), repr(r.avg_accuracy),
            repr(r.marginal_diff_mean), repr(r.conditional_abs_diff_mean)]


def _parse_list(flag, text, conv):
    try:
        items = [conv(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(flag, f"cannot parse {text!r}") from None
    if not items:
        raise ConfigError(flag, "empty list")
    return items


def cmd_sweep(args):
    exp = _experiment(args)
    if args.axis not in SWEEP_AXES:
        raise ConfigError("--axis", f"must be one of {', '.join(SWEEP_AXES)}")
    values = _parse_list("--values", args.values, float)
    seeds = _parse_list("--seeds", args.seeds, int)
    for v in values:
        try:
            if args.axis == "alpha":
                replace(exp.train, alpha=v)
            elif not 0.0 <= v < 1.0:
                raise ValueError("missing_rate must lie in [0, 1)")
        except ValueError as exc:
            raise ConfigError("--values", str(exc)) from None
    out = Path(args.out or exp.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = [(v, s, out / f"{args.axis}={v!r}" / f"seed={s}") for v in values for s in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_sweep_cell, exp, args.axis, v, s, d) for v, s, d in cells]
            rows = [f.result() for f in futures]
    else:
        rows = [_sweep_cell(exp, args.axis, v, s, d) for v, s, d in cells]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    w.writerows(rows)
    (out / "sweep.csv").write_text(buf.getvalue(), encoding="utf-8")
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="adversarial-au",
                                description="Adversarial label-distribution training for multi-label classifiers.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset")
    g.add_argument("--config", help="config file (label spec, d, noise)")
    g.add_argument("--out", required=True, help="output CSV path")
    g.add_argument("--n", type=int, help="number of rows")
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train one model")
    t.add_argument("--config", help="config file")
    t.add_argument("--out", help="output directory (overrides output.dir)")
    t.add_argument("--seed", type=int)
    t.add_argument("--threshold", type=float)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a classifier checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True, help="dataset CSV")
    e.add_argument("--threshold", type=float)
    e.add_argument("--min-support", type=int, default=10)
    e.add_argument("--out", help="write JSON here instead of stdout")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="sweep alpha or missing_rate over seeds")
    s.add_argument("--config", help="base config file")
    s.add_argument("--axis", required=True, choices=SWEEP_AXES)
    s.add_argument("--values", required=True, help="comma-separated axis values")
    s.add_argument("--seeds", required=True, help="comma-separated seeds")
    s.add_argument("--out", help="output directory")
    s.add_argument("--threshold", type=float)
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, ProtocolError, DomainError, DimensionError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
