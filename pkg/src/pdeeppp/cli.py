"""Command-line surface: prepare, train, evaluate, predict, export-report.

Every flat configuration key is exposed as a flag (``--model-d-model``,
``--loss-lambda``, ...); a config file supplies defaults and flags
override it.  Exit codes: 0 success, 2 configuration error, 3 data
error, 4 numeric divergence.
"""

import csv
import functools
import sys
from pathlib import Path

import click
import numpy as np

from . import checkpoint as ckpt_mod
from . import config as config_mod
from . import data as data_mod
from . import report as report_mod
from . import train as train_mod
from .errors import ConfigError, DataError, NumericError, PdeepppError

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _key_to_param(key):
    return key.replace(".", "__")


def config_options(fn):
    """Attach one string-valued option per flat configuration key."""
    for key in sorted(config_mod.default_flat(), reverse=True):
        flag = "--" + key.replace(".", "-").replace("_", "-")
        fn = click.option(flag, _key_to_param(key), default=None,
                          metavar="VALUE", help=f"config key {key}")(fn)
    fn = click.option("--config", "config_path", default=None,
                      type=click.Path(exists=True), help="flat key=value config file")(fn)
    fn = click.option("--lambda", "loss__lambda", default=None, metavar="R",
                      help="alias for loss.lambda")(fn)
    fn = click.option("--beta", "loss__beta", default=None, metavar="R",
                      help="alias for loss.beta")(fn)
    fn = click.option("--ablation", "ablation", default=None, metavar="NAME[,NAME...]",
                      help="comma-separated ablation toggles")(fn)
    return fn


def build_config(config_path, ablation, overrides):
    flat = {}
    if config_path:
        flat.update(config_mod.parse_config_file(config_path))
    for param, value in overrides.items():
        if value is None:
            continue
        key = param.replace("__", ".")
        if key == "loss.lambda_":
            key = "loss.lambda"
        flat[key] = value
    cfg = config_mod.from_flat(flat)
    if ablation:
        cfg = config_mod.with_ablations(cfg, [a.strip() for a in ablation.split(",")])
    return cfg


def _split_config_kwargs(kwargs):
    """Separate generated config-key parameters from a command's own."""
    config_keys = {_key_to_param(k) for k in config_mod.default_flat()}
    config_keys |= {"loss__lambda", "loss__beta"}
    overrides = {k: v for k, v in kwargs.items() if k in config_keys}
    rest = {k: v for k, v in kwargs.items() if k not in config_keys}
    return overrides, rest


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, click.UsageError) as exc:
            click.echo(f"configuration error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except NumericError as exc:
            click.echo(f"numeric error: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)
        except (DataError, PdeepppError, OSError) as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(EXIT_DATA)
    return wrapper


@click.group()
def main():
    """Peptide function and modification-site classifier."""


def _load_records(path, fmt=None):
    path = str(path)
    if fmt is None:
        fmt = "fasta" if path.endswith((".fa", ".fasta", ".faa")) else "csv"
    return data_mod.parse_dataset(path, fmt)


def _load_embeddings_for(records, embeddings_path, flank):
    full = data_mod.read_embeddings(embeddings_path)
    return data_mod.resolve_embeddings(records, full, flank)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["csv", "fasta"]), default=None)
@click.option("--task", type=click.Choice(["bp", "ptm"]), default="bp")
@click.option("--out", "out_dir", required=True, type=click.Path())
@config_options
@handle_errors
def prepare(input_path, fmt, task, out_dir, config_path, ablation, **kwargs):
    """Windowing (for site tasks), deterministic split, canonical csv output."""
    overrides, _ = _split_config_kwargs(kwargs)
    cfg = build_config(config_path, ablation, overrides)
    records = _load_records(input_path, fmt)
    if task == "ptm":
        records = data_mod.windowize(records, data_mod.WindowSpec(cfg.data.flank))
    plan = data_mod.SplitPlan(train_frac=cfg.data.train_frac,
                              test_frac=cfg.data.test_frac,
                              val_frac_of_train=cfg.data.val_frac_of_train,
                              seed=cfg.seed)
    splits = data_mod.split(records, plan)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    counts = {}
    for name, recs in splits.items():
        data_mod.write_csv(out / f"{name}.csv", recs)
        counts[name] = {
            "total": len(recs),
            "positives": sum(r.label for r in recs),
            "negatives": sum(1 - r.label for r in recs),
        }
    report_mod.write_manifest(out / "manifest.json", {
        "seed": cfg.seed,
        "task": task,
        "flank": cfg.data.flank if task == "ptm" else None,
        "fractions": {"train": cfg.data.train_frac, "test": cfg.data.test_frac,
                      "val_of_train": cfg.data.val_frac_of_train},
        "class_counts": counts,
    })
    click.echo(f"wrote {', '.join(sorted(splits))} to {out}")


@main.command()
@click.option("--train-data", required=True, type=click.Path(exists=True))
@click.option("--val-data", default=None, type=click.Path(exists=True))
@click.option("--embeddings", "embeddings_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@config_options
@handle_errors
def train(train_data, val_data, embeddings_path, out_dir, config_path,
          ablation, **kwargs):
    """Train on tim_loss, keeping the best-validation-MCC checkpoint."""
    overrides, _ = _split_config_kwargs(kwargs)
    cfg = build_config(config_path, ablation, overrides)
    train_records = _load_records(train_data)
    val_records = _load_records(val_data) if val_data else []
    embeddings = _load_embeddings_for(train_records + val_records,
                                      embeddings_path, cfg.data.flank)

    def log_fn(entry):
        parts = [f"epoch {entry['epoch']:3d}", f"loss {entry['train_loss']:.4f}"]
        if "val_mcc" in entry:
            parts.append(f"val_mcc {entry['val_mcc']:.4f}")
        click.echo("  ".join(parts))

    best, log = train_mod.train(cfg, train_records, val_records, embeddings,
                                log_fn=log_fn)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt_mod.save_checkpoint(out / "model.ckpt", best)
    report_mod.write_epoch_log(out / "epoch_log.csv", log)
    click.echo(f"best epoch {best.epoch}; checkpoint at {out / 'model.ckpt'}")


@main.command()
@click.option("--checkpoint", "checkpoint_path", required=True,
              type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", "embeddings_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@config_options
@handle_errors
def evaluate(checkpoint_path, data_path, embeddings_path, out_dir,
             config_path, ablation, **kwargs):
    """Full metric report, curve point files, and per-category statistics."""
    overrides, _ = _split_config_kwargs(kwargs)
    ckpt = ckpt_mod.load_checkpoint(checkpoint_path)
    threshold = ckpt.config.threshold
    if overrides.get("threshold") is not None:
        threshold = float(overrides["threshold"])
    records = _load_records(data_path)
    embeddings = _load_embeddings_for(records, embeddings_path,
                                      ckpt.config.data.flank)
    scores, labels, report, dist = train_mod.evaluate(ckpt, records, embeddings,
                                                      threshold)
    out = Path(out_dir)
    report_mod.write_evaluation(out, [r.id for r in records], scores, labels,
                                report, dist)
    click.echo(report_mod.format_metric_report(report), nl=False)


@main.command()
@click.option("--checkpoint", "checkpoint_path", required=True,
              type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", "embeddings_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def predict(checkpoint_path, data_path, embeddings_path, out_path):
    """Positive-class probability per input id, in input order."""
    ckpt = ckpt_mod.load_checkpoint(checkpoint_path)
    if str(data_path).endswith((".fa", ".fasta", ".faa")):
        records = data_mod.parse_fasta(data_path)
    else:
        records = data_mod.parse_sequences_csv(data_path)
    embeddings = _load_embeddings_for(records, embeddings_path,
                                      ckpt.config.data.flank)
    pairs = train_mod.predict(ckpt, records, embeddings)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "score"])
        for rec_id, score in pairs:
            writer.writerow([rec_id, f"{score:.6f}"])
    click.echo(f"wrote {len(pairs)} predictions to {out_path}")


@main.command("export-report")
@click.option("--predictions", "predictions_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--threshold", default=0.5, type=float)
@handle_errors
def export_report(predictions_path, out_dir, threshold):
    """Rebuild metric report and curves from a saved predictions file."""
    from . import metrics as metrics_mod
    ids, scores, labels = [], [], []
    with open(predictions_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "score", "label"]:
            raise DataError(f"{predictions_path}: expected header id,score,label")
        for row in reader:
            ids.append(row[0])
            scores.append(float(row[1]))
            labels.append(int(row[2]))
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    report = metrics_mod.full_report(scores, labels, threshold)
    dist = metrics_mod.prediction_distribution(scores, labels, threshold)
    report_mod.write_evaluation(Path(out_dir), ids, scores, labels, report, dist)
    click.echo(report_mod.format_metric_report(report), nl=False)


if __name__ == "__main__":
    main()
