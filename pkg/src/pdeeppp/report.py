"""Plain-text report and curve-point writers (4-decimal rounding)."""

import csv
import json

from . import metrics as metrics_mod

METRIC_ORDER = ("acc", "bacc", "sn", "sp", "mcc", "roc_auc", "pr_auc")
COUNT_ORDER = ("tp", "fp", "tn", "fn")


def format_metric_report(report):
    lines = []
    for key in METRIC_ORDER:
        value = report[key]
        lines.append(f"{key} = {'undefined' if value is None else f'{value:.4f}'}")
    for key in COUNT_ORDER:
        lines.append(f"{key} = {report[key]}")
    return "\n".join(lines) + "\n"


def format_distribution(dist):
    lines = []
    for cat in metrics_mod.CATEGORIES:
        stats = dist[cat]
        if stats["count"] == 0:
            lines.append(f"{cat}: count = 0")
            continue
        lines.append(
            f"{cat}: count = {stats['count']}, mean = {stats['mean']:.4f}, "
            f"median = {stats['median']:.4f}, stddev = {stats['stddev']:.4f}, "
            f"q25 = {stats['q25']:.4f}, q75 = {stats['q75']:.4f}")
    return "\n".join(lines) + "\n"


def write_curves(out_dir, scores, labels):
    """ROC and PR point files (two columns, header line, threshold order)."""
    try:
        fpr, tpr = metrics_mod.roc_curve(scores, labels)
        with open(out_dir / "roc_points.tsv", "w", encoding="utf-8") as fh:
            fh.write("fpr\ttpr\n")
            for x, y in zip(fpr, tpr):
                fh.write(f"{x:.6f}\t{y:.6f}\n")
    except metrics_mod.UndefinedMetricError:
        pass
    try:
        recall, precision = metrics_mod.pr_curve(scores, labels)
        with open(out_dir / "pr_points.tsv", "w", encoding="utf-8") as fh:
            fh.write("recall\tprecision\n")
            for x, y in zip(recall, precision):
                fh.write(f"{x:.6f}\t{y:.6f}\n")
    except metrics_mod.UndefinedMetricError:
        pass


def write_evaluation(out_dir, ids, scores, labels, report, dist):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.txt").write_text(format_metric_report(report),
                                         encoding="utf-8")
    (out_dir / "prediction_distribution.txt").write_text(
        format_distribution(dist), encoding="utf-8")
    write_curves(out_dir, scores, labels)
    with open(out_dir / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "score", "label"])
        for rec_id, score, label in zip(ids, scores, labels):
            writer.writerow([rec_id, f"{score:.6f}", int(label)])


def write_epoch_log(path, log):
    keys = list(log[0].keys()) if log else ["epoch", "train_loss"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for entry in log:
            writer.writerow([entry.get(k, "") for k in keys])


def write_manifest(path, manifest):
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
