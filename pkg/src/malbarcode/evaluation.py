"""Metrics, grid search and on-disk experiment reports."""

import csv
from dataclasses import dataclass, field
import hashlib
import itertools
import json
import logging
from pathlib import Path

import numpy as np

from .errors import MalbarcodeError, ParameterError, SearchError

log = logging.getLogger(__name__)

RUNS_FIELDS = ("dataset", "model", "encoding", "features", "accuracy", "macro_f1", "seed", "config_hash", "report_path")


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # rows = true class, columns = predicted class
    class_names: tuple

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def absent_classes(self):
        """Classes seen neither in the truth nor in the predictions."""
        seen = (self.counts.sum(axis=0) + self.counts.sum(axis=1)) > 0
        return [i for i in range(len(seen)) if not seen[i]]

    def per_class_f1(self):
        tp = np.diag(self.counts).astype(np.float64)
        fp = self.counts.sum(axis=0) - tp
        fn = self.counts.sum(axis=1) - tp
        denom = 2 * tp + fp + fn
        return np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1), 0.0)

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.class_names)
            writer.writerows(self.counts.tolist())


def evaluate(true_labels, predicted_labels, k, class_names=None):
    """Return ``(accuracy, macro_f1, confusion)``."""
    y = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if y.shape != p.shape:
        raise ParameterError(f"{y.size} true labels but {p.size} predictions")
    if y.size and (min(y.min(), p.min()) < 0 or max(y.max(), p.max()) >= k):
        raise ParameterError(f"labels must lie in [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (y, p), 1)
    names = tuple(class_names) if class_names else tuple(str(i) for i in range(k))
    cm = ConfusionMatrix(counts, names)
    accuracy = float(np.trace(counts) / y.size) if y.size else 0.0
    return accuracy, float(cm.per_class_f1().mean()), cm


@dataclass
class ExperimentReport:
    dataset: str
    model: str
    config: dict
    accuracy: float
    macro_f1: float
    confusion: ConfusionMatrix
    seed: int = 0
    encoding: str = "raw"
    features: int = 0
    history: list = field(default_factory=list)
    wall_clock: float = 0.0
    selection_metric: str = "test_accuracy"
    selection_score: float = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.selection_score is None:
            self.selection_score = self.accuracy

    @property
    def config_hash(self):
        doc = {
            "dataset": self.dataset, "model": self.model, "encoding": self.encoding,
            "features": self.features, "config": self.config, "seed": self.seed,
        }
        blob = json.dumps(doc, sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "model": self.model,
            "encoding": self.encoding,
            "features": self.features,
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion.counts.tolist(),
            "class_names": list(self.confusion.class_names),
            "absent_classes": self.confusion.absent_classes,
            "history": self.history,
            "selection_metric": self.selection_metric,
            "selection_score": self.selection_score,
            "notes": self.notes,
            "wall_clock": self.wall_clock,
        }


@dataclass(frozen=True)
class GridSpec:
    axes: dict
    selection_metric: str = "validation_accuracy"

    def __post_init__(self):
        for name, values in self.axes.items():
            if not list(values):
                raise ParameterError(f"grid axis {name!r} is empty")

    def cells(self):
        names = list(self.axes)
        for combo in itertools.product(*(self.axes[n] for n in names)):
            yield dict(zip(names, combo))

    def __len__(self):
        n = 1
        for values in self.axes.values():
            n *= len(values)
        return n


@dataclass
class FailedCell:
    config: dict
    error: str
    selection_score = None


def grid_search(grid, trainer):
    """Evaluate every cell in axis order; the first best ``selection_score`` wins."""
    reports = []
    best, best_score = None, -np.inf
    for cell in grid.cells():
        try:
            report = trainer(dict(cell))
        except MalbarcodeError as exc:
            log.warning("grid cell %s failed: %s", cell, exc)
            reports.append(FailedCell(dict(cell), str(exc)))
            continue
        reports.append(report)
        if report.selection_score > best_score:
            best, best_score = dict(cell), report.selection_score
    if best is None:
        raise SearchError(f"all {len(reports)} grid cells failed")
    return best, reports


def emit_report(report, out_dir):
    """Write the run's files under ``out_dir/<model>-<hash>/`` and append to ``out_dir/runs.csv``."""
    out_dir = Path(out_dir)
    run_dir = out_dir / f"{report.model}-{report.config_hash}"
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        written = [run_dir / "report.json", run_dir / "confusion.csv"]
        written[0].write_text(json.dumps(report.to_dict(), indent=1, default=str))
        report.confusion.write_csv(written[1])
        if report.history:
            from .nn.train import write_history_csv

            written.append(run_dir / "history.csv")
            write_history_csv(report.history, written[-1])
        runs = out_dir / "runs.csv"
        new = not runs.exists()
        with open(runs, "a", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            if new:
                writer.writerow(RUNS_FIELDS)
            writer.writerow([
                report.dataset, report.model, report.encoding, report.features,
                repr(report.accuracy), repr(report.macro_f1), report.seed, report.config_hash,
                (run_dir / "report.json").relative_to(out_dir).as_posix(),
            ])
    except OSError as exc:
        raise OSError(f"cannot write report under {out_dir}: {exc}") from exc
    return written + [runs]


def summarize_runs(runs_csv):
    """Group runs.csv rows by dataset, each group sorted by accuracy (best first).

    Malformed rows are skipped with a warning.
    """
    groups = {}
    with open(runs_csv, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, start=2):
            try:
                if None in row or any(row.get(f) is None for f in RUNS_FIELDS):
                    raise ValueError("wrong number of fields")
                row["accuracy"] = float(row["accuracy"])
                row["macro_f1"] = float(row["macro_f1"])
            except (TypeError, ValueError) as exc:
                log.warning("%s:%d: skipping malformed row (%s)", runs_csv, lineno, exc)
                continue
            groups.setdefault(row["dataset"], []).append(row)
    for rows in groups.values():
        rows.sort(key=lambda r: -r["accuracy"])
    return groups
