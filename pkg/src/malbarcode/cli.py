"""Command-line interface.

Stages communicate through files in a work directory::

    ingest  -> table.ftbl, table.meta.csv, table.json
    select  -> split.json, selection.json
    encode  -> <code>/<class>/<row>.pgm, <code>/manifest.jsonl
    train   -> model archive, report files, runs.csv
    report  -> comparison.csv

Exit codes: 0 success, 2 input error, 3 training or model error, 4 report error.
"""

import argparse
import json
import logging
import os
from pathlib import Path
import sys

EXIT_OK, EXIT_INPUT, EXIT_TRAIN, EXIT_REPORT = 0, 2, 3, 4

log = logging.getLogger("malbarcode")


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _ratios(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 2:
        parts = [parts[0], 0.0, parts[1]]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected train,val,test (or train,test)")
    return tuple(parts)


def _int_list(text):
    return tuple(int(p) for p in text.split(",") if p)


def _need_file(path, what):
    if path is None or not Path(path).exists():
        raise CliError(EXIT_INPUT, f"{what} not found: {path}")
    return Path(path)


def _table_path(work):
    return Path(work) / "table.ftbl"


def _load_work_table(work):
    from .dataset import load_table

    return load_table(_need_file(_table_path(work), "feature table"))


def _load_split(work):
    from .dataset import SplitIndices

    path = _need_file(Path(work) / "split.json", "split file (run `select` first)")
    return SplitIndices.from_dict(json.loads(path.read_text()))


def cmd_ingest(args):
    from .dataset import (
        SynthProfile, load_bodmas, load_cic_csv, save_table, subsample_per_class, synth_generate,
    )
    from .pipeline import derive_seed

    if args.dataset == "synth":
        table = synth_generate(SynthProfile(args.classes, args.features, args.sep,
                                            derive_seed(args.seed, "synth"), args.n))
    elif args.dataset == "cic":
        table = load_cic_csv(_need_file(args.input, "input file"))
    else:
        table = load_bodmas(_need_file(args.input, "input file"), _need_file(args.meta, "metadata file"),
                            dim=args.dim)
    if args.per_class is not None and args.dataset != "synth":
        table = subsample_per_class(table, args.per_class, derive_seed(args.seed, "subsample"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_table(table, _table_path(out))
    print(f"wrote {table.n_rows} rows x {table.n_features} features to {_table_path(out)}")


def cmd_select(args):
    from .dataset import stratified_split
    from .pipeline import derive_seed, select_features
    from .preprocess import write_selection

    table = _load_work_table(args.work)
    split = stratified_split(table, args.ratios, derive_seed(args.seed, "split"))
    (Path(args.work) / "split.json").write_text(json.dumps(split.to_dict()))
    k = min(args.k, table.n_features)
    _, indices, scores = select_features(table, split.train, args.method, k)
    write_selection(Path(args.work) / "selection.json", args.method, k, indices, scores.scores)
    names = [table.column_names[i] for i in indices]
    print(f"selected {k} features by {args.method}: {', '.join(names)}")


def cmd_encode(args):
    from .barcode.raster import render_image, write_manifest, write_pgm
    from .errors import CapacityError
    from .pipeline import encode_row, pinned_qr_version
    from .preprocess import apply_scaler, fit_scaler, read_selection

    work = Path(args.work)
    table = _load_work_table(work)
    split = _load_split(work)
    selection = read_selection(_need_file(work / "selection.json", "selection manifest (run `select` first)"))
    indices = selection["indices"][:args.k] if args.k else selection["indices"]
    # scaler statistics come from training rows only
    scaled = apply_scaler(table, fit_scaler(table, split.train, "minmax")).select_columns(indices)
    version = None
    if args.code == "qr":
        version = args.version or pinned_qr_version(len(indices), args.precision)
    box = args.module_size if args.code == "aztec" else args.box_size
    out = Path(args.out) if args.out else work / args.code
    records = []
    try:
        for i in range(table.n_rows):
            matrix = encode_row(scaled.values[i], args.code, version, args.precision, indices)
            cls = table.class_names[table.labels[i]]
            target = out / cls
            target.mkdir(parents=True, exist_ok=True)
            path = write_pgm(render_image(matrix, box, args.border), target / f"{i:06d}.pgm")
            records.append({
                "sample_id": i, "class": cls, "symbology": args.code,
                "version_or_layers": matrix.version, "symbol_size": matrix.size,
                "image_path": path.relative_to(out).as_posix(),
            })
    except CapacityError as exc:
        hint = f" (required version: {exc.required_version})" if exc.required_version else ""
        raise CliError(EXIT_INPUT, f"{exc}{hint}") from exc
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(records, out / "manifest.jsonl")
    print(f"encoded {len(records)} {args.code} images into {out}")


def _load_images(images_dir, n_rows, dim):
    import numpy as np

    from .barcode.raster import read_manifest, read_pgm, resize_image

    images_dir = Path(images_dir)
    manifest = read_manifest(_need_file(images_dir / "manifest.jsonl", "image manifest"))
    if len(manifest) != n_rows:
        raise CliError(EXIT_INPUT, f"manifest lists {len(manifest)} images for {n_rows} table rows")
    x = np.zeros((n_rows, dim, dim), dtype=np.float32)
    for rec in manifest:
        img = resize_image(read_pgm(images_dir / rec["image_path"]), dim)
        x[rec["sample_id"]] = img.to_float()
    return x, manifest


def _train_cnn_cell(table, split, images_dir, cell, seed, dataset, cache):
    import time

    from .evaluation import ExperimentReport, evaluate
    from .nn.model import CnnConfig, build_cnn, predict
    from .nn.train import TrainConfig, train_cnn
    from .pipeline import derive_seed

    dim = int(cell["image_dim"])
    cfg = TrainConfig(float(cell["learning_rate"]), int(cell["batch_size"]), int(cell["epochs"]),
                      cell["optimizer"], int(cell["patience"]), derive_seed(seed, "train"))
    start = time.perf_counter()
    model = build_cnn(CnnConfig(dim, len(table.class_names)), seed=derive_seed(seed, "init"))
    if dim not in cache:
        cache[dim] = _load_images(images_dir, table.n_rows, dim)[0]
    x = cache[dim]
    model, history = train_cnn(model, x, table.labels, split, cfg,
                               log=lambda r: log.info("epoch %(epoch)d train_loss %(train_loss).4f", r))
    _, pred = predict(model, x[split.test])
    acc, f1, cm = evaluate(table.labels[split.test], pred, len(table.class_names), table.class_names)
    has_val = len(split.validation) > 0
    report = ExperimentReport(
        dataset=dataset, model="cnn", config=dict(cell), accuracy=acc, macro_f1=f1, confusion=cm,
        seed=seed, encoding=Path(images_dir).name, history=history,
        wall_clock=time.perf_counter() - start,
        selection_metric="validation_accuracy" if has_val else "test_accuracy",
        selection_score=max(h["val_acc"] for h in history) if has_val else acc,
        notes=[] if has_val else ["model selected on test accuracy: no validation split"],
    )
    return report, model, cfg


def cmd_train(args):
    from .baselines.mlp import save_mlp
    from .errors import MalbarcodeError
    from .evaluation import GridSpec, emit_report, grid_search
    from .nn.model import save_model
    from .pipeline import run_baseline

    work = Path(args.work)
    table = _load_work_table(work)
    split = _load_split(work)
    out = Path(args.out) if args.out else work / "runs"
    out.mkdir(parents=True, exist_ok=True)
    dataset = args.dataset_name or work.name
    try:
        if args.model == "cnn":
            images = Path(args.images) if args.images else work / "qr"
            _need_file(images / "manifest.jsonl", "image manifest")
            axes = {
                "learning_rate": [args.lr], "batch_size": [args.batch], "epochs": [args.epochs],
                "optimizer": [args.optimizer], "image_dim": [args.dim], "patience": [args.patience],
            }
            if args.grid:
                axes.update(json.loads(_need_file(args.grid, "grid file").read_text()))
            cache, fitted = {}, {}

            def trainer(cell):
                report, model, cfg = _train_cnn_cell(table, split, images, cell, args.seed, dataset, cache)
                fitted[json.dumps(cell, sort_keys=True)] = (report, model, cfg)
                return report

            best, _ = grid_search(GridSpec(axes), trainer)
            report, model, cfg = fitted[json.dumps(best, sort_keys=True)]
            emit_report(report, out)
            save_model(model, out / f"cnn-{report.config_hash}" / "model.json", cfg.to_dict(), report.history)
        else:
            params = {}
            if args.model == "rf":
                params = {"n_estimators": args.trees, "criterion": args.criterion, "n_jobs": args.threads}
            elif args.model == "mlp":
                params = {"hidden_sizes": args.hidden, "max_iter": args.max_iter, "solver": args.solver}
            elif args.model == "svc":
                params = {"kernel": args.kernel, "gamma_mode": args.gamma}
            report, fitted = run_baseline(table, split, args.model, out, args.seed, dataset, **params)
            run_dir = out / f"{report.model}-{report.config_hash}"
            if args.model == "mlp":
                save_mlp(fitted, run_dir / "model.json")
            else:
                (run_dir / "model.json").write_text(json.dumps(fitted.to_dict()))
    except MalbarcodeError as exc:
        raise CliError(EXIT_TRAIN, f"{type(exc).__name__}: {exc}") from exc
    print(f"{args.model}: accuracy {report.accuracy:.4f}, macro F1 {report.macro_f1:.4f}")


def cmd_evaluate(args):
    from .baselines.forest import ForestModel
    from .baselines.mlp import load_mlp
    from .baselines.svc import SvcModel
    from .evaluation import evaluate
    from .nn.model import load_model, predict
    from .preprocess import apply_scaler, fit_scaler

    work = Path(args.work)
    table = _load_work_table(work)
    split = _load_split(work)
    path = _need_file(args.model_path, "model archive")
    doc = json.loads(path.read_text())
    if "architecture" in doc:
        model, _ = load_model(path)
        images = Path(args.images) if args.images else work / "qr"
        x, _ = _load_images(images, table.n_rows, model.config.input_dim)
        _, pred = predict(model, x[split.test])
    else:
        scaled = apply_scaler(table, fit_scaler(table, split.train, "standard"))
        kind = doc.get("kind")
        if kind == "random_forest":
            fitted = ForestModel.from_dict(doc)
        elif kind == "svc":
            fitted = SvcModel.from_dict(doc)
        elif kind == "mlp":
            fitted = load_mlp(path)
        else:
            raise CliError(EXIT_INPUT, f"{path}: unrecognised model archive")
        pred = fitted.predict(scaled.values[split.test])
    acc, f1, cm = evaluate(table.labels[split.test], pred, len(table.class_names), table.class_names)
    print(json.dumps({"accuracy": acc, "macro_f1": f1, "confusion": cm.counts.tolist()}))


def cmd_report(args):
    import csv

    from .evaluation import summarize_runs

    runs = Path(args.runs)
    if not runs.exists():
        raise CliError(EXIT_REPORT, f"runs file not found: {runs}")
    groups = summarize_runs(runs)
    if not groups:
        raise CliError(EXIT_REPORT, f"{runs} holds no completed runs")
    out = Path(args.out) if args.out else runs.with_name("comparison.csv")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "rank", "model", "encoding", "features", "accuracy", "macro_f1", "config_hash"])
        for dataset in sorted(groups):
            print(f"[{dataset}]")
            for rank, row in enumerate(groups[dataset], start=1):
                writer.writerow([dataset, rank, row["model"], row["encoding"], row["features"],
                                 row["accuracy"], row["macro_f1"], row["config_hash"]])
                print(f"  {rank}. {row['model']:<5} {row['encoding']:<6} acc {row['accuracy']:.4f}  F1 {row['macro_f1']:.4f}")
    print(f"wrote {out}")


def cmd_synth(args):
    from .pipeline import synthetic_baseline_runs, synthetic_cnn_run

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report, _ = synthetic_cnn_run(out, seed=args.seed, per_class=args.n, separation=args.sep,
                                  n_features=args.features, epochs=args.epochs, batch_size=args.batch,
                                  precision=args.precision,
                                  log=lambda r: log.info("epoch %(epoch)d train_loss %(train_loss).4f", r))
    print(f"cnn/qr: accuracy {report.accuracy:.4f}, macro F1 {report.macro_f1:.4f}")
    if not args.skip_baselines:
        for r in synthetic_baseline_runs(out, seed=args.seed):
            print(f"{r.model} (separation 6): accuracy {r.accuracy:.4f}")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="malbarcode", description="Barcode-image malware classification toolkit.",
                                     formatter_class=fmt)
    common = argparse.ArgumentParser(add_help=False, formatter_class=fmt)
    common.add_argument("--seed", type=int, default=42, help="master seed; each stage derives its own")
    common.add_argument("--threads", type=int, default=1, help="upper bound on worker threads")
    common.add_argument("--config", help="JSON file of option values; command-line flags take precedence")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], formatter_class=fmt, help="load a dataset into a work directory")
    p.add_argument("--dataset", choices=["cic", "bodmas", "synth"], default="synth", help="dataset kind")
    p.add_argument("--input", help="CIC CSV, or BODMAS feature file (CSV or FTBL)")
    p.add_argument("--meta", help="BODMAS metadata CSV")
    p.add_argument("--dim", type=int, default=2384, help="BODMAS feature vector length")
    p.add_argument("--per-class", type=int, default=None, help="rows to sample from each class")
    p.add_argument("--classes", type=int, default=4, help="synthetic class count")
    p.add_argument("--features", type=int, default=10, help="synthetic feature count")
    p.add_argument("--sep", type=float, default=3.0, help="synthetic class separation")
    p.add_argument("--n", type=int, default=400, help="synthetic rows per class")
    p.add_argument("--out", default="work", help="work directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("select", parents=[common], formatter_class=fmt, help="split rows and pick the top-K features")
    p.add_argument("--work", default="work", help="work directory")
    p.add_argument("--method", choices=["chi2", "anova"], default="chi2", help="feature scoring method")
    p.add_argument("--k", type=int, default=10, help="number of features to keep")
    p.add_argument("--ratios", type=_ratios, default=(0.70, 0.15, 0.15), help="train,val,test fractions")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("encode", parents=[common], formatter_class=fmt, help="render selected features as barcodes")
    p.add_argument("--work", default="work", help="work directory")
    p.add_argument("--code", choices=["qr", "aztec"], default="qr", help="symbology")
    p.add_argument("--k", type=int, default=None, help="use only the first K selected features")
    p.add_argument("--version", type=int, default=None, help="pinned QR version; if omitted, smallest that fits")
    p.add_argument("--precision", type=int, default=4, help="decimal places per value")
    p.add_argument("--box-size", type=int, default=5, help="QR pixels per module")
    p.add_argument("--module-size", type=int, default=5, help="Aztec pixels per module")
    p.add_argument("--border", type=int, default=1, help="quiet-zone width in modules")
    p.add_argument("--out", default=None, help="image directory; if omitted, <work>/<code>")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", parents=[common], formatter_class=fmt, help="train a CNN or a classic baseline")
    p.add_argument("--work", default="work", help="work directory")
    p.add_argument("--model", choices=["cnn", "rf", "mlp", "svc"], default="cnn", help="learner")
    p.add_argument("--images", default=None, help="encoded image directory; if omitted, <work>/qr")
    p.add_argument("--dim", type=int, default=128, help="CNN input side length")
    p.add_argument("--lr", type=float, default=1e-3, help="CNN learning rate")
    p.add_argument("--batch", type=int, default=64, help="CNN batch size")
    p.add_argument("--epochs", type=int, default=5, help="CNN epochs")
    p.add_argument("--optimizer", choices=["adam", "nadam", "rmsprop"], default="adam", help="CNN optimizer")
    p.add_argument("--patience", type=int, default=2, help="early-stopping patience")
    p.add_argument("--grid", default=None, help="JSON map of hyperparameter name to candidate list")
    p.add_argument("--trees", type=int, default=100, help="random forest size")
    p.add_argument("--criterion", choices=["gini", "entropy"], default="gini", help="tree split criterion")
    p.add_argument("--hidden", type=_int_list, default=(10, 10, 10), help="MLP hidden sizes, comma separated")
    p.add_argument("--max-iter", type=int, default=200, help="MLP epochs")
    p.add_argument("--solver", choices=["adam", "sgd"], default="adam", help="MLP optimizer")
    p.add_argument("--kernel", choices=["rbf", "poly"], default="rbf", help="SVC kernel")
    p.add_argument("--gamma", default="scale", help="SVC gamma: scale, auto or a number")
    p.add_argument("--dataset-name", default=None, help="dataset id in reports; if omitted, work dir name")
    p.add_argument("--out", default=None, help="report directory; if omitted, <work>/runs")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], formatter_class=fmt, help="score a saved model on the test split")
    p.add_argument("--work", default="work", help="work directory")
    p.add_argument("--model-path", required=True, help="model.json written by train")
    p.add_argument("--images", default=None, help="image directory for CNN models")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", parents=[common], formatter_class=fmt, help="rank completed runs per dataset")
    p.add_argument("--runs", default="work/runs/runs.csv", help="runs.csv to summarise")
    p.add_argument("--out", default=None, help="comparison CSV; if omitted, next to runs.csv")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", parents=[common], formatter_class=fmt, help="dataset-free end-to-end QR/CNN run")
    p.add_argument("--n", type=int, default=400, help="rows per class")
    p.add_argument("--features", type=int, default=10, help="feature count")
    p.add_argument("--sep", type=float, default=3.0, help="class separation")
    p.add_argument("--epochs", type=int, default=10, help="CNN epochs")
    p.add_argument("--batch", type=int, default=32, help="CNN batch size")
    p.add_argument("--precision", type=int, default=1, help="decimal places per payload value")
    p.add_argument("--skip-baselines", action="store_true", help="skip the separation-6 baseline runs")
    p.add_argument("--out", default="synth-run", help="output directory")
    p.set_defaults(func=cmd_synth)
    return parser


def _apply_config(parser, argv):
    """Re-parse with values from ``--config`` as defaults, so flags still win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    path = Path(args.config)
    if not path.exists():
        raise CliError(EXIT_INPUT, f"config file not found: {path}")
    values = {k.replace("-", "_"): v for k, v in json.loads(path.read_text()).items()}
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**values)
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(args.threads))
        args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except Exception as exc:
        from .errors import MalbarcodeError

        if isinstance(exc, (MalbarcodeError, OSError, ValueError)):
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        raise
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
