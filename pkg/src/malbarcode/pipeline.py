"""End-to-end stages shared by the CLI and the acceptance runs."""

import hashlib
import time

import numpy as np

from .barcode.aztec import aztec_encode
from .barcode.qr import qr_encode, smallest_version
from .barcode.raster import render_image, resize_image
from .baselines.forest import train_random_forest
from .baselines.mlp import train_mlp
from .baselines.svc import train_svc
from .dataset import SynthProfile, stratified_split, synth_generate
from .errors import ParameterError
from .evaluation import ExperimentReport, emit_report, evaluate
from .nn.model import CnnConfig, build_cnn, predict
from .nn.train import TrainConfig, train_cnn
from .preprocess import (
    anova_f_scores,
    apply_scaler,
    chi2_scores,
    fit_scaler,
    payload_length,
    select_k_best,
    serialize_payload,
)


def derive_seed(seed, stage):
    """Independent 32-bit seed for a named stage."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def select_features(table, rows, method="chi2", k=10):
    """Fit a min-max scaler on ``rows``, score, and keep the ``k`` best columns."""
    params = fit_scaler(table, rows, "minmax")
    scaled = apply_scaler(table, params)
    scores = chi2_scores(scaled, rows) if method == "chi2" else anova_f_scores(scaled, rows)
    indices = select_k_best(scores, k)
    return scaled.select_columns(indices), indices, scores


def pinned_qr_version(k, precision=4, ec_level="L"):
    return smallest_version(payload_length(k, precision), ec_level)


def encode_row(values, symbology="qr", version=None, precision=4, feature_indices=()):
    payload = serialize_payload(np.clip(values, 0.0, 1.0), precision, feature_indices)
    if symbology == "qr":
        return qr_encode(payload, version=version)
    if symbology == "aztec":
        return aztec_encode(payload)
    raise ParameterError(f"unknown symbology {symbology!r}")


def encode_images(values, symbology="qr", version=None, precision=4, box_size=5, border=1, target=128):
    """Barcode images as uint8 (N, target, target); also returns each symbol's size."""
    images, sizes = [], []
    for row in values:
        matrix = encode_row(row, symbology, version, precision)
        raster = render_image(matrix, box_size, border)
        if target:
            raster = resize_image(raster, target)
        images.append(raster.pixels)
        sizes.append(matrix.size)
    d = target or 0
    stacked = np.stack(images) if images else np.zeros((0, d, d), dtype=np.uint8)
    return stacked, sizes


def run_cnn_experiment(table, split, out_dir=None, symbology="qr", k=10, precision=4,
                       target=128, train_cfg=None, seed=0, dataset="synthetic", method="chi2",
                       log=None):
    """Select features, encode them as barcodes, train the CNN and score the test split."""
    train_cfg = train_cfg or TrainConfig(seed=derive_seed(seed, "train"))
    start = time.perf_counter()
    selected, indices, _ = select_features(table, split.train, method, k)
    version = pinned_qr_version(k, precision) if symbology == "qr" else None
    images, sizes = encode_images(selected.values, symbology, version, precision, target=target)
    x = images.astype(np.float32) / np.float32(255.0)
    model = build_cnn(CnnConfig(target, len(table.class_names)), seed=derive_seed(seed, "init"))
    model, history = train_cnn(model, x, table.labels, split, train_cfg, log=log)
    _, pred = predict(model, x[split.test])
    acc, f1, cm = evaluate(table.labels[split.test], pred, len(table.class_names), table.class_names)
    config = {
        "symbology": symbology, "version": version, "symbol_size": sizes[0] if sizes else None,
        "precision": precision, "k": k, "method": method, "feature_indices": indices,
        "image_dim": target, "train": train_cfg.to_dict(),
    }
    report = ExperimentReport(
        dataset=dataset, model="cnn", config=config, accuracy=acc, macro_f1=f1, confusion=cm,
        seed=seed, encoding=symbology, features=k, history=history,
        wall_clock=time.perf_counter() - start,
        selection_metric="validation_accuracy" if len(split.validation) else "test_accuracy",
        selection_score=history[-1]["val_acc"] if len(split.validation) and history else acc,
    )
    if out_dir is not None:
        emit_report(report, out_dir)
    return report, model


def run_baseline(table, split, model="rf", out_dir=None, seed=0, dataset="synthetic", **params):
    """Train one classic learner on standard-scaled raw features."""
    start = time.perf_counter()
    scaled = apply_scaler(table, fit_scaler(table, split.train, "standard"))
    notes = []
    if model == "rf":
        fitted = train_random_forest(scaled, split.train, seed=seed, **params)
    elif model == "mlp":
        fitted = train_mlp(scaled, split.train, seed=seed, **params)
    elif model == "svc":
        fitted = train_svc(scaled, split.train, seed=seed, **params)
        if fitted.subsampled:
            notes.append(f"SVC trained on a {fitted.n_train_rows}-row subsample")
    else:
        raise ParameterError(f"unknown baseline {model!r}")
    pred = fitted.predict(scaled.values[split.test])
    acc, f1, cm = evaluate(table.labels[split.test], pred, len(table.class_names), table.class_names)
    report = ExperimentReport(
        dataset=dataset, model=model, config=dict(params), accuracy=acc, macro_f1=f1, confusion=cm,
        seed=seed, encoding="raw", features=table.n_features, wall_clock=time.perf_counter() - start,
        notes=notes,
    )
    if out_dir is not None:
        emit_report(report, out_dir)
    return report, fitted


def synthetic_cnn_run(out_dir, seed=0, per_class=400, separation=3.0, n_features=10, epochs=10,
                      batch_size=32, precision=1, log=None):
    """The dataset-free QR/CNN run: 4 Gaussian classes, 70:15:15 split.

    One decimal place keeps the payload short, so the symbol has fewer and
    larger modules at 128 px and fewer digits that carry no class signal.
    """
    profile = SynthProfile(4, n_features, separation, derive_seed(seed, "synth"), per_class)
    table = synth_generate(profile)
    split = stratified_split(table, (0.70, 0.15, 0.15), derive_seed(seed, "split"))
    cfg = TrainConfig(1e-3, batch_size, epochs, "adam", 2, derive_seed(seed, "train"))
    return run_cnn_experiment(table, split, out_dir, "qr", k=n_features, precision=precision,
                              train_cfg=cfg, seed=seed, dataset="synthetic", log=log)


def synthetic_baseline_runs(out_dir, seed=0, per_class=500):
    """All three baselines on two well separated single-feature classes."""
    table = synth_generate(SynthProfile(2, 1, 6.0, derive_seed(seed, "synth-baselines"), per_class))
    split = stratified_split(table, (0.7, 0.0, 0.3), derive_seed(seed, "split-baselines"))
    reports = []
    for model, params in (("rf", {"n_estimators": 100}), ("mlp", {}), ("svc", {})):
        report, _ = run_baseline(table, split, model, out_dir, seed, "synthetic-sep6", **params)
        reports.append(report)
    return reports
