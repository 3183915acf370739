"""Feature tables: loading, validation, subsampling, splitting and synthetic data."""

import csv
from dataclasses import dataclass
import json
import math
from pathlib import Path
import struct

import numpy as np

from .errors import (
    AlignmentError,
    CapacityError,
    LabelError,
    ParameterError,
    RowParseError,
    SchemaError,
    StratificationError,
)

CIC_FEATURES = (
    "pslist.nproc", "pslist.nppid", "pslist.avg_threads", "pslist.nprocs64bit",
    "pslist.avg_handlers", "dlllist.ndlls", "dlllist.avg_dlls_per_proc",
    "handles.nhandles", "handles.avg_handles_per_proc", "handles.nport",
    "handles.nfile", "handles.nevent", "handles.ndesktop", "handles.nkey",
    "handles.nthread", "handles.ndirectory", "handles.nsemaphore", "handles.ntimer",
    "handles.nsection", "handles.nmutant", "ldrmodules.not_in_load",
    "ldrmodules.not_in_init", "ldrmodules.not_in_mem", "ldrmodules.not_in_load_avg",
    "ldrmodules.not_in_init_avg", "ldrmodules.not_in_mem_avg", "malfind.ninjections",
    "malfind.commitCharge", "malfind.protection", "malfind.uniqueInjections",
    "psxview.not_in_pslist", "psxview.not_in_eprocess_pool",
    "psxview.not_in_ethread_pool", "psxview.not_in_pspcid_list",
    "psxview.not_in_csrss_handles", "psxview.not_in_session",
    "psxview.not_in_deskthrd", "psxview.not_in_pslist_false_avg",
    "psxview.not_in_eprocess_pool_false_avg", "psxview.not_in_ethread_pool_false_avg",
    "psxview.not_in_pspcid_list_false_avg", "psxview.not_in_csrss_handles_false_avg",
    "psxview.not_in_session_false_avg", "psxview.not_in_deskthrd_false_avg",
    "modules.nmodules", "svcscan.nservices", "svcscan.kernel_drivers",
    "svcscan.fs_drivers", "svcscan.process_services",
    "svcscan.shared_process_services", "svcscan.interactive_process_services",
    "svcscan.nactive", "callbacks.ncallbacks", "callbacks.nanonymous",
    "callbacks.ngeneric",
)
CIC_CLASSES = ("benign", "ransomware", "spyware", "trojan")
# the published CSV carries a coarse benign/malware column next to the category
_CIC_AUX_COLUMNS = ("Class",)
_CIC_LABEL_COLUMNS = ("label", "Category")

BODMAS_CLASSES = ("benign", "sfone", "wacatac", "upatre")
BODMAS_DIM = 2384

FTBL_MAGIC = b"FTBL"
_FTBL_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class FeatureTable:
    column_names: tuple
    values: np.ndarray
    labels: np.ndarray
    class_names: tuple

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim == 1 and values.size == 0:
            values = values.reshape(0, len(self.column_names))
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if values.ndim != 2:
            raise SchemaError(f"values must be 2-D, got shape {values.shape}")
        if values.shape[0] != labels.shape[0]:
            raise SchemaError(f"{values.shape[0]} rows but {labels.shape[0]} labels")
        if values.shape[1] != len(self.column_names):
            raise SchemaError(f"{values.shape[1]} columns but {len(self.column_names)} names")
        if labels.size and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            raise LabelError(f"label indices must lie in [0, {len(self.class_names)})")
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise RowParseError(int(row), f"non-finite value in column {self.column_names[col]!r}")
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    def take(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        return FeatureTable(self.column_names, self.values[rows], self.labels[rows], self.class_names)

    def select_columns(self, indices):
        indices = list(indices)
        return FeatureTable(
            tuple(self.column_names[i] for i in indices),
            self.values[:, indices],
            self.labels,
            self.class_names,
        )

    def with_values(self, values):
        return FeatureTable(self.column_names, values, self.labels, self.class_names)

    def class_counts(self):
        return np.bincount(self.labels, minlength=len(self.class_names))


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int

    def to_dict(self):
        return {
            "train": self.train.tolist(),
            "validation": self.validation.tolist(),
            "test": self.test.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["train"], dtype=np.int64),
            np.asarray(d["validation"], dtype=np.int64),
            np.asarray(d["test"], dtype=np.int64),
            int(d["seed"]),
        )


@dataclass(frozen=True)
class SynthProfile:
    n_classes: int = 4
    n_features: int = 10
    class_separation: float = 3.0
    seed: int = 0
    n_per_class: int = 100

    def __post_init__(self):
        if self.n_classes < 2:
            raise ParameterError("n_classes must be >= 2")
        if self.n_features < 1:
            raise ParameterError("n_features must be >= 1")
        if not self.class_separation >= 0:
            raise ParameterError("class_separation must be >= 0")
        if self.n_per_class < 0:
            raise ParameterError("n_per_class must be >= 0")


def _parse_row(cells, row_index, columns=None):
    try:
        row = np.array(cells, dtype=np.float64)
    except ValueError:
        for j, cell in enumerate(cells):
            try:
                float(cell)
            except ValueError:
                where = f"column {columns[j]!r}" if columns else f"column {j}"
                raise RowParseError(row_index, f"cannot parse {cell!r} in {where}") from None
        raise
    if not np.all(np.isfinite(row)):
        j = int(np.flatnonzero(~np.isfinite(row))[0])
        where = f"column {columns[j]!r}" if columns else f"column {j}"
        raise RowParseError(row_index, f"non-finite value in {where}")
    return row


def _class_index(text, class_names, row_index):
    key = text.strip().lower()
    for i, name in enumerate(class_names):
        if key == name.lower():
            return i
    # published CIC categories look like "Ransomware-Ako-<hash>"
    head = key.split("-", 1)[0]
    for i, name in enumerate(class_names):
        if head == name.lower():
            return i
    raise LabelError(f"row {row_index}: unknown label {text!r}")


def load_cic_csv(path):
    """Load the 55-feature memory-analysis CSV.

    The label column may be called ``label`` or ``Category``; category values
    such as ``Trojan-Zeus-...`` map to their leading family word.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: missing header row") from None
        label_cols = [c for c in _CIC_LABEL_COLUMNS if c in header]
        if not label_cols:
            raise SchemaError(f"{path}: no label column (expected one of {_CIC_LABEL_COLUMNS})")
        label_col = header.index(label_cols[0])
        known = set(CIC_FEATURES) | set(_CIC_LABEL_COLUMNS) | set(_CIC_AUX_COLUMNS)
        for name in header:
            if name not in known:
                raise SchemaError(f"{path}: unexpected column {name!r}")
        for name in CIC_FEATURES:
            if name not in header:
                raise SchemaError(f"{path}: missing feature column {name!r}")
        order = [header.index(name) for name in CIC_FEATURES]
        rows, labels = [], []
        for i, cells in enumerate(reader):
            if not cells:
                continue
            if len(cells) != len(header):
                raise RowParseError(i, f"expected {len(header)} cells, found {len(cells)}")
            rows.append(_parse_row([cells[j] for j in order], i, CIC_FEATURES))
            labels.append(_class_index(cells[label_col], CIC_CLASSES, i))
    values = np.vstack(rows) if rows else np.zeros((0, len(CIC_FEATURES)))
    return FeatureTable(CIC_FEATURES, values, labels, CIC_CLASSES)


def write_ftbl(values, path):
    values = np.ascontiguousarray(values, dtype="<f4")
    rows, cols = values.shape
    with open(path, "wb") as fh:
        fh.write(_FTBL_HEADER.pack(FTBL_MAGIC, rows, cols, 0))
        fh.write(values.tobytes())


def read_ftbl(path):
    data = Path(path).read_bytes()
    if len(data) < _FTBL_HEADER.size:
        raise SchemaError(f"{path}: file shorter than the FTBL header")
    magic, rows, cols, _ = _FTBL_HEADER.unpack_from(data)
    if magic != FTBL_MAGIC:
        raise SchemaError(f"{path}: bad magic {magic!r}")
    expected = _FTBL_HEADER.size + 4 * rows * cols
    if len(data) != expected:
        raise SchemaError(f"{path}: expected {expected} bytes for {rows}x{cols}, found {len(data)}")
    return np.frombuffer(data, dtype="<f4", offset=_FTBL_HEADER.size).reshape(rows, cols).astype(np.float64)


def _read_feature_rows(path, dim):
    path = Path(path)
    with open(path, "rb") as fh:
        is_ftbl = fh.read(4) == FTBL_MAGIC
    if is_ftbl:
        values = read_ftbl(path)
        if values.shape[1] != dim:
            raise SchemaError(f"{path}: rows have {values.shape[1]} values, expected {dim}")
        if not np.all(np.isfinite(values)):
            raise RowParseError(int(np.argwhere(~np.isfinite(values))[0, 0]), "non-finite value")
        return values
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, cells in enumerate(csv.reader(fh)):
            if not cells:
                continue
            if i == 0:
                try:
                    float(cells[0])
                except ValueError:
                    continue  # header row
            if len(cells) != dim:
                raise SchemaError(f"{path}: row {len(rows)} has {len(cells)} values, expected {dim}")
            rows.append(_parse_row(cells, len(rows)))
    return np.vstack(rows) if rows else np.zeros((0, dim))


def _read_bodmas_meta(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "label" in fields:
            key = "label"
        elif "family" in fields:
            key = "family"
        else:
            raise SchemaError(f"{path}: metadata needs a 'label' or 'family' column")
        entries = []
        for pos, rec in enumerate(reader):
            idx = int(rec["row_index"]) if rec.get("row_index") not in (None, "") else pos
            name = (rec[key] or "").strip().lower()
            entries.append((idx, name or "benign"))
    return entries


def load_bodmas(features_path, meta_path, dim=BODMAS_DIM):
    """Load exported PE feature vectors, keeping benign rows and three families.

    ``features_path`` is a CSV of ``dim`` floats per row or an FTBL file;
    ``meta_path`` is a CSV with ``row_index,label`` (or a ``family`` column,
    where an empty family means benign).
    """
    values = _read_feature_rows(features_path, dim)
    meta = _read_bodmas_meta(meta_path)
    if len(meta) != values.shape[0]:
        raise AlignmentError(f"{len(meta)} metadata rows for {values.shape[0]} feature rows")
    keep, labels = [], []
    for idx, name in meta:
        if not 0 <= idx < values.shape[0]:
            raise AlignmentError(f"metadata row_index {idx} out of range")
        if name in BODMAS_CLASSES:
            keep.append(idx)
            labels.append(BODMAS_CLASSES.index(name))
    columns = tuple(f"f{j}" for j in range(dim))
    return FeatureTable(columns, values[keep], labels, BODMAS_CLASSES)


def subsample_per_class(table, n_per_class, seed):
    """Draw the requested number of rows from each class without replacement.

    ``n_per_class`` maps class name or index to a count; an int applies the
    same count to every class.
    """
    if isinstance(n_per_class, int):
        n_per_class = {c: n_per_class for c in range(len(table.class_names))}
    rng = np.random.default_rng(seed)
    picked = []
    for key, count in sorted(n_per_class.items(), key=lambda kv: _class_key(table, kv[0])):
        c = _class_key(table, key)
        pool = np.flatnonzero(table.labels == c)
        if count > pool.size:
            raise CapacityError(f"class {table.class_names[c]!r} has {pool.size} rows, {count} requested")
        picked.append(rng.choice(pool, size=count, replace=False))
    rows = np.concatenate(picked) if picked else np.zeros(0, dtype=np.int64)
    return table.take(rng.permutation(rows))


def _class_key(table, key):
    if isinstance(key, str):
        if key not in table.class_names:
            raise LabelError(f"unknown class {key!r}")
        return table.class_names.index(key)
    if not 0 <= key < len(table.class_names):
        raise LabelError(f"class index {key} out of range")
    return int(key)


def stratified_split(table, ratios, seed):
    """Per-class split into train/validation/test; rounding leftovers go to train."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) < 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ParameterError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    labels = table.labels if isinstance(table, FeatureTable) else np.asarray(table, dtype=np.int64)
    n_parts = sum(r > 0 for r in ratios)
    rng = np.random.default_rng(seed)
    parts = ([], [], [])
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        n = idx.size
        if n < n_parts:
            raise StratificationError(f"class {c} has {n} samples but {n_parts} parts are requested")
        n_val = math.floor(n * ratios[1] + 1e-9)
        n_test = math.floor(n * ratios[2] + 1e-9)
        # every nonzero part gets at least one sample when the class allows it
        if ratios[1] > 0:
            n_val = max(n_val, 1)
        if ratios[2] > 0:
            n_test = max(n_test, 1)
        if ratios[0] > 0 and n - n_val - n_test < 1:
            if n_val >= n_test:
                n_val -= 1
            else:
                n_test -= 1
        n_train = n - n_val - n_test
        parts[0].append(idx[:n_train])
        parts[1].append(idx[n_train:n_train + n_val])
        parts[2].append(idx[n_train + n_val:])
    out = [np.sort(np.concatenate(p)) if p else np.zeros(0, dtype=np.int64) for p in parts]
    return SplitIndices(out[0], out[1], out[2], int(seed))


def synth_generate(profile):
    """Isotropic unit-variance Gaussian blobs; class c is centred at c * separation."""
    rng = np.random.default_rng(profile.seed)
    n = profile.n_per_class
    labels = np.repeat(np.arange(profile.n_classes), n)
    values = rng.standard_normal((labels.size, profile.n_features))
    values += labels[:, None] * profile.class_separation
    order = rng.permutation(labels.size)
    columns = tuple(f"f{j}" for j in range(profile.n_features))
    classes = tuple(f"class_{c}" for c in range(profile.n_classes))
    return FeatureTable(columns, values[order], labels[order], classes)


def write_table_csv(table, path):
    """Header of column names plus ``label``; values use shortest round-trip repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(table.column_names) + ["label"])
        for row, label in zip(table.values, table.labels):
            writer.writerow([repr(float(v)) for v in row] + [table.class_names[label]])


def read_table_csv(path, class_names=None):
    """Inverse of :func:`write_table_csv`; class order defaults to sorted label names."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise SchemaError(f"{path}: final column must be 'label'")
        columns = tuple(header[:-1])
        rows, names = [], []
        for i, cells in enumerate(reader):
            if not cells:
                continue
            if len(cells) != len(header):
                raise RowParseError(i, f"expected {len(header)} cells, found {len(cells)}")
            rows.append(_parse_row(cells[:-1], i, columns))
            names.append(cells[-1])
    if class_names is None:
        class_names = sorted(set(names))
    lookup = {name: i for i, name in enumerate(class_names)}
    labels = []
    for i, name in enumerate(names):
        if name not in lookup:
            raise LabelError(f"row {i}: unknown label {name!r}")
        labels.append(lookup[name])
    values = np.vstack(rows) if rows else np.zeros((0, len(columns)))
    return FeatureTable(columns, values, labels, tuple(class_names))


def save_table(table, path):
    """FTBL values plus a ``.meta.csv`` of labels and a ``.json`` of names."""
    path = Path(path)
    write_ftbl(table.values, path)
    with open(path.with_suffix(".meta.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_index", "label"])
        for i, label in enumerate(table.labels):
            writer.writerow([i, table.class_names[label]])
    path.with_suffix(".json").write_text(
        json.dumps({"column_names": list(table.column_names), "class_names": list(table.class_names)}, indent=1)
    )


def load_table(path):
    path = Path(path)
    names = json.loads(path.with_suffix(".json").read_text())
    values = read_ftbl(path)
    meta = _read_bodmas_meta(path.with_suffix(".meta.csv"))
    if len(meta) != values.shape[0]:
        raise AlignmentError(f"{len(meta)} metadata rows for {values.shape[0]} feature rows")
    lookup = {n.lower(): i for i, n in enumerate(names["class_names"])}
    labels = np.empty(values.shape[0], dtype=np.int64)
    for idx, name in meta:
        if name not in lookup:
            raise LabelError(f"unknown label {name!r}")
        labels[idx] = lookup[name]
    return FeatureTable(names["column_names"], values, labels, names["class_names"])
