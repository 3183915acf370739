"""Grayscale rasters of module matrices: rendering, resizing and PGM files."""

from dataclasses import dataclass
import json
from pathlib import Path

import numpy as np

from ..errors import ParameterError, StructureError

DARK = 0
LIGHT = 255


@dataclass
class RasterImage:
    pixels: np.ndarray  # uint8, 0 = dark, 255 = light

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 2:
            raise ValueError(f"raster must be 2-D, got shape {self.pixels.shape}")

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    def to_float(self):
        """Pixels scaled to [0, 1] as float32, the CNN input convention."""
        return self.pixels.astype(np.float32) / np.float32(255.0)


def render_image(matrix, box_size=5, border=1):
    """Draw every module as a ``box_size`` square, inside ``border`` light modules."""
    if box_size < 1:
        raise ParameterError("box_size must be >= 1")
    if border < 0:
        raise ParameterError("border must be >= 0")
    bits = np.asarray(getattr(matrix, "bits", matrix), dtype=bool)
    padded = np.pad(bits, border, constant_values=False)
    pixels = np.where(padded, DARK, LIGHT).astype(np.uint8)
    return RasterImage(np.repeat(np.repeat(pixels, box_size, 0), box_size, 1))


def _area_weights(src, dst):
    """(dst, src) matrix averaging the source cells each output cell covers."""
    scale = src / dst
    edges = np.arange(dst + 1) * scale
    lo, hi = edges[:-1, None], edges[1:, None]
    j = np.arange(src)[None, :]
    overlap = np.clip(np.minimum(hi, j + 1) - np.maximum(lo, j), 0.0, None)
    return overlap / scale


def _bilinear_weights(src, dst):
    """(dst, src) interpolation matrix with pixel-centre alignment."""
    pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    pos = np.clip(pos, 0, src - 1)
    i0 = np.floor(pos).astype(int)
    i1 = np.minimum(i0 + 1, src - 1)
    frac = pos - i0
    w = np.zeros((dst, src))
    rows = np.arange(dst)
    np.add.at(w, (rows, i0), 1 - frac)
    np.add.at(w, (rows, i1), frac)
    return w


def _axis_weights(src, dst):
    return _area_weights(src, dst) if dst < src else _bilinear_weights(src, dst)


def resize_image(image, target):
    """Resize to ``target`` x ``target``: box-filter when shrinking, bilinear when growing."""
    if target < 8:
        raise ParameterError("resize target must be >= 8")
    pixels = image.pixels
    if pixels.shape == (target, target):
        return RasterImage(pixels.copy())
    wr = _axis_weights(pixels.shape[0], target)
    wc = _axis_weights(pixels.shape[1], target)
    out = wr @ pixels.astype(np.float64) @ wc.T
    return RasterImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def write_pgm(image, path):
    path = Path(path)
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    path.write_bytes(header + np.ascontiguousarray(image.pixels).tobytes())
    return path


def read_pgm(path):
    data = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise StructureError(f"{path}: truncated PGM header")
        fields.append(data[start:pos])
    magic, width, height, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if magic != b"P5" or maxval != 255:
        raise StructureError(f"{path}: only 8-bit binary PGM (P5, maxval 255) is supported")
    body = data[pos + 1:pos + 1 + width * height]
    if len(body) != width * height:
        raise StructureError(f"{path}: expected {width * height} pixel bytes, found {len(body)}")
    return RasterImage(np.frombuffer(body, dtype=np.uint8).reshape(height, width).copy())


def write_manifest(records, path):
    """JSON lines, one record per encoded sample."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_manifest(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
