import hashlib

import numpy as np
import pytest

from malbarcode.barcode.qr import qr_encode
from malbarcode.barcode.raster import (
    RasterImage,
    read_manifest,
    read_pgm,
    render_image,
    resize_image,
    write_manifest,
    write_pgm,
)
from malbarcode.errors import ParameterError, StructureError

TEN_FEATURES = b"0.1234," * 9 + b"0.1234"

# digests of the reference library's area (shrink) resize of the same raster
AREA_128_SHA256 = "7a7a13285a44cd3d5b83915f7b9a79bd2ec30237342cd319afb6df4d62b6ccae"


def _digest(pixels):
    return hashlib.sha256(np.ascontiguousarray(pixels).tobytes()).hexdigest()


def test_render_geometry_and_colours():
    m = qr_encode(TEN_FEATURES, version=4)
    r = render_image(m, box_size=5, border=1)
    assert (r.width, r.height) == (175, 175)
    assert set(np.unique(r.pixels)) == {0, 255}
    assert np.all(r.pixels[:5] == 255)
    assert np.all(r.pixels[5:40, 5:10] == 0)  # left edge of the top-left finder


def test_shrink_matches_reference_area_filter():
    r = render_image(qr_encode(TEN_FEATURES, version=4))
    assert _digest(resize_image(r, 128).pixels) == AREA_128_SHA256


def test_shrink_matches_opencv_when_available():
    cv2 = pytest.importorskip("cv2")
    r = render_image(qr_encode(b"another payload for the area check", version=4), 7, 2)
    want = cv2.resize(r.pixels, (100, 100), interpolation=cv2.INTER_AREA)
    assert np.array_equal(resize_image(r, 100).pixels, want)


def test_grow_is_close_to_opencv_bilinear():
    cv2 = pytest.importorskip("cv2")
    r = render_image(qr_encode(b"HELLO WORLD"))
    want = cv2.resize(r.pixels, (128, 128), interpolation=cv2.INTER_LINEAR)
    assert np.abs(resize_image(r, 128).pixels.astype(int) - want).max() <= 1


def test_resize_preserves_constant_image():
    img = RasterImage(np.full((50, 70), 200, dtype=np.uint8))
    assert np.all(resize_image(img, 32).pixels == 200)
    assert np.all(resize_image(img, 90).pixels == 200)


def test_same_size_resize_is_a_copy():
    img = RasterImage(np.arange(64, dtype=np.uint8).reshape(8, 8))
    out = resize_image(img, 8)
    assert np.array_equal(out.pixels, img.pixels) and out.pixels is not img.pixels


def test_tiny_target_rejected():
    with pytest.raises(ParameterError):
        resize_image(RasterImage(np.zeros((20, 20))), 7)


def test_bad_render_arguments():
    with pytest.raises(ParameterError):
        render_image(np.zeros((21, 21), dtype=bool), box_size=0)
    with pytest.raises(ParameterError):
        render_image(np.zeros((21, 21), dtype=bool), border=-1)


def test_float_conversion():
    f = RasterImage(np.array([[0, 255]], dtype=np.uint8)).to_float()
    assert f.dtype == np.float32 and f.tolist() == [[0.0, 1.0]]


def test_pgm_round_trip(tmp_path):
    img = RasterImage(np.random.default_rng(0).integers(0, 256, (13, 17), dtype=np.uint8))
    path = write_pgm(img, tmp_path / "x.pgm")
    assert path.read_bytes().startswith(b"P5\n17 13\n255\n")
    assert np.array_equal(read_pgm(path).pixels, img.pixels)


def test_pgm_with_comment(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
    assert read_pgm(p).pixels.tolist() == [[0, 255]]


def test_pgm_rejects_other_formats(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(StructureError):
        read_pgm(p)
    p.write_bytes(b"P5\n4 4\n255\n\x00")
    with pytest.raises(StructureError):
        read_pgm(p)


def test_manifest_round_trip(tmp_path):
    recs = [{"index": 0, "label": 2, "file": "0.pgm"}, {"index": 1, "label": 0, "file": "1.pgm"}]
    write_manifest(recs, tmp_path / "m.jsonl")
    assert read_manifest(tmp_path / "m.jsonl") == recs
