"""Aztec Code encoder using binary-shift (byte) encoding, and a clean-symbol decoder.

Symbol selection walks compact symbols with 1-4 layers, then full-range
symbols with 4-32 layers, and keeps the first whose data capacity fits the
payload while leaving at least 23% of the codewords plus three for error
correction. Full-range symbols with 1-3 layers are never selected because a
compact symbol of the same side length holds more.
"""

from functools import lru_cache
import math

import numpy as np

from ..errors import CapacityError, CorruptionError, StructureError
from .gf import AZTEC_GF256_POLY, get_field, rs_encode, syndromes
from .matrix import ModuleMatrix

MIN_EC_FRACTION = 0.23
MIN_EC_EXTRA = 3
MAX_COMPACT_LAYERS = 4
MAX_LAYERS = 32
_BINARY_SHIFT = 31  # B/S code in upper mode
_MAX_SHIFT_LEN = 31 + 2047


def word_size(layers):
    if layers <= 2:
        return 6
    if layers <= 8:
        return 8
    if layers <= 22:
        return 10
    return 12


def _field_for(wsize):
    order = 1 << wsize
    if order == 256:
        return get_field(256, AZTEC_GF256_POLY)
    return get_field(order)


def total_bits(layers, compact):
    return ((88 if compact else 112) + 16 * layers) * layers


def base_size(layers, compact):
    return (11 if compact else 14) + 4 * layers


def matrix_size(layers, compact):
    base = base_size(layers, compact)
    if compact:
        return base
    return base + 1 + 2 * ((base // 2 - 1) // 15)


def _candidates():
    for layers in range(1, MAX_COMPACT_LAYERS + 1):
        yield True, layers
    for layers in range(4, MAX_LAYERS + 1):
        yield False, layers


def max_data_words(layers, compact):
    words = total_bits(layers, compact) // word_size(layers)
    limit = words - math.ceil(MIN_EC_FRACTION * words) - MIN_EC_EXTRA
    return min(limit, 64 if compact else 2048)


def _high_level_bits(payload):
    """Upper mode start, then one binary shift per <= 2078-byte chunk."""
    bits = []

    def append(value, n):
        bits.extend((value >> (n - 1 - i)) & 1 for i in range(n))

    for start in range(0, len(payload), _MAX_SHIFT_LEN):
        chunk = payload[start:start + _MAX_SHIFT_LEN]
        append(_BINARY_SHIFT, 5)
        if len(chunk) <= 31:
            append(len(chunk), 5)
        else:
            append(0, 5)
            append(len(chunk) - 31, 11)
        for b in chunk:
            append(b, 8)
    return bits


def _stuff(bits, wsize):
    """Split into codewords, avoiding all-zero and all-one words.

    A word whose first ``wsize-1`` bits are all equal gets its last bit
    forced to the complement, and the displaced bit starts the next word.
    The final partial word is padded with ones.
    """
    n = len(bits)
    if n == 0:
        return [(1 << wsize) - 2]
    words = []
    mask = (1 << wsize) - 2
    i = 0
    while i < n:
        word = 0
        for j in range(wsize):
            if i + j >= n or bits[i + j]:
                word |= 1 << (wsize - 1 - j)
        if word & mask == mask:
            words.append(word & mask)
            i += wsize - 1
        elif word & mask == 0:
            words.append(word | 1)
            i += wsize - 1
        else:
            words.append(word)
            i += wsize
    return words


def _unstuff(words, wsize):
    bits = []
    top = (1 << (wsize - 1)) - 1
    for w in words:
        head = w >> 1
        n = wsize - 1 if head in (0, top) else wsize
        src = head if n == wsize - 1 else w
        bits.extend((src >> (n - 1 - i)) & 1 for i in range(n))
    return bits


def _word_bits(words, wsize):
    out = []
    for w in words:
        out.extend((w >> (wsize - 1 - i)) & 1 for i in range(wsize))
    return out


def _mode_message(compact, layers, n_data):
    field = get_field(16)
    if compact:
        value, n_words, n_check = ((layers - 1) << 6) | (n_data - 1), 2, 5
    else:
        value, n_words, n_check = ((layers - 1) << 11) | (n_data - 1), 4, 6
    words = [(value >> (4 * (n_words - 1 - i))) & 0xF for i in range(n_words)]
    return _word_bits(words + rs_encode(words, n_check, field, first_root=1), 4)


@lru_cache(maxsize=None)
def _alignment_map(layers, compact):
    base = base_size(layers, compact)
    if compact:
        return list(range(base))
    size = matrix_size(layers, compact)
    amap = [0] * base
    orig_center, center = base // 2, size // 2
    for i in range(orig_center):
        offset = i + i // 15
        amap[orig_center - i - 1] = center - offset - 1
        amap[orig_center + i] = center + offset + 1
    return amap


@lru_cache(maxsize=None)
def _data_positions(layers, compact):
    """(rows, cols) of each message bit, innermost data layer last."""
    amap = _alignment_map(layers, compact)
    base = base_size(layers, compact)
    n = total_bits(layers, compact)
    rows = np.empty(n, dtype=np.intp)
    cols = np.empty(n, dtype=np.intp)
    row_offset = 0
    for i in range(layers):
        row_size = (layers - i) * 4 + (9 if compact else 12)
        for j in range(row_size):
            col_offset = j * 2
            for k in range(2):
                # (column, row) pairs for the four sides of this layer
                sides = (
                    (amap[i * 2 + k], amap[i * 2 + j]),
                    (amap[i * 2 + j], amap[base - 1 - i * 2 - k]),
                    (amap[base - 1 - i * 2 - k], amap[base - 1 - i * 2 - j]),
                    (amap[base - 1 - i * 2 - j], amap[i * 2 + k]),
                )
                for s, (x, y) in enumerate(sides):
                    idx = row_offset + row_size * 2 * s + col_offset + k
                    rows[idx] = y
                    cols[idx] = x
        row_offset += row_size * 8
    return rows, cols


def _mode_positions(size, compact):
    center = size // 2
    n = 28 if compact else 40
    pos = [None] * n
    if compact:
        for i in range(7):
            off = center - 3 + i
            pos[i] = (center - 5, off)
            pos[i + 7] = (off, center + 5)
            pos[20 - i] = (center + 5, off)
            pos[27 - i] = (off, center - 5)
    else:
        for i in range(10):
            off = center - 5 + i + i // 5
            pos[i] = (center - 7, off)
            pos[i + 10] = (off, center + 7)
            pos[29 - i] = (center + 7, off)
            pos[39 - i] = (off, center - 7)
    return pos


@lru_cache(maxsize=None)
def _finder_template(layers, compact):
    """Bullseye, orientation marks and reference grid: (dark, fixed-mask)."""
    size = matrix_size(layers, compact)
    dark = np.zeros((size, size), dtype=bool)
    fixed = np.zeros((size, size), dtype=bool)
    center = size // 2
    radius = 5 if compact else 7

    if not compact:
        # reference grid lines every 16 modules through the center
        base = base_size(layers, compact)
        j = 0
        for i in range(0, base // 2 - 1, 15):
            for line in (center - j, center + j):
                fixed[line, :] = True
                fixed[:, line] = True
                for k in range(center & 1, size, 2):
                    dark[line, k] = True
                    dark[k, line] = True
            j += 16
    # bullseye: rings at even distance are dark, out to radius - 1
    for r in range(-radius + 1, radius):
        for c in range(-radius + 1, radius):
            d = max(abs(r), abs(c))
            fixed[center + r, center + c] = True
            dark[center + r, center + c] = d % 2 == 0
    # mode-message ring (radius) is handled separately; orientation marks sit on it
    marks = [
        (center - radius, center - radius), (center - radius, center - radius + 1),
        (center - radius + 1, center - radius), (center - radius, center + radius),
        (center - radius + 1, center + radius), (center + radius - 1, center + radius),
    ]
    ring = set()
    for r in range(-radius, radius + 1):
        for c in (-radius, radius):
            ring.add((center + r, center + c))
            ring.add((center + c, center + r))
    for pos in ring:
        fixed[pos] = True
        dark[pos] = False
    for pos in marks:
        dark[pos] = True
    dark.setflags(write=False)
    fixed.setflags(write=False)
    return dark, fixed


def choose_symbol(n_payload_bytes):
    """(compact, layers, word size, stuffed data words) of the smallest fitting symbol."""
    return _choose(_high_level_bits(b"\0" * n_payload_bytes), n_payload_bytes)[:3]


def _choose(bits, n_bytes):
    for compact, layers in _candidates():
        wsize = word_size(layers)
        if len(bits) > total_bits(layers, compact):
            continue
        words = _stuff(bits, wsize)
        if len(words) <= max_data_words(layers, compact):
            return compact, layers, wsize, words
    raise CapacityError(f"{n_bytes} bytes exceed the largest Aztec symbol")


def aztec_encode(payload):
    """Encode bytes as the smallest adequate compact or full-range Aztec symbol."""
    payload = bytes(getattr(payload, "data", payload))
    compact, layers, wsize, words = _choose(_high_level_bits(payload), len(payload))
    n_total_bits = total_bits(layers, compact)
    n_total = n_total_bits // wsize
    parity = rs_encode(words, n_total - len(words), _field_for(wsize), first_root=1)
    message = [0] * (n_total_bits % wsize) + _word_bits(words + parity, wsize)

    size = matrix_size(layers, compact)
    dark, _ = _finder_template(layers, compact)
    grid = dark.copy()
    rows, cols = _data_positions(layers, compact)
    grid[rows, cols] = np.array(message, dtype=bool)
    for bit, pos in zip(_mode_message(compact, layers, len(words)), _mode_positions(size, compact)):
        grid[pos] = bool(bit)
    meta = {
        "compact": compact,
        "layers": layers,
        "data_words": len(words),
        "word_size": wsize,
        "ec_words": n_total - len(words),
    }
    return ModuleMatrix(grid, "aztec", layers, meta)


def _is_compact(grid):
    size = grid.shape[0]
    center = size // 2
    ring6 = [grid[center - 6, center + k] for k in range(-6, 7)] + [grid[center + 6, center + k] for k in range(-6, 7)]
    ring5 = [grid[center - 5, center + k] for k in range(-5, 6)] + [grid[center + k, center - 5] for k in range(-5, 6)]
    if size >= 19 and all(ring6) and not any(ring5):
        return False
    return True


def aztec_self_decode(matrix):
    """Decode a clean symbol from :func:`aztec_encode` back to its payload bytes."""
    grid = np.asarray(getattr(matrix, "bits", matrix), dtype=bool)
    size = grid.shape[0]
    if grid.ndim != 2 or size != grid.shape[1] or size < 15 or size % 2 == 0:
        raise StructureError(f"{grid.shape} is not an Aztec symbol size")
    compact = _is_compact(grid)
    mode_pos = _mode_positions(size, compact)
    mode_bits = [int(grid[p]) for p in mode_pos]
    mode_words = [int("".join(map(str, mode_bits[i:i + 4])), 2) for i in range(0, len(mode_bits), 4)]
    n_words, n_check = (2, 5) if compact else (4, 6)
    if any(syndromes(mode_words, n_check, get_field(16), first_root=1)):
        raise StructureError("mode message fails its Reed-Solomon check")
    value = 0
    for w in mode_words[:n_words]:
        value = (value << 4) | w
    if compact:
        layers, n_data = (value >> 6) + 1, (value & 0x3F) + 1
    else:
        layers, n_data = (value >> 11) + 1, (value & 0x7FF) + 1
    if matrix_size(layers, compact) != size:
        raise StructureError(f"mode message declares {layers} layers, inconsistent with size {size}")
    dark, fixed = _finder_template(layers, compact)
    mode_mask = np.zeros_like(fixed)
    for p in mode_pos:
        mode_mask[p] = True
    check = fixed & ~mode_mask
    if np.any(grid[check] != dark[check]):
        raise StructureError("bullseye, orientation marks or reference grid are damaged")

    wsize = word_size(layers)
    n_total_bits = total_bits(layers, compact)
    n_total = n_total_bits // wsize
    if n_data > n_total:
        raise StructureError("mode message declares more data words than the symbol holds")
    rows, cols = _data_positions(layers, compact)
    bits = grid[rows, cols].astype(np.uint8)
    if bits[:n_total_bits % wsize].any():
        raise StructureError("padding bits before the first codeword are not zero")
    bits = bits[n_total_bits % wsize:]
    words = [int("".join(map(str, bits[i:i + wsize])), 2) for i in range(0, n_total * wsize, wsize)]
    if any(syndromes(words, n_total - n_data, _field_for(wsize), first_root=1)):
        raise CorruptionError("nonzero Reed-Solomon syndrome in Aztec data")
    stream = _unstuff(words[:n_data], wsize)
    return _parse_binary_shifts(stream)


def _parse_binary_shifts(stream):
    out = bytearray()
    pos, n = 0, len(stream)

    def read(k):
        nonlocal pos
        v = 0
        for b in stream[pos:pos + k]:
            v = (v << 1) | b
        pos += k
        return v

    while n - pos >= 5:
        code = read(5)
        if code != _BINARY_SHIFT:
            raise StructureError(f"unsupported upper-mode code {code}")
        if n - pos < 5:
            break
        length = read(5)
        if length == 0:
            if n - pos < 11:
                break
            length = read(11) + 31
        if n - pos < 8 * length:
            # trailing pad bits that happen to spell a binary shift
            break
        out.extend(read(8) for _ in range(length))
    return bytes(out)
