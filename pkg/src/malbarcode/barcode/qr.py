"""QR Code Model 2 encoder (byte mode only) and a clean-symbol decoder.

The decoder reads a matrix produced by :func:`qr_encode` back into bytes.
It does no sampling or error correction; any nonzero Reed-Solomon syndrome
raises :class:`CorruptionError`.
"""

from functools import lru_cache

import numpy as np

from .. import kernels
from ..errors import CapacityError, CorruptionError, ParameterError, StructureError
from .gf import get_field, rs_encode, syndromes
from .matrix import ModuleMatrix

EC_LEVELS = ("L", "M", "Q", "H")
_FORMAT_EC_BITS = {"L": 1, "M": 0, "Q": 3, "H": 2}

# index 0 unused; one entry per version 1..40
_EC_PER_BLOCK = {
    "L": (None, 7, 10, 15, 20, 26, 18, 20, 24, 30, 18, 20, 24, 26, 30, 22, 24, 28, 30, 28, 28,
          28, 28, 30, 30, 26, 28, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30),
    "M": (None, 10, 16, 26, 18, 24, 16, 18, 22, 22, 26, 30, 22, 22, 24, 24, 28, 28, 26, 26, 26,
          26, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28),
    "Q": (None, 13, 22, 18, 26, 18, 24, 18, 22, 20, 24, 28, 26, 24, 20, 30, 24, 28, 28, 26, 30,
          28, 30, 30, 30, 30, 28, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30),
    "H": (None, 17, 28, 22, 16, 22, 28, 26, 26, 24, 28, 24, 28, 22, 24, 24, 30, 28, 28, 26, 28,
          30, 24, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30),
}
_NUM_BLOCKS = {
    "L": (None, 1, 1, 1, 1, 1, 2, 2, 2, 2, 4, 4, 4, 4, 4, 6, 6, 6, 6, 7, 8,
          8, 9, 9, 10, 12, 12, 12, 13, 14, 15, 16, 17, 18, 19, 19, 20, 21, 22, 24, 25),
    "M": (None, 1, 1, 1, 2, 2, 4, 4, 4, 5, 5, 5, 8, 9, 9, 10, 10, 11, 13, 14, 16,
          17, 17, 18, 20, 21, 23, 25, 26, 28, 29, 31, 33, 35, 37, 38, 40, 43, 45, 47, 49),
    "Q": (None, 1, 1, 2, 2, 4, 4, 6, 6, 8, 8, 8, 10, 12, 16, 12, 17, 16, 18, 21, 20,
          23, 23, 25, 27, 29, 34, 34, 35, 38, 40, 43, 45, 48, 51, 53, 56, 59, 62, 65, 68),
    "H": (None, 1, 1, 2, 4, 4, 4, 5, 6, 8, 8, 11, 11, 16, 16, 18, 16, 19, 21, 25, 25,
          25, 34, 30, 32, 35, 37, 40, 42, 45, 48, 51, 54, 57, 60, 63, 66, 70, 74, 77, 81),
}

MODE_BYTE = 0b0100
PAD_BYTES = (0xEC, 0x11)


def symbol_size(version):
    return 17 + 4 * version


def _raw_data_modules(version):
    n = (16 * version + 128) * version + 64
    if version >= 2:
        n_align = version // 7 + 2
        n -= (25 * n_align - 10) * n_align - 55
        if version >= 7:
            n -= 36
    return n


def _check_version(version):
    if not 1 <= version <= 40:
        raise ParameterError(f"QR version must be in 1..40, got {version}")


def data_codewords(version, ec_level):
    _check_version(version)
    return _raw_data_modules(version) // 8 - _EC_PER_BLOCK[ec_level][version] * _NUM_BLOCKS[ec_level][version]


def _count_bits(version):
    return 8 if version <= 9 else 16


def byte_capacity(version, ec_level="L"):
    """Largest byte-mode payload that fits the given version and EC level."""
    usable = data_codewords(version, ec_level) * 8 - 4 - _count_bits(version)
    return max(usable // 8, 0)


def smallest_version(n_bytes, ec_level="L"):
    for v in range(1, 41):
        if byte_capacity(v, ec_level) >= n_bytes:
            return v
    raise CapacityError(f"{n_bytes} bytes exceed QR capacity at level {ec_level}")


def alignment_positions(version):
    if version == 1:
        return []
    n_align = version // 7 + 2
    step = 26 if version == 32 else (version * 4 + n_align * 2 + 1) // (n_align * 2 - 2) * 2
    size = symbol_size(version)
    pos = [size - 7 - i * step for i in range(n_align - 1)]
    return [6] + pos[::-1]


def format_bits(ec_level, mask):
    data = (_FORMAT_EC_BITS[ec_level] << 3) | mask
    rem = data
    for _ in range(10):
        rem = (rem << 1) ^ ((rem >> 9) * 0x537)
    return ((data << 10) | rem) ^ 0x5412


def version_bits(version):
    rem = version
    for _ in range(12):
        rem = (rem << 1) ^ ((rem >> 11) * 0x1F25)
    return (version << 12) | rem


def _format_positions(size):
    """(row, col) of each of the 15 format bits, for both copies; bit 0 is the LSB."""
    first = [(i, 8) for i in range(6)] + [(7, 8), (8, 8), (8, 7)] + [(8, 14 - i) for i in range(9, 15)]
    second = [(8, size - 1 - i) for i in range(8)] + [(size - 15 + i, 8) for i in range(8, 15)]
    return first, second


def _version_positions(size):
    """Two lists of (row, col) for the 18 version bits (bottom-left, top-right)."""
    a = [(size - 11 + i % 3, i // 3) for i in range(18)]
    b = [(i // 3, size - 11 + i % 3) for i in range(18)]
    return a, b


@lru_cache(maxsize=None)
def _template(version):
    """Function patterns for ``version``: (dark modules, function-module mask)."""
    size = symbol_size(version)
    dark = np.zeros((size, size), dtype=bool)
    func = np.zeros((size, size), dtype=bool)

    def put(r, c, v):
        dark[r, c] = v
        func[r, c] = True

    for i in range(size):
        put(6, i, i % 2 == 0)
        put(i, 6, i % 2 == 0)
    for cr, cc in ((3, 3), (3, size - 4), (size - 4, 3)):
        for dr in range(-4, 5):
            for dc in range(-4, 5):
                r, c = cr + dr, cc + dc
                if 0 <= r < size and 0 <= c < size:
                    d = max(abs(dr), abs(dc))
                    put(r, c, d not in (2, 4))
    centers = alignment_positions(version)
    last = len(centers) - 1
    for i, cr in enumerate(centers):
        for j, cc in enumerate(centers):
            if (i == 0 and j == 0) or (i == 0 and j == last) or (i == last and j == 0):
                continue
            for dr in range(-2, 3):
                for dc in range(-2, 3):
                    put(cr + dr, cc + dc, max(abs(dr), abs(dc)) != 1)
    # reserve format areas; the always-dark module sits next to the bottom-left finder
    first, second = _format_positions(size)
    for r, c in first + second:
        put(r, c, False)
    put(size - 8, 8, True)
    if version >= 7:
        bits = version_bits(version)
        a, b = _version_positions(size)
        for i in range(18):
            v = bool((bits >> i) & 1)
            put(*a[i], v)
            put(*b[i], v)
    dark.setflags(write=False)
    func.setflags(write=False)
    return dark, func


@lru_cache(maxsize=None)
def _data_positions(version):
    """Row/column arrays of data modules in placement (zig-zag) order."""
    size = symbol_size(version)
    _, func = _template(version)
    rows, cols = [], []
    right = size - 1
    while right >= 1:
        if right == 6:
            right = 5
        upward = ((right + 1) & 2) == 0
        for vert in range(size):
            y = size - 1 - vert if upward else vert
            for j in range(2):
                x = right - j
                if not func[y, x]:
                    rows.append(y)
                    cols.append(x)
        right -= 2
    return np.array(rows, dtype=np.intp), np.array(cols, dtype=np.intp)


def _mask_condition(mask, r, c):
    if mask == 0:
        return (r + c) % 2 == 0
    if mask == 1:
        return r % 2 == 0
    if mask == 2:
        return c % 3 == 0
    if mask == 3:
        return (r + c) % 3 == 0
    if mask == 4:
        return (r // 2 + c // 3) % 2 == 0
    if mask == 5:
        return (r * c) % 2 + (r * c) % 3 == 0
    if mask == 6:
        return ((r * c) % 2 + (r * c) % 3) % 2 == 0
    if mask == 7:
        return ((r + c) % 2 + (r * c) % 3) % 2 == 0
    raise ParameterError(f"mask id must be 0..7, got {mask}")


@lru_cache(maxsize=None)
def _mask_grid(mask, size):
    r, c = np.indices((size, size))
    grid = _mask_condition(mask, r, c)
    grid.setflags(write=False)
    return grid


def _block_layout(version, ec_level):
    """List of data-codeword counts per block, short blocks first."""
    n_blocks = _NUM_BLOCKS[ec_level][version]
    ec_len = _EC_PER_BLOCK[ec_level][version]
    raw = _raw_data_modules(version) // 8
    n_short = n_blocks - raw % n_blocks
    short_len = raw // n_blocks
    return [short_len - ec_len + (0 if i < n_short else 1) for i in range(n_blocks)], ec_len


def _data_codeword_stream(payload, version, ec_level):
    capacity = data_codewords(version, ec_level)
    bits = []

    def append(value, n):
        bits.extend((value >> (n - 1 - i)) & 1 for i in range(n))

    append(MODE_BYTE, 4)
    append(len(payload), _count_bits(version))
    for b in payload:
        append(b, 8)
    cap_bits = capacity * 8
    bits.extend([0] * min(4, cap_bits - len(bits)))
    bits.extend([0] * (-len(bits) % 8))
    out = [int("".join(map(str, bits[i:i + 8])), 2) for i in range(0, len(bits), 8)]
    i = 0
    while len(out) < capacity:
        out.append(PAD_BYTES[i % 2])
        i += 1
    return out


def _interleave(data, version, ec_level):
    sizes, ec_len = _block_layout(version, ec_level)
    field = get_field(256)
    blocks, parity = [], []
    pos = 0
    for n in sizes:
        block = data[pos:pos + n]
        pos += n
        blocks.append(block)
        parity.append(rs_encode(block, ec_len, field))
    out = []
    for i in range(max(sizes)):
        for b in blocks:
            if i < len(b):
                out.append(b[i])
    for i in range(ec_len):
        for p in parity:
            out.append(p[i])
    return out


def _codewords_to_bits(codewords, n_positions):
    bits = np.unpackbits(np.array(codewords, dtype=np.uint8))
    out = np.zeros(n_positions, dtype=bool)
    out[: len(bits)] = bits.astype(bool)
    return out


def _draw_format(grid, ec_level, mask):
    size = grid.shape[0]
    bits = format_bits(ec_level, mask)
    first, second = _format_positions(size)
    for i in range(15):
        v = bool((bits >> i) & 1)
        grid[first[i]] = v
        grid[second[i]] = v
    grid[size - 8, 8] = True


def penalty_score(grid):
    """Total of the four mask-evaluation penalty rules for a finished symbol."""
    return kernels.qr_penalty(np.ascontiguousarray(grid, dtype=np.uint8))


def qr_encode(payload, version=None, ec_level="L", mask=None):
    """Encode bytes as a byte-mode QR symbol.

    ``version=None`` picks the smallest fitting version; a pinned version that
    is too small raises :class:`CapacityError` carrying the required version.
    ``mask=None`` evaluates all eight masks and keeps the lowest penalty
    (ties go to the lowest mask id).
    """
    payload = bytes(getattr(payload, "data", payload))
    if ec_level not in EC_LEVELS:
        raise ParameterError(f"unknown EC level {ec_level!r}")
    if version is None:
        version = smallest_version(len(payload), ec_level)
    else:
        _check_version(version)
        if len(payload) > byte_capacity(version, ec_level):
            needed = smallest_version(len(payload), ec_level)
            raise CapacityError(
                f"{len(payload)} bytes do not fit QR version {version}-{ec_level} "
                f"(capacity {byte_capacity(version, ec_level)}); requires version {needed}",
                required_version=needed,
            )
    data = _data_codeword_stream(payload, version, ec_level)
    codewords = _interleave(data, version, ec_level)
    rows, cols = _data_positions(version)
    bits = _codewords_to_bits(codewords, len(rows))
    base, _ = _template(version)
    size = symbol_size(version)

    def build(m):
        grid = base.copy()
        grid[rows, cols] = bits ^ _mask_grid(m, size)[rows, cols]
        _draw_format(grid, ec_level, m)
        return grid

    if mask is None:
        best = None
        for m in range(8):
            grid = build(m)
            score = penalty_score(grid)
            if best is None or score < best[0]:
                best = (score, m, grid)
        _, mask, grid = best
    else:
        grid = build(mask)
    return ModuleMatrix(grid, "qr", version, {"ec_level": ec_level, "mask": mask})


def _read_format(grid):
    size = grid.shape[0]
    first, second = _format_positions(size)
    values = []
    for positions in (first, second):
        v = 0
        for i, pos in enumerate(positions):
            if grid[pos]:
                v |= 1 << i
        values.append(v)
    if values[0] != values[1]:
        raise StructureError("format information copies disagree")
    for level in EC_LEVELS:
        for m in range(8):
            if format_bits(level, m) == values[0]:
                return level, m
    raise StructureError("format information fails its BCH check")


def qr_self_decode(matrix):
    """Decode a clean symbol from :func:`qr_encode` back to its payload bytes."""
    grid = np.asarray(getattr(matrix, "bits", matrix), dtype=bool)
    size = grid.shape[0]
    if grid.ndim != 2 or size != grid.shape[1] or (size - 17) % 4 or not 21 <= size <= 177:
        raise StructureError(f"{grid.shape} is not a QR symbol size")
    version = (size - 17) // 4
    base, func = _template(version)
    fixed = func.copy()
    first, second = _format_positions(size)
    for pos in first + second:
        fixed[pos] = False
    if np.any(grid[fixed] != base[fixed]):
        raise StructureError("function patterns do not match the expected layout")
    ec_level, mask = _read_format(grid)

    rows, cols = _data_positions(version)
    bits = grid[rows, cols] ^ _mask_grid(mask, size)[rows, cols]
    n_codewords = _raw_data_modules(version) // 8
    stream = np.packbits(bits[: n_codewords * 8].astype(np.uint8)).tolist()
    if bits[n_codewords * 8:].any():
        raise StructureError("remainder bits after the last codeword are not zero")

    sizes, ec_len = _block_layout(version, ec_level)
    n_blocks = len(sizes)
    blocks = [[] for _ in range(n_blocks)]
    pos = 0
    for i in range(max(sizes)):
        for b in range(n_blocks):
            if i < sizes[b]:
                blocks[b].append(stream[pos])
                pos += 1
    parity = [[] for _ in range(n_blocks)]
    for _ in range(ec_len):
        for b in range(n_blocks):
            parity[b].append(stream[pos])
            pos += 1
    field = get_field(256)
    for b in range(n_blocks):
        if any(syndromes(blocks[b] + parity[b], ec_len, field)):
            raise CorruptionError(f"nonzero Reed-Solomon syndrome in block {b}")
    data = [x for block in blocks for x in block]

    value = int.from_bytes(bytes(data), "big")
    total = len(data) * 8

    def take(offset, n):
        return (value >> (total - offset - n)) & ((1 << n) - 1)

    mode = take(0, 4)
    if mode != MODE_BYTE:
        raise StructureError(f"unsupported mode indicator {mode:04b}")
    nbits = _count_bits(version)
    length = take(4, nbits)
    start = 4 + nbits
    if start + 8 * length > total:
        raise StructureError("character count exceeds data capacity")
    return bytes(take(start + 8 * i, 8) for i in range(length))
