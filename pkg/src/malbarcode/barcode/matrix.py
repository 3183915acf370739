from dataclasses import dataclass, field

import numpy as np


@dataclass
class ModuleMatrix:
    """Square grid of barcode modules; ``True`` is a dark module.

    ``version`` is the QR version, or the Aztec layer count (see ``meta["compact"]``).
    """

    bits: np.ndarray
    symbology: str
    version: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2 or self.bits.shape[0] != self.bits.shape[1]:
            raise ValueError(f"module matrix must be square, got shape {self.bits.shape}")

    @property
    def size(self):
        return self.bits.shape[0]

    def copy(self):
        return ModuleMatrix(self.bits.copy(), self.symbology, self.version, dict(self.meta))

    def to_strings(self):
        """Rows as strings of '1' (dark) and '0' (light); the golden-fixture format."""
        return ["".join("1" if b else "0" for b in row) for row in self.bits]

    @classmethod
    def from_strings(cls, rows, symbology="qr", version=0, meta=None):
        bits = np.array([[c == "1" for c in row] for row in rows], dtype=bool)
        return cls(bits, symbology, version, dict(meta or {}))
