"""Galois-field arithmetic and Reed-Solomon parity generation.

Fields are GF(2^m) in polynomial basis with generator element alpha = 2.
QR codes use GF(256) with generator roots alpha^0..alpha^(n-1); Aztec uses
GF(16/64/256/1024/4096) with roots alpha^1..alpha^n.
"""

from functools import lru_cache

from ..errors import FieldRangeError, ParameterError

# primitive polynomials, bit i = coefficient of x^i
PRIMITIVE_POLYS = {
    16: 0x13,      # x^4 + x + 1
    64: 0x43,      # x^6 + x + 1
    256: 0x11D,    # x^8 + x^4 + x^3 + x^2 + 1 (QR)
    1024: 0x409,   # x^10 + x^3 + 1
    4096: 0x1069,  # x^12 + x^6 + x^5 + x^3 + 1
}
AZTEC_GF256_POLY = 0x12D  # x^8 + x^5 + x^3 + x^2 + 1


class GaloisField:
    def __init__(self, order, primitive):
        if order not in PRIMITIVE_POLYS:
            raise ParameterError(f"unsupported field order {order}")
        self.order = order
        self.primitive = primitive
        exp = [0] * (2 * order)
        log = [0] * order
        x = 1
        for i in range(order - 1):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & order:
                x ^= primitive
        if x != 1:
            raise ParameterError(f"polynomial {primitive:#x} is not primitive for GF({order})")
        for i in range(order - 1, 2 * order):
            exp[i] = exp[i - (order - 1)]
        self.exp = tuple(exp)
        self.log = tuple(log)

    def __repr__(self):
        return f"GaloisField({self.order}, {self.primitive:#x})"

    def mul(self, a, b):
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        return self.exp[(self.order - 1) - self.log[a]]

    def div(self, a, b):
        if b == 0:
            raise ZeroDivisionError("division by zero in GF")
        if a == 0:
            return 0
        return self.exp[(self.log[a] - self.log[b]) % (self.order - 1)]

    def pow_alpha(self, k):
        return self.exp[k % (self.order - 1)]

    def poly_eval(self, coeffs, x):
        """Evaluate a polynomial given highest-degree-first coefficients (Horner)."""
        acc = 0
        for c in coeffs:
            acc = self.mul(acc, x) ^ c
        return acc


@lru_cache(maxsize=None)
def get_field(order, primitive=None):
    return GaloisField(order, PRIMITIVE_POLYS[order] if primitive is None else primitive)


@lru_cache(maxsize=None)
def _generator(field, n_parity, first_root):
    g = [1]
    for i in range(n_parity):
        root = field.pow_alpha(i + first_root)
        nxt = g + [0]
        for j, c in enumerate(g):
            nxt[j + 1] ^= field.mul(c, root)
        g = nxt
    return tuple(g)


def generator_poly(n_parity, field, first_root=0):
    """Coefficients (highest degree first) of prod_{i} (x - alpha^(i+first_root))."""
    if n_parity < 1:
        raise ParameterError("n_parity must be >= 1")
    return list(_generator(field, n_parity, first_root))


def rs_encode(data, n_parity, field, first_root=0):
    """Return the ``n_parity`` Reed-Solomon check symbols for ``data``.

    The parity is the remainder of data(x) * x^n_parity divided by the
    generator polynomial, so ``data + parity`` evaluates to zero at every
    generator root.
    """
    if n_parity < 1:
        raise ParameterError("n_parity must be >= 1")
    for v in data:
        if not 0 <= v < field.order:
            raise FieldRangeError(f"{v} is not an element of GF({field.order})")
    gen = _generator(field, n_parity, first_root)
    exp, log = field.exp, field.log
    glog = [log[c] if c else None for c in gen[1:]]
    rem = [0] * n_parity
    for d in data:
        factor = d ^ rem[0]
        rem = rem[1:] + [0]
        if factor:
            lf = log[factor]
            for j, lg in enumerate(glog):
                if lg is not None:
                    rem[j] ^= exp[lf + lg]
    return rem


def syndromes(codeword, n_parity, field, first_root=0):
    """Evaluate the codeword polynomial at each generator root."""
    return [field.poly_eval(codeword, field.pow_alpha(i + first_root)) for i in range(n_parity)]
