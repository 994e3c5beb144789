"""Arithmetic over the binary extension fields GF(2^q).

Elements are plain integers in ``[0, 2^q)`` whose bits are the polynomial
coefficients. Addition is XOR; multiplication goes through discrete-log
tables built once per field.

Default primitive polynomials (bitmask, highest bit is x^q)::

    q=1  x+1                0x3
    q=2  x^2+x+1            0x7
    q=3  x^3+x+1            0xb
    q=4  x^4+x+1            0x13
    q=5  x^5+x^2+1          0x25
    q=6  x^6+x+1            0x43
    q=7  x^7+x+1            0x83
    q=8  x^8+x^4+x^3+x^2+1  0x11d
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

DEFAULT_PRIMITIVE_POLYS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11D,
}


def poly_mulmod(a: int, b: int, poly: int, q: int) -> int:
    """Schoolbook carry-less multiply of ``a`` and ``b`` reduced modulo ``poly``.

    Slow reference path; the field itself uses log tables.
    """
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a >> q:
            a ^= poly
    return result


class GaloisField:
    """The finite field GF(2^q) with a fixed primitive polynomial.

    Parameters
    ----------
    q : int
        Field exponent, ``1 <= q <= 8``.
    primitive_poly : int, optional
        Bitmask of a degree-``q`` primitive polynomial. Defaults to the
        entry in :data:`DEFAULT_PRIMITIVE_POLYS`.

    Raises
    ------
    ValueError
        If ``q`` is out of range or the polynomial is not primitive.
    """

    def __init__(self, q: int, primitive_poly: int | None = None):
        q = int(q)
        if not 1 <= q <= 8:
            raise ValueError(f"field exponent q must be in [1, 8], got {q}")
        if primitive_poly is None:
            primitive_poly = DEFAULT_PRIMITIVE_POLYS[q]
        primitive_poly = int(primitive_poly)
        if primitive_poly >> q != 1:
            raise ValueError(f"polynomial {primitive_poly:#x} does not have degree {q}")

        self.q = q
        self.order = 1 << q
        self.primitive_poly = primitive_poly

        exp_table = np.zeros(2 * self.order, dtype=np.int64)
        log_table = np.full(self.order, -1, dtype=np.int64)
        x = 1
        for i in range(self.order - 1):
            if log_table[x] != -1:
                raise ValueError(f"polynomial {primitive_poly:#x} is not primitive over GF(2)")
            exp_table[i] = x
            log_table[x] = i
            x = poly_mulmod(x, 2, primitive_poly, q)
        if x != 1:
            raise ValueError(f"polynomial {primitive_poly:#x} is not primitive over GF(2)")
        # doubled so exp_table[la + lb] needs no modulo
        exp_table[self.order - 1 :] = exp_table[: self.order + 1]
        self.exp_table = exp_table
        self.log_table = log_table
        for arr in (self.exp_table, self.log_table):
            arr.setflags(write=False)

        self._mul_table = None
        self._inv_table = None

    def __repr__(self):
        return f"GaloisField(q={self.q}, primitive_poly={self.primitive_poly:#x})"

    def __eq__(self, other):
        if not isinstance(other, GaloisField):
            return NotImplemented
        return self.q == other.q and self.primitive_poly == other.primitive_poly

    def __hash__(self):
        return hash((self.q, self.primitive_poly))

    def _check(self, a: int) -> int:
        a = int(a)
        if not 0 <= a < self.order:
            raise ValueError(f"{a} is not an element of GF({self.order})")
        return a

    def add(self, a: int, b: int) -> int:
        return self._check(a) ^ self._check(b)

    def mul(self, a: int, b: int) -> int:
        a, b = self._check(a), self._check(b)
        if a == 0 or b == 0:
            return 0
        return int(self.exp_table[self.log_table[a] + self.log_table[b]])

    def inv(self, a: int) -> int:
        a = self._check(a)
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return int(self.exp_table[(self.order - 1 - self.log_table[a]) % (self.order - 1)])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    @property
    def mul_table(self) -> np.ndarray:
        """Full ``order x order`` product table (read-only)."""
        if self._mul_table is None:
            Q = self.order
            la = self.log_table[1:]
            table = np.zeros((Q, Q), dtype=np.int64)
            table[1:, 1:] = self.exp_table[la[:, None] + la[None, :]]
            table.setflags(write=False)
            self._mul_table = table
        return self._mul_table

    @property
    def inv_table(self) -> np.ndarray:
        """``inv_table[a]`` is the inverse of ``a``; entry 0 is 0 by convention."""
        if self._inv_table is None:
            table = np.zeros(self.order, dtype=np.int64)
            for a in range(1, self.order):
                table[a] = self.inv(a)
            table.setflags(write=False)
            self._inv_table = table
        return self._inv_table

    def mul_array(self, a, b) -> np.ndarray:
        """Elementwise product of integer arrays (broadcasting)."""
        return self.mul_table[np.asarray(a), np.asarray(b)]


@lru_cache(maxsize=None)
def get_field(q: int, primitive_poly: int | None = None) -> GaloisField:
    """Shared, cached field instance."""
    return GaloisField(q, primitive_poly)


def gf_add(a: int, b: int, field: GaloisField) -> int:
    return field.add(a, b)


def gf_mul(a: int, b: int, field: GaloisField) -> int:
    return field.mul(a, b)


def gf_inv(a: int, field: GaloisField) -> int:
    return field.inv(a)


def wht(v) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis.

    The last axis must have power-of-two length. ``wht(wht(v)) == len * v``.
    """
    v = np.array(v, dtype=np.float64)
    size = v.shape[-1]
    if size < 1 or size & (size - 1):
        raise ValueError(f"transform length must be a power of two, got {size}")
    lead = v.shape[:-1]
    h = 1
    while h < size:
        x = v.reshape(lead + (size // (2 * h), 2, h))
        a = x[..., 0, :].copy()
        b = x[..., 1, :]
        x[..., 0, :] += b
        x[..., 1, :] = a - b
        h *= 2
    return v


def iwht(v) -> np.ndarray:
    """Inverse of :func:`wht`."""
    v = np.asarray(v)
    return wht(v) / v.shape[-1]


def xor_convolve(u, v) -> np.ndarray:
    """XOR-convolution of two vectors via the Hadamard domain."""
    return iwht(wht(u) * wht(v))
