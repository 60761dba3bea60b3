"""Small finite fields GF(p^m), q = p^m <= 64, via log/antilog tables.

Elements are the integers ``0..q-1``; the base-``p`` digits of an element are
the coefficients of its polynomial representative, lowest degree first.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

MAX_ORDER = 64


def prime_power(q: int):
    """``(p, m)`` with ``q = p**m``, or ``None`` if ``q`` is not a prime power."""
    if q < 2:
        return None
    p = next(d for d in range(2, q + 1) if q % d == 0)
    m, r = 0, q
    while r % p == 0:
        r //= p
        m += 1
    return (p, m) if r == 1 else None


def _poly_mulmod(a, b, modulus, p):
    """Multiply coefficient lists (low first) modulo a monic polynomial."""
    m = len(modulus) - 1
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] = (prod[i + j] + x * y) % p
    for deg in range(len(prod) - 1, m - 1, -1):
        c = prod[deg]
        if c:
            for i in range(m + 1):
                prod[deg - m + i] = (prod[deg - m + i] - c * modulus[i]) % p
    return (prod + [0] * m)[:m]


class GaloisField:
    def __init__(self, q: int):
        pm = prime_power(q)
        if pm is None or q > MAX_ORDER:
            raise ValueError(f"field size must be a prime power <= {MAX_ORDER}, got {q}")
        self.q = q
        self.p, self.m = pm
        self.modulus = self._primitive_modulus()
        self.exp, self.log = self._tables()
        e = np.arange(q)
        self.add_table = self._digitwise(e[:, None], e[None, :], lambda a, b: a + b)
        self.neg = self._digitwise(np.zeros(q, dtype=int), e, lambda a, b: a - b)
        mul = np.zeros((q, q), dtype=np.int64)
        nz = np.arange(1, q)
        mul[1:, 1:] = self.exp[(self.log[nz][:, None] + self.log[nz][None, :]) % (q - 1)]
        self.mul_table = mul

    def __repr__(self):
        return f"GaloisField({self.q})"

    def _digits(self, x: int):
        return [(x // self.p**i) % self.p for i in range(self.m)]

    def _from_digits(self, d) -> int:
        return sum(int(c) * self.p**i for i, c in enumerate(d))

    def _digitwise(self, a, b, op):
        a, b = np.broadcast_arrays(a, b)
        out = np.zeros(a.shape, dtype=np.int64)
        for i in range(self.m):
            w = self.p**i
            out += (op((a // w) % self.p, (b // w) % self.p) % self.p) * w
        return out

    def _primitive_modulus(self):
        """Lexicographically first monic degree-m polynomial with ``x`` primitive."""
        p, m, q = self.p, self.m, self.q
        if m == 1:
            # GF(p): any primitive root g; the "modulus" x - g makes x act as g
            for g in range(1, p):
                if len({pow(g, k, p) for k in range(p - 1)}) == p - 1:
                    return [(-g) % p, 1]
        for low in itertools.product(range(p), repeat=m):
            if low[0] == 0:
                continue
            f = list(low) + [1]
            x = [0, 1] + [0] * (m - 2)
            cur = [1] + [0] * (m - 1)
            seen = set()
            for _ in range(q - 1):
                seen.add(tuple(cur))
                cur = _poly_mulmod(cur, x, f, p)
            if len(seen) == q - 1 and cur == [1] + [0] * (m - 1):
                return f
        raise RuntimeError(f"no primitive polynomial found for GF({q})")  # pragma: no cover

    def _tables(self):
        q, p, m = self.q, self.p, self.m
        exp = np.zeros(q - 1, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        if m == 1:
            g = (-self.modulus[0]) % p
            cur = 1
            for k in range(q - 1):
                exp[k], log[cur] = cur, k
                cur = cur * g % p
            return exp, log
        x = [0, 1] + [0] * (m - 2)
        cur = [1] + [0] * (m - 1)
        for k in range(q - 1):
            e = self._from_digits(cur)
            exp[k], log[e] = e, k
            cur = _poly_mulmod(cur, x, self.modulus, p)
        return exp, log

    # scalar and vectorized arithmetic
    def add(self, a, b):
        return self.add_table[a, b]

    def sub(self, a, b):
        return self.add_table[a, self.neg[b]]

    def mul(self, a, b):
        return self.mul_table[a, b]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return int(self.exp[(-self.log[a]) % (self.q - 1)])

    def poly_eval(self, coeffs, x):
        """Evaluate polynomials ``coeffs[..., j]`` (degree j) at points ``x`` by Horner.

        Broadcasting: ``coeffs`` of shape ``(..., k)`` and ``x`` of shape
        ``(n,)`` give results of shape ``(..., n)``.
        """
        coeffs = np.asarray(coeffs, dtype=np.int64)
        x = np.asarray(x, dtype=np.int64)
        acc = np.zeros(coeffs.shape[:-1] + x.shape, dtype=np.int64)
        for j in range(coeffs.shape[-1] - 1, -1, -1):
            acc = self.add_table[self.mul_table[acc, x], coeffs[..., j, None]]
        return acc


@lru_cache(maxsize=None)
def field(q: int) -> GaloisField:
    return GaloisField(q)
