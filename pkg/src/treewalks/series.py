"""Exact truncated power series and the tree functional equation.

Coefficients are exact rationals.  Truncation is "unknown beyond order":
a series of order N knows coefficients 0..N-1 and nothing else, so binary
operations truncate to the shorter operand instead of zero-padding.

The two directions of the tree equation y = x*A(y) live here:
``lagrange_invert`` produces y from the generator A, ``recover_generator``
solves B(x) = A(x*B(x)) coefficient by coefficient for A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

__all__ = [
    "ExactSeries",
    "lagrange_invert",
    "recover_generator",
    "log_one_minus_coeff",
    "write_series",
    "read_series",
]


# --- generic truncated-series kernels (used with Fraction and ball types) ---

def conv_trunc(a: Sequence, b: Sequence, n: int, zero):
    """Cauchy product of coefficient lists, truncated to n terms."""
    out = [zero] * n
    for i, ai in enumerate(a[:n]):
        if ai == 0:
            continue
        for j, bj in enumerate(b[: n - i]):
            if bj == 0:
                continue
            out[i + j] = out[i + j] + ai * bj
    return out


def inv_trunc(a: Sequence, n: int, one):
    """Reciprocal series; a[0] must be invertible.

    The `!= 0` skips are exact for Fraction and fall back to identity for
    ball coefficients, which merely disables the shortcut.
    """
    zero = one * 0
    out = [zero] * n
    out[0] = one / a[0]
    for k in range(1, n):
        s = zero
        for j in range(1, min(k, len(a) - 1) + 1):
            if a[j] != 0:
                s = s + a[j] * out[k - j]
        out[k] = -s / a[0]
    return out


def poly_eval_series(coeffs: Sequence, s: Sequence, n: int, zero):
    """Evaluate the polynomial sum(coeffs[k] * X^k) at the series s (Horner).

    Unlike full composition this is legal for any constant term of s because
    the outer polynomial is finite.
    """
    acc = [zero] * n
    acc[0] = acc[0] + coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = conv_trunc(acc, s, n, zero)
        acc[0] = acc[0] + c
    return acc


def _int_conv_trunc(a: Sequence[int], b: Sequence[int], n: int) -> list[int]:
    out = [0] * n
    for i, ai in enumerate(a[:n]):
        if ai:
            for j, bj in enumerate(b[: n - i]):
                if bj:
                    out[i + j] += ai * bj
    return out


@dataclass(frozen=True)
class ExactSeries:
    """Truncated power series with exact rational coefficients."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.coeffs) < 1:
            raise ValueError("series order must be >= 1")

    @staticmethod
    def from_coeffs(values: Iterable) -> "ExactSeries":
        return ExactSeries(tuple(Fraction(v) for v in values))

    @staticmethod
    def one(order: int) -> "ExactSeries":
        return ExactSeries((Fraction(1),) + (Fraction(0),) * (order - 1))

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, n: int) -> Fraction:
        return self.coeffs[n]

    def truncate(self, order: int) -> "ExactSeries":
        if order > self.order:
            raise ValueError("cannot extend a truncated series")
        return ExactSeries(self.coeffs[:order])

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs)

    def __add__(self, other: "ExactSeries") -> "ExactSeries":
        n = min(self.order, other.order)
        return ExactSeries(tuple(a + b for a, b in zip(self.coeffs[:n], other.coeffs[:n])))

    def __sub__(self, other: "ExactSeries") -> "ExactSeries":
        n = min(self.order, other.order)
        return ExactSeries(tuple(a - b for a, b in zip(self.coeffs[:n], other.coeffs[:n])))

    def scale(self, c) -> "ExactSeries":
        c = Fraction(c)
        return ExactSeries(tuple(c * a for a in self.coeffs))

    def mul(self, other: "ExactSeries") -> "ExactSeries":
        n = min(self.order, other.order)
        if self.is_integral() and other.is_integral():
            ints = _int_conv_trunc(
                [c.numerator for c in self.coeffs],
                [c.numerator for c in other.coeffs],
                n,
            )
            return ExactSeries(tuple(Fraction(v) for v in ints))
        return ExactSeries(tuple(conv_trunc(self.coeffs, other.coeffs, n, Fraction(0))))

    __mul__ = mul

    def compose(self, inner: "ExactSeries") -> "ExactSeries":
        """self o inner; inner must have zero constant term."""
        if inner.coeffs[0] != 0:
            raise ValueError("composition requires zero constant term")
        n = min(self.order, inner.order)
        acc = poly_eval_series(self.coeffs[:n], inner.coeffs[:n], n, Fraction(0))
        return ExactSeries(tuple(acc))

    def inverse(self) -> "ExactSeries":
        if self.coeffs[0] == 0:
            raise ValueError("reciprocal requires nonzero constant term")
        return ExactSeries(tuple(inv_trunc(self.coeffs, self.order, Fraction(1))))

    def eval_fraction(self, z: Fraction) -> Fraction:
        """Partial-sum value at an exact point (no tail estimate)."""
        z = Fraction(z)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc


def lagrange_invert(A: ExactSeries, N: int) -> ExactSeries:
    """Solve y = x * A(y) for y to order N (coefficients y_0..y_N).

    Uses the coefficient formula y_i = (1/i) [x^(i-1)] A(x)^i.  For a
    nonnegative integer generator the output is asserted integral and
    nonnegative.
    """
    if A.coeffs[0] != 1:
        raise ValueError("generator must have constant term 1")
    if N > A.order:
        raise ValueError("N exceeds the generator's truncation order")
    integral = A.is_integral()
    nonneg = all(c >= 0 for c in A.coeffs)
    y = [Fraction(0)] * (N + 1)
    if integral:
        a = [c.numerator for c in A.coeffs[:N]]
        power = [1] + [0] * (N - 1)
        for i in range(1, N + 1):
            power = _int_conv_trunc(power, a, N)
            num, rem = divmod(power[i - 1], i)
            if rem:
                raise AssertionError("integrality violated in Lagrange inversion")
            y[i] = Fraction(num)
    else:
        a = list(A.coeffs[:N])
        power = [Fraction(1)] + [Fraction(0)] * (N - 1)
        for i in range(1, N + 1):
            power = conv_trunc(power, a, N, Fraction(0))
            y[i] = power[i - 1] / i
    if nonneg and any(c < 0 for c in y):
        raise AssertionError("nonnegativity violated in Lagrange inversion")
    return ExactSeries(tuple(y))


def recover_generator(B: ExactSeries, N: int) -> ExactSeries:
    """Solve B(x) = A(x*B(x)) for A to order N (coefficients a_0..a_N).

    Recurrence a_n = b_n - sum_{k=1}^{n-1} a_k [x^(n-k)] B^k over cached
    powers of B; O(N^3) exact multiplications.
    """
    if B.coeffs[0] != 1:
        raise ValueError("B must have constant term 1")
    if N + 1 > B.order:
        raise ValueError("N exceeds the truncation order of B")
    if B.is_integral():
        b = [c.numerator for c in B.coeffs[: N + 1]]
        powers: list[list[int]] = [[], b]
        for k in range(2, N):
            powers.append(_int_conv_trunc(powers[-1], b, N + 1))
        a = [1, b[1] if N >= 1 else 0]
        for n in range(2, N + 1):
            s = 0
            for k in range(1, n):
                ak = a[k]
                if ak:
                    s += ak * powers[k][n - k]
            a.append(b[n] - s)
        return ExactSeries(tuple(Fraction(v) for v in a[: N + 1]))
    b = list(B.coeffs[: N + 1])
    powers_f: list[list[Fraction]] = [[], b]
    for k in range(2, N):
        powers_f.append(conv_trunc(powers_f[-1], b, N + 1, Fraction(0)))
    a = [Fraction(1), b[1] if N >= 1 else Fraction(0)]
    for n in range(2, N + 1):
        s = Fraction(0)
        for k in range(1, n):
            if a[k]:
                s += a[k] * powers_f[k][n - k]
        a.append(b[n] - s)
    return ExactSeries(tuple(a[: N + 1]))


def log_one_minus_coeff(k: int, n: int) -> Fraction:
    """Exact [x^n] (1-x)^k log(1-x) = (-1)^(k+1) k! / (n (n-1) ... (n-k))."""
    if k < 0 or n <= k:
        raise ValueError("requires n > k >= 0")
    falling = 1
    for i in range(k + 1):
        falling *= n - i
    return Fraction((-1) ** (k + 1) * math.factorial(k), falling)


def write_series(stream: TextIO, series: ExactSeries) -> None:
    """One coefficient per line: `index numerator/denominator`."""
    for i, c in enumerate(series.coeffs):
        stream.write(f"{i} {c.numerator}/{c.denominator}\n")


def read_series(stream: TextIO) -> ExactSeries:
    entries: dict[int, Fraction] = {}
    for line in stream:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        idx_s, val_s = line.split()
        entries[int(idx_s)] = Fraction(val_s)
    if not entries:
        raise ValueError("empty series file")
    order = max(entries) + 1
    return ExactSeries(tuple(entries.get(i, Fraction(0)) for i in range(order)))
