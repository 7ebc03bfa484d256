"""Arbitrary-precision ball arithmetic and certified gamma/digamma values.

A :class:`PrecReal` is a midpoint/radius pair: the represented real number is
guaranteed to lie in ``[mid - rad, mid + rad]``.  Midpoints are mpmath raw
mpf tuples computed at an explicit bit precision; radii are tracked at low
precision with upward rounding, so every operation is conservative.  The
precision context travels inside each value (no global mpmath state is read
or written).

Radii are engineering-grade rather than formally verified: every operation
adds the propagated input radii plus a small multiple of the result ulp, and
transcendental kernels get extra ulp slack.  Soundness is exercised by the
digit-doubling tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import bernfrac
from mpmath.libmp import (
    fzero,
    fone,
    from_int,
    from_rational,
    mpf_abs,
    mpf_add,
    mpf_cmp,
    mpf_div,
    mpf_exp,
    mpf_log,
    mpf_mul,
    mpf_neg,
    mpf_pi,
    mpf_shift,
    mpf_sin_pi,
    mpf_sqrt,
    mpf_sub,
    to_str,
)

__all__ = [
    "PrecReal",
    "PrecisionError",
    "bits_for_digits",
    "pi_ball",
    "sqrt3_ball",
    "gamma_rational",
    "digamma_rational",
]

# Radius bookkeeping precision (bits).  Radii only need a couple of digits;
# upward rounding keeps them safe.
_RPREC = 40
_UP = "u"
_NEAREST = "n"

# Extra ulps charged on top of propagated radii: 1 covers the rounding of the
# midpoint op itself, transcendental kernels charge a few more.
_ULPS_ARITH = 1
_ULPS_TRANS = 4


class PrecisionError(ArithmeticError):
    """Raised when a ball becomes unusable (division by a ball containing 0,
    sqrt/log of a ball touching the negative axis, precision blow-up)."""


def bits_for_digits(digits: int) -> int:
    """Working mantissa bits for a requested decimal-digit precision."""
    return int(digits * 3.3219280948873626) + 30


def _r_add(*rs):
    acc = fzero
    for r in rs:
        acc = mpf_add(acc, r, _RPREC, _UP)
    return acc


def _r_mul(a, b):
    return mpf_mul(a, b, _RPREC, _UP)


def _ulp(mid, prec: int, count: int):
    if mid == fzero:
        return fzero
    u = mpf_shift(mpf_abs(mid), count.bit_length() + 1 - prec)
    return u


@dataclass(frozen=True, eq=False)
class PrecReal:
    """Real number with certified error radius at an explicit precision."""

    mid: tuple
    rad: tuple
    prec: int

    # --- constructors -------------------------------------------------

    @staticmethod
    def from_int(n: int, prec: int) -> "PrecReal":
        m = from_int(n, prec, _NEAREST)
        rad = fzero if abs(n).bit_length() <= prec else _ulp(m, prec, 1)
        return PrecReal(m, rad, prec)

    @staticmethod
    def from_fraction(q: Fraction, prec: int) -> "PrecReal":
        q = Fraction(q)
        if q.denominator == 1:
            return PrecReal.from_int(q.numerator, prec)
        m = from_rational(q.numerator, q.denominator, prec, _NEAREST)
        return PrecReal(m, _ulp(m, prec, 1), prec)

    @staticmethod
    def zero(prec: int) -> "PrecReal":
        return PrecReal(fzero, fzero, prec)

    def _coerce(self, other) -> "PrecReal":
        if isinstance(other, PrecReal):
            return other
        if isinstance(other, int):
            return PrecReal.from_int(other, self.prec)
        if isinstance(other, Fraction):
            return PrecReal.from_fraction(other, self.prec)
        raise TypeError(f"cannot mix PrecReal with {type(other).__name__}")

    # --- arithmetic ----------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        p = self.prec
        m = mpf_add(self.mid, o.mid, p, _NEAREST)
        return PrecReal(m, _r_add(self.rad, o.rad, _ulp(m, p, _ULPS_ARITH)), p)

    __radd__ = __add__

    def __neg__(self):
        return PrecReal(mpf_neg(self.mid), self.rad, self.prec)

    def __sub__(self, other):
        o = self._coerce(other)
        p = self.prec
        m = mpf_sub(self.mid, o.mid, p, _NEAREST)
        return PrecReal(m, _r_add(self.rad, o.rad, _ulp(m, p, _ULPS_ARITH)), p)

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        o = self._coerce(other)
        p = self.prec
        m = mpf_mul(self.mid, o.mid, p, _NEAREST)
        rad = _r_add(
            _r_mul(mpf_abs(self.mid), o.rad),
            _r_mul(mpf_abs(o.mid), self.rad),
            _r_mul(self.rad, o.rad),
            _ulp(m, p, _ULPS_ARITH),
        )
        return PrecReal(m, rad, p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        p = self.prec
        denom_lo = mpf_sub(mpf_abs(o.mid), o.rad, _RPREC, "d")
        if mpf_cmp(denom_lo, fzero) <= 0:
            raise PrecisionError("division by a ball containing zero")
        m = mpf_div(self.mid, o.mid, p, _NEAREST)
        num = _r_add(self.rad, _r_mul(mpf_abs(m), o.rad))
        rad = _r_add(mpf_div(num, denom_lo, _RPREC, _UP), _ulp(m, p, _ULPS_ARITH))
        return PrecReal(m, rad, p)

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def sqrt(self) -> "PrecReal":
        p = self.prec
        lo = mpf_sub(self.mid, self.rad, _RPREC, "d")
        if mpf_cmp(lo, fzero) < 0:
            raise PrecisionError("sqrt of a ball touching the negative axis")
        m = mpf_sqrt(self.mid, p, _NEAREST)
        if self.rad == fzero:
            rad = _ulp(m, p, _ULPS_TRANS)
        elif mpf_cmp(lo, fzero) == 0:
            # sqrt is not Lipschitz at 0: use the upper endpoint directly
            rad = _r_add(
                mpf_sqrt(mpf_add(self.mid, self.rad, _RPREC, _UP), _RPREC, _UP),
                _ulp(m, p, _ULPS_TRANS),
            )
        else:
            # |sqrt'| <= 1/(2 sqrt(lo)) on the ball
            denom = mpf_mul(mpf_sqrt(lo, _RPREC, "d"), from_int(2), _RPREC, "d")
            rad = _r_add(mpf_div(self.rad, denom, _RPREC, _UP), _ulp(m, p, _ULPS_TRANS))
        return PrecReal(m, rad, p)

    def log(self) -> "PrecReal":
        p = self.prec
        lo = mpf_sub(self.mid, self.rad, _RPREC, "d")
        if mpf_cmp(lo, fzero) <= 0:
            raise PrecisionError("log of a ball touching (-inf, 0]")
        m = mpf_log(self.mid, p, _NEAREST)
        # |log|' = 1/x, monotone: bound by rad / (mid - rad)
        rad = _r_add(mpf_div(self.rad, lo, _RPREC, _UP), _ulp(m, p, _ULPS_TRANS))
        return PrecReal(m, rad, p)

    def exp(self) -> "PrecReal":
        p = self.prec
        m = mpf_exp(self.mid, p, _NEAREST)
        quarter = mpf_shift(fone, -2)
        if mpf_cmp(self.rad, quarter) <= 0:
            # exp(mid + r) - exp(mid) <= exp(mid) * r * e^r <= 1.3 * exp(mid) * r
            slack = from_rational(13, 10, _RPREC, _UP)
            spread = _r_mul(_r_mul(mpf_abs(m), self.rad), slack)
        else:
            grow = mpf_exp(self.rad, _RPREC, _UP)
            spread = _r_mul(mpf_abs(m), mpf_sub(grow, fone, _RPREC, _UP))
        rad = _r_add(spread, _ulp(m, p, _ULPS_TRANS))
        return PrecReal(m, rad, p)

    def pow_int(self, n: int) -> "PrecReal":
        if n < 0:
            return PrecReal.from_int(1, self.prec) / self.pow_int(-n)
        if n == 0:
            return PrecReal.from_int(1, self.prec)
        result = None
        base = self
        while True:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if not n:
                return result
            base = base * base

    def abs(self) -> "PrecReal":
        return PrecReal(mpf_abs(self.mid), self.rad, self.prec)

    def widened(self, bound: Fraction) -> "PrecReal":
        """Same midpoint with `bound` added to the radius (tail estimates)."""
        b = Fraction(bound)
        if b < 0:
            raise ValueError("radius increment must be >= 0")
        extra = from_rational(b.numerator, b.denominator, _RPREC, _UP)
        return PrecReal(self.mid, _r_add(self.rad, extra), self.prec)

    # --- queries ---------------------------------------------------------

    def mid_float(self) -> float:
        from mpmath.libmp import to_float

        return to_float(self.mid)

    def rad_float(self) -> float:
        from mpmath.libmp import to_float

        return to_float(self.rad)

    def lower(self):
        return mpf_sub(self.mid, self.rad, self.prec, "d")

    def upper(self):
        return mpf_add(self.mid, self.rad, self.prec, _UP)

    def is_positive(self) -> bool:
        """Certified: the whole ball lies in (0, inf)."""
        return mpf_cmp(self.lower(), fzero) > 0

    def is_negative(self) -> bool:
        return mpf_cmp(self.upper(), fzero) < 0

    def agrees_with(self, other: "PrecReal") -> bool:
        """True when the two balls overlap (|m1-m2| <= r1+r2, with slack)."""
        diff = mpf_abs(mpf_sub(self.mid, other.mid, _RPREC, _UP))
        tol = _r_add(self.rad, other.rad, _ulp(self.mid, min(self.prec, other.prec), 4))
        return mpf_cmp(diff, tol) <= 0

    def within(self, other: "PrecReal", tol: Fraction) -> bool:
        """Tolerance-t comparison: asserted only when both radii < t/10."""
        t = PrecReal.from_fraction(Fraction(tol), _RPREC * 3)
        tenth = mpf_div(t.mid, from_int(10), _RPREC, "d")
        if mpf_cmp(self.rad, tenth) >= 0 or mpf_cmp(other.rad, tenth) >= 0:
            raise PrecisionError("radii too large for the requested tolerance")
        diff = mpf_abs(mpf_sub(self.mid, other.mid, _RPREC, _UP))
        return mpf_cmp(diff, t.mid) < 0

    def matches_printed(self, printed: str) -> bool:
        """Agreement with a printed decimal to within one unit in its last
        place (covers both truncated and rounded renderings)."""
        places = len(printed.split(".")[1]) if "." in printed else 0
        q = Fraction(printed)
        unit = Fraction(1, 10**places)
        diff = (self - q).abs()
        bound = PrecReal.from_fraction(unit, self.prec)
        return mpf_cmp(diff.upper(), bound.mid) < 0

    def to_decimal(self, dps: int) -> str:
        return to_str(self.mid, dps)

    def rad_decimal(self) -> str:
        return to_str(self.rad, 3)

    def __repr__(self) -> str:
        return f"PrecReal({to_str(self.mid, 20)} +- {to_str(self.rad, 3)})"


def pi_ball(prec: int) -> PrecReal:
    m = mpf_pi(prec, _NEAREST)
    return PrecReal(m, _ulp(m, prec, 1), prec)


def sqrt3_ball(prec: int) -> PrecReal:
    return PrecReal.from_int(3, prec).sqrt()


def _sin_pi_ball(q: Fraction, prec: int) -> PrecReal:
    x = from_rational(q.numerator, q.denominator, prec, _NEAREST)
    m = mpf_sin_pi(x, prec, _NEAREST)
    # |d/dx sin(pi x)| <= pi; argument rounding <= ulp(x)
    arg_err = _r_mul(_ulp(x, prec, 1), from_int(4))
    return PrecReal(m, _r_add(arg_err, _ulp(m, prec, _ULPS_TRANS)), prec)


# --- gamma / digamma ------------------------------------------------------

def _stirling_shift(prec: int) -> int:
    # ln Gamma remainder ~ e^{-2 pi t}; t >= prec*ln2/(2 pi) with margin
    return max(12, int(0.12 * prec) + 6)


def _log_gamma_large(t: Fraction, prec: int) -> PrecReal:
    """ln Gamma(t) for t >= the Stirling threshold, remainder certified by
    the first omitted term (valid for real t > 0)."""
    tb = PrecReal.from_fraction(t, prec)
    half = Fraction(1, 2)
    two_pi = pi_ball(prec) * 2
    acc = (tb - half) * tb.log() - tb + two_pi.log() * half
    inv_t2 = 1 / (tb * tb)
    power = 1 / tb  # t^{-(2j-1)}
    target = mpf_shift(mpf_abs(acc.mid), -(prec + 6))
    prev = None
    for j in range(1, 260):
        p, qd = bernfrac(2 * j)
        coeff = Fraction(int(p), int(qd) * (2 * j) * (2 * j - 1))
        term = power * coeff
        t_abs = mpf_abs(term.mid)
        if prev is not None and mpf_cmp(t_abs, prev) > 0:
            raise PrecisionError("Stirling series diverging before target")
        if mpf_cmp(t_abs, target) < 0:
            # remainder bounded by the first omitted term's magnitude
            rem = _r_add(t_abs, term.rad)
            return PrecReal(acc.mid, _r_add(acc.rad, rem), prec)
        acc = acc + term
        power = power * inv_t2
        prev = t_abs
    raise PrecisionError("Stirling series did not reach target precision")


def gamma_rational(q: Fraction, digits: int) -> PrecReal:
    """Gamma at an exact rational point, with certified radius."""
    q = Fraction(q)
    if q.denominator == 1 and q <= 0:
        raise ValueError("gamma pole at nonpositive integer")
    prec = bits_for_digits(digits)
    if q < Fraction(1, 2):
        # reflection: Gamma(q) = pi / (sin(pi q) * Gamma(1 - q))
        return pi_ball(prec) / (_sin_pi_ball(q, prec) * gamma_rational(1 - q, digits))
    shift = _stirling_shift(prec)
    k = max(0, shift - math.floor(q))
    t = q + k
    ln_g = _log_gamma_large(t, prec)
    g = ln_g.exp()
    if k:
        prod = Fraction(1)
        for i in range(k):
            prod *= q + i
        g = g / PrecReal.from_fraction(prod, prec)
    return g


def digamma_rational(q: Fraction, digits: int) -> PrecReal:
    """Digamma at an exact rational point, with certified radius."""
    q = Fraction(q)
    if q.denominator == 1 and q <= 0:
        raise ValueError("digamma pole at nonpositive integer")
    prec = bits_for_digits(digits)
    shift = _stirling_shift(prec)
    k = max(0, shift - math.floor(q))
    t = q + k
    tb = PrecReal.from_fraction(t, prec)
    acc = tb.log() - 1 / (tb * 2)
    inv_t2 = 1 / (tb * tb)
    power = inv_t2
    target = mpf_shift(mpf_abs(acc.mid), -(prec + 6))
    done = False
    prev = None
    for j in range(1, 260):
        p, qd = bernfrac(2 * j)
        term = power * Fraction(int(p), int(qd) * 2 * j)
        t_abs = mpf_abs(term.mid)
        if prev is not None and mpf_cmp(t_abs, prev) > 0:
            raise PrecisionError("digamma asymptotic series diverging")
        if mpf_cmp(t_abs, target) < 0:
            acc = PrecReal(acc.mid, _r_add(acc.rad, t_abs, term.rad), prec)
            done = True
            break
        acc = acc - term
        power = power * inv_t2
        prev = t_abs
    if not done:
        raise PrecisionError("digamma asymptotic series did not converge")
    if k:
        # psi(q) = psi(q + k) - sum_{i<k} 1/(q+i), the sum taken exactly
        s = Fraction(0)
        for i in range(k):
            s += Fraction(1) / (q + i)
        acc = acc - PrecReal.from_fraction(s, prec)
    return acc
