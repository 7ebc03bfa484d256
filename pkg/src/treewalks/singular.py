"""Singular expansions at the dominant singularities and the asymptotic
evaluators for both counting sequences.

Pipeline, all in the re-centered variable Z = 1 - 7z:

* ``expand_fg``: B(z) = f(z) + log(1 - phi(z)) g(z) near z = 1/7.  The g
  series is exact: only rational series enter, times a prefactor that is a
  rational multiple of sqrt(3)/pi (kept symbolic in :class:`SymRational`).
  The f series carries digamma constants and is computed in balls.
* ``kappa``: exact rational coefficients of the asymptotic power series
  b_n / 7^n ~ (sqrt3/pi) * sum kappa_i / n^i.  Each g-term contributes an
  exact falling-factorial k!/(n(n-1)...(n-k)), which is re-expanded into
  powers of 1/n with complete homogeneous symmetric numbers; dropping that
  re-expansion (i.e. reading kappa_i off g_{i-1} alone) gives a series that
  is wrong from the second term on, and the order-improvement test fails.
* ``bootstrap_psi``: the substitution iteration inverting y near 1/7,
  yielding the degree-six polynomial gamma and the log coefficient C of the
  expansion of psi = y^{-1} at 1/rho.  The W^6 log W term sheds an extra
  C*log(s) V^6 contribution (W = sV) that belongs to gamma's top
  coefficient; without it the psi*S residual stalls at order V^6.
* ``sing_A``: expansion of A = z/psi at 1/rho; T is the order-6 reciprocal
  of gamma (the reciprocal's V^1..V^6 coefficients need gamma's linear term,
  which is -1/(7 + rho*lambda), not zero).
* ``asym_bn`` / ``asym_an``: the resulting asymptotic evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import TextIO

from .precision import (
    PrecReal,
    bits_for_digits,
    digamma_rational,
    gamma_rational,
    pi_ball,
    sqrt3_ball,
)
from .series import conv_trunc, inv_trunc, poly_eval_series

__all__ = [
    "SymRational",
    "SingExpansionB",
    "PsiExpansion",
    "AExpansion",
    "MAX_ORDER",
    "g_rational",
    "expand_fg",
    "kappa",
    "asym_bn",
    "bootstrap_psi",
    "sing_A",
    "asym_an",
    "write_kappa_csv",
    "expansion_json",
]

MAX_ORDER = 40


@dataclass(frozen=True)
class SymRational:
    """Exact rational q standing for the real number q * sqrt(3) / pi.

    Closed under addition and under scaling by rationals; the product of two
    SymRationals is not a SymRational and is deliberately not provided.
    """

    q: Fraction

    def __add__(self, other: "SymRational") -> "SymRational":
        return SymRational(self.q + other.q)

    def scaled(self, c: Fraction) -> "SymRational":
        return SymRational(self.q * Fraction(c))

    def is_zero(self) -> bool:
        return self.q == 0

    def value(self, digits: int) -> PrecReal:
        prec = bits_for_digits(digits)
        return PrecReal.from_fraction(self.q, prec) * sqrt3_ball(prec) / pi_ball(prec)


@dataclass(frozen=True)
class SingExpansionB:
    """Coefficients of B = f + log(1 - phi) g re-centered at Z = 1 - 7z."""

    f_coeffs: list  # PrecReal
    g_coeffs: list  # SymRational
    order: int


@dataclass(frozen=True)
class PsiExpansion:
    """psi(z) = gamma(V) + C V^6 log V + O(V^7 log V), V = 1 - rho z."""

    gamma_coeffs: list  # 7 PrecReal values
    C: PrecReal


@dataclass(frozen=True)
class AExpansion:
    """A(z) = eta(V) + log_coeff V^6 log V + O(V^7 log V), V = 1 - rho z."""

    eta_coeffs: list  # 8 PrecReal values
    log_coeff: PrecReal


def _pochhammer(q: Fraction, k: int) -> Fraction:
    r = Fraction(1)
    for i in range(k):
        r *= q + i
    return r


@lru_cache(maxsize=4)
def _rational_frame(order: int):
    """Exact series in Z for z, u = 1 - phi, R1, R2, P, 1/(30 z^5)."""
    zero, one = Fraction(0), Fraction(1)
    n = order

    def poly_at(coeffs, s):
        return poly_eval_series([Fraction(c) for c in coeffs], s, n, zero)

    z = [Fraction(1, 7), Fraction(-1, 7)] + [zero] * (n - 2)
    # 1 - phi = Z (1+2z)^2 / (1-z)^3
    t1 = poly_at([1, 2], z)
    t1 = conv_trunc(t1, t1, n, zero)
    t2 = poly_at([1, -1], z)
    t2 = conv_trunc(conv_trunc(t2, t2, n, zero), t2, n, zero)
    u = conv_trunc(t1, inv_trunc(t2, n, one), n, zero)
    u = [zero] + u[: n - 1]
    r1 = conv_trunc(
        conv_trunc(poly_at([1, 1], z), poly_at([1, 1], z), n, zero),
        conv_trunc(
            poly_at([5, 60, 45, 214], z),
            inv_trunc(poly_at([-1, 1], z), n, one),
            n,
            zero,
        ),
        n,
        zero,
    )
    r2 = conv_trunc(
        conv_trunc(poly_at([1, 1], z), poly_at([1, 1], z), n, zero),
        poly_at([5, 74, 101], z),
        n,
        zero,
    )
    r2 = conv_trunc(r2, conv_trunc(z, z, n, zero), n, zero)
    r2 = [6 * c for c in r2]
    dd = conv_trunc(poly_at([-1, 1], z), poly_at([-1, 1], z), n, zero)
    r2 = conv_trunc(r2, inv_trunc(dd, n, one), n, zero)
    p = poly_at([1, 15, 46, 66, 28], z)
    z5 = conv_trunc(conv_trunc(z, z, n, zero), conv_trunc(z, conv_trunc(z, z, n, zero), n, zero), n, zero)
    inv30z5 = [c / 30 for c in inv_trunc(z5, n, one)]
    return u, r1, r2, p, inv30z5


def _poch_ratio(a: Fraction, b: Fraction, k: int) -> Fraction:
    return _pochhammer(a + 1, k) * _pochhammer(b + 1, k) / (
        Fraction(math.factorial(k)) * math.factorial(k + 1)
    )


@lru_cache(maxsize=4)
def g_rational(order: int) -> tuple[Fraction, ...]:
    """Exact rational parts of the g-series: g_n = g_rational[n] * sqrt3/pi.

    The first six entries cancel identically; that cancellation is asserted
    here because everything downstream depends on it.
    """
    if order > MAX_ORDER + 1:
        raise ValueError(f"expansion order capped at {MAX_ORDER}")
    zero = Fraction(0)
    n = order
    u, r1, r2, _, inv30z5 = _rational_frame(n)

    def t_series(a, b):
        acc = [zero] * n
        for k in reversed(range(n)):
            acc[0] += _poch_ratio(a, b, k)
            acc = conv_trunc(acc, u, n, zero)
        return acc

    t1 = t_series(Fraction(1, 3), Fraction(2, 3))
    t2 = t_series(Fraction(2, 3), Fraction(4, 3))
    # prefactors Gamma(a+b+1)/(Gamma(a)Gamma(b)) = (1/2, 3) * sqrt3/pi
    inner = [Fraction(1, 2) * x + 3 * y for x, y in
             zip(conv_trunc(r1, t1, n, zero), conv_trunc(r2, t2, n, zero))]
    g = conv_trunc(inv30z5, inner, n, zero)
    for i in range(min(6, n)):
        if g[i] != 0:
            raise AssertionError(f"g coefficient {i} must cancel exactly, got {g[i]}")
    return tuple(g)


@lru_cache(maxsize=8)
def expand_fg(order: int, digits: int) -> SingExpansionB:
    """Taylor data of f and g at z = 1/7 (f in balls, g exact)."""
    if order > MAX_ORDER:
        raise ValueError(f"expansion order capped at {MAX_ORDER}")
    prec = bits_for_digits(digits)
    n = order
    zero_b = PrecReal.zero(prec)
    u, r1, r2, p, inv30z5 = _rational_frame(n)
    s3pi = sqrt3_ball(prec) / pi_ball(prec)

    def lift(seq):
        return [PrecReal.from_fraction(c, prec) for c in seq]

    ub = lift(u)

    def s_series(a: Fraction, b: Fraction):
        # digamma ladder: c_k from c_0 by exact increments
        ck = (
            digamma_rational(a + 1, digits)
            + digamma_rational(b + 1, digits)
            - digamma_rational(Fraction(1), digits)
            - digamma_rational(Fraction(2), digits)
        )
        coeffs = []
        for k in range(n):
            coeffs.append(PrecReal.from_fraction(_poch_ratio(a, b, k), prec) * ck)
            ck = ck + (
                Fraction(1) / (a + k + 1)
                + Fraction(1) / (b + k + 1)
                - Fraction(1, k + 1)
                - Fraction(1, k + 2)
            )
        acc = [zero_b] * n
        for k in reversed(range(n)):
            acc[0] = acc[0] + coeffs[k]
            acc = conv_trunc(acc, ub, n, zero_b)
        return acc

    s1 = s_series(Fraction(1, 3), Fraction(2, 3))
    s2 = s_series(Fraction(2, 3), Fraction(4, 3))
    c1 = gamma_rational(Fraction(2), digits) / (
        gamma_rational(Fraction(4, 3), digits) * gamma_rational(Fraction(5, 3), digits)
    )
    c2 = gamma_rational(Fraction(3), digits) / (
        gamma_rational(Fraction(5, 3), digits) * gamma_rational(Fraction(7, 3), digits)
    )
    inner = [
        PrecReal.from_fraction(r1c, prec) * c1
        + PrecReal.from_fraction(r2c, prec) * c2
        + PrecReal.from_fraction(5 * pc, prec)
        for r1c, r2c, pc in zip(r1, r2, p)
    ]
    half_s3pi = s3pi * Fraction(1, 2)
    three_s3pi = s3pi * 3
    t_a = conv_trunc(lift(r1), [half_s3pi * c for c in s1], n, zero_b)
    t_b = conv_trunc(lift(r2), [three_s3pi * c for c in s2], n, zero_b)
    inner = [a + b + c for a, b, c in zip(inner, t_a, t_b)]
    f = conv_trunc(lift(inv30z5), inner, n, zero_b)
    g = [SymRational(q) for q in g_rational(n)]
    return SingExpansionB(f_coeffs=f, g_coeffs=g, order=n)


@lru_cache(maxsize=None)
def _complete_homogeneous(m: int, i: int) -> int:
    """h_m(1, 2, ..., i): complete homogeneous symmetric number."""
    if m == 0:
        return 1
    if i == 0:
        return 0
    return _complete_homogeneous(m, i - 1) + i * _complete_homogeneous(m - 1, i)


@lru_cache(maxsize=8)
def kappa(i_max: int) -> tuple[Fraction, ...]:
    """Exact rationals kappa_7 .. kappa_{i_max} of the 1/n asymptotic series.

    Sources: [z^n] g_k Z^k log Z = 7^n (-1)^(k+1) k! / (n(n-1)...(n-k)),
    re-expanded via 1/((1-1/n)...(1-k/n)) = sum_m h_m(1..k) n^-m.  The
    leading identity kappa_{k+1} = (-1)^(k+1) k! g_k survives only for k = 6.
    """
    if i_max > MAX_ORDER:
        raise ValueError(f"kappa index capped at {MAX_ORDER}")
    if i_max < 7:
        raise ValueError("the series starts at index 7")
    g = g_rational(i_max)
    out = []
    for j in range(7, i_max + 1):
        s = Fraction(0)
        for i in range(6, j):
            s += g[i] * ((-1) ** (i + 1) * math.factorial(i) * _complete_homogeneous(j - 1 - i, i))
        out.append(s)
    return tuple(out)


def asym_bn(n: int, order: int, digits: int = 60) -> PrecReal:
    """Asymptotic value 7^n (sqrt3/pi) sum_{i=7}^{order} kappa_i / n^i."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 7 <= order <= MAX_ORDER:
        raise ValueError("order must lie in [7, MAX_ORDER]")
    prec = bits_for_digits(digits)
    ks = kappa(order)
    inv_n = Fraction(1, n)
    acc = Fraction(0)
    for i in reversed(range(7, order + 1)):
        acc = (acc + ks[i - 7]) * inv_n
    acc *= inv_n ** 6
    scale = sqrt3_ball(prec) / pi_ball(prec) * PrecReal.from_int(7, prec).pow_int(n)
    return scale * PrecReal.from_fraction(acc, prec)


@lru_cache(maxsize=8)
def bootstrap_psi(digits: int) -> PsiExpansion:
    """Invert y near 1/7 by the substitution iteration; return gamma and C.

    The closed form C = 7^5 K rho / (6! (7 + rho lambda)^7) is asserted
    against the iteration's value before returning.
    """
    inner_digits = digits + 10
    exp = expand_fg(8, inner_digits)
    f = exp.f_coeffs
    g6 = exp.g_coeffs[6].value(inner_digits)
    k_const = -720 * g6
    log_21_8 = (PrecReal.from_fraction(Fraction(21, 8), bits_for_digits(inner_digits))).log()
    denom = f[0] - f[1]  # = 7/rho + lambda
    a_sub = {i: (f[i - 1] - f[i]) / denom for i in range(2, 6)}
    a_sub[6] = (f[5] - f[6] - g6 * log_21_8) / denom
    c_sub = k_const / (720 * denom)

    # Y = W - Q(Y) - c Y^6 log Y; iterate the polynomial part to order 7.
    # Five substitutions stabilize degree six; run seven for slack.
    n = 8
    zero_b = PrecReal.zero(bits_for_digits(inner_digits))
    w_series = [zero_b, zero_b + 1] + [zero_b] * (n - 2)
    y = list(w_series)
    for _ in range(7):
        q_y = [zero_b] * n
        for i in reversed(range(2, 7)):
            q_y[0] = q_y[0] + a_sub[i]
            q_y = conv_trunc(q_y, y, n, zero_b)
        q_y = conv_trunc(q_y, y, n, zero_b)
        y = [w_series[idx] - q_y[idx] for idx in range(n)]

    rho = 7 / f[0]
    lam = -f[1]
    s = 7 / (7 + rho * lam)
    c_log = (c_sub / 7) * s.pow_int(6)
    gamma = [PrecReal.from_fraction(Fraction(1, 7), bits_for_digits(inner_digits))]
    s_pow = s
    for i in range(1, 7):
        gamma.append(-y[i] / 7 * s_pow)
        s_pow = s_pow * s
    # W^6 log W = s^6 V^6 (log V + log s): the log(s) part is a pure V^6 term
    gamma[6] = gamma[6] + c_log * s.log()

    c_closed = (
        PrecReal.from_int(7 ** 5, bits_for_digits(inner_digits))
        * k_const
        * rho
        / (720 * (7 + rho * lam).pow_int(7))
    )
    if not c_log.agrees_with(c_closed):
        raise AssertionError("bootstrap C disagrees with its closed form")
    return PsiExpansion(gamma_coeffs=gamma, C=c_log)


@lru_cache(maxsize=8)
def sing_A(digits: int) -> AExpansion:
    """Expansion of the generator A at 1/rho from the psi expansion."""
    psi = bootstrap_psi(digits)
    prec = psi.gamma_coeffs[0].prec
    exp = expand_fg(2, digits + 10)
    rho = 7 / exp.f_coeffs[0]
    t = inv_trunc(psi.gamma_coeffs, 7, PrecReal.from_int(1, prec))
    eta = []
    for i in range(8):
        cur = t[i] if i < 7 else PrecReal.zero(prec)
        prev = t[i - 1] if 1 <= i <= 7 else PrecReal.zero(prec)
        eta.append((cur - prev) / rho)
    log_coeff = -49 * psi.C / rho
    seven_over_rho = 7 / rho
    if not eta[0].agrees_with(seven_over_rho):
        raise AssertionError("eta(0) must equal 7/rho")
    return AExpansion(eta_coeffs=eta, log_coeff=log_coeff)


def growth_constant_m(digits: int = 60) -> PrecReal:
    """M = 49 * 6! * C / rho, the constant of the a_n asymptotic law."""
    psi = bootstrap_psi(digits)
    exp = expand_fg(2, digits + 10)
    rho = 7 / exp.f_coeffs[0]
    return 49 * 720 * psi.C / rho


def asym_an(n: int, digits: int = 60) -> PrecReal:
    """Asymptotic value M rho^n / n^7."""
    if n < 1:
        raise ValueError("n must be >= 1")
    exp = expand_fg(2, digits + 10)
    rho = 7 / exp.f_coeffs[0]
    m_const = growth_constant_m(digits)
    return m_const * rho.pow_int(n) / Fraction(n) ** 7


def write_kappa_csv(stream: TextIO, i_max: int) -> None:
    """CSV table `i,numerator,denominator` of the exact kappa values."""
    stream.write("i,numerator,denominator\n")
    for i, q in zip(range(7, i_max + 1), kappa(i_max)):
        stream.write(f"{i},{q.numerator},{q.denominator}\n")


def expansion_json(digits: int = 60) -> str:
    import json

    psi = bootstrap_psi(digits)
    a_exp = sing_A(digits)
    m_const = growth_constant_m(digits)
    dps = digits

    def dec(x: PrecReal):
        return {"midpoint": x.to_decimal(dps), "radius": x.rad_decimal()}

    return json.dumps(
        {
            "schema_version": "1",
            "gamma": [dec(c) for c in psi.gamma_coeffs],
            "eta": [dec(c) for c in a_exp.eta_coeffs],
            "C": dec(psi.C),
            "A_log_coeff": dec(a_exp.log_coeff),
            "M": dec(m_const),
        },
        indent=2,
    )
