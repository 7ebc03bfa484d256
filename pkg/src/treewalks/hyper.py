"""Hypergeometric closed form of the walk generating function B, and the
certified evaluation of every closed-form constant.

``eval_B`` evaluates B on the real window (-1/2, 1/7] through the 2F1
representation, switching to exact partial sums near 0 where the 1/(30 z^5)
prefactor would cancel catastrophically.  ``constants`` produces the six
headline constants, each computed by two independent routes whose balls
must overlap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .precision import (
    PrecReal,
    PrecisionError,
    bits_for_digits,
    digamma_rational,
    gamma_rational,
    pi_ball,
    sqrt3_ball,
)
from . import walks

__all__ = [
    "hyp2f1",
    "eval_B",
    "constants",
    "constants_json",
    "ConstantRecord",
    "CertificationError",
    "B_WINDOW_LO",
    "B_WINDOW_HI",
]

B_WINDOW_LO = Fraction(-1, 2)   # exclusive
B_WINDOW_HI = Fraction(1, 7)    # inclusive

_SERIES_CUT = Fraction(1, 20)   # |z| below this: exact partial sums of B


class CertificationError(ArithmeticError):
    """Two routes to the same constant failed to overlap."""


def rational_phi(z: Fraction) -> Fraction:
    """Pullback argument 27 (z+1) z^2 / (1-z)^3 of the 2F1 pair."""
    z = Fraction(z)
    return 27 * (z + 1) * z * z / (1 - z) ** 3


def _prefactors(z: Fraction) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    r1 = (z + 1) ** 2 * (214 * z**3 + 45 * z**2 + 60 * z + 5) / (z - 1)
    r2 = 6 * z**2 * (z + 1) ** 2 * (101 * z**2 + 74 * z + 5) / (z - 1) ** 2
    p = 28 * z**4 + 66 * z**3 + 46 * z**2 + 15 * z + 1
    pre = Fraction(1, 30) / z**5
    return r1, r2, p, pre


def _gauss_value(a: Fraction, b: Fraction, c: Fraction, digits: int) -> PrecReal:
    if c - a - b <= 0:
        raise ValueError("Gauss evaluation needs c - a - b > 0")
    return (
        gamma_rational(c, digits)
        * gamma_rational(c - a - b, digits)
        / (gamma_rational(c - a, digits) * gamma_rational(c - b, digits))
    )


def _geom_tail(term_mag: Fraction, ratio: Fraction) -> Fraction:
    if ratio >= Fraction(49, 50):
        raise PrecisionError("tail ratio too close to 1")
    return term_mag / (1 - ratio)


def _series_2f1(a: Fraction, b: Fraction, c: Fraction, z: PrecReal, zmag: Fraction,
                digits: int) -> PrecReal:
    """Direct series, |z| <= 0.9, with a certified geometric tail."""
    prec = bits_for_digits(digits)
    term = PrecReal.from_int(1, prec)
    term_mag = Fraction(1)
    total = term
    k = 0
    eps = Fraction(1, 2 ** (prec + 6))
    while True:
        mult = (a + k) * (b + k) / ((c + k) * (1 + k))
        term = term * mult * z
        term_mag = term_mag * abs(mult) * zmag
        total = total + term
        k += 1
        # sup over j >= k of |(a+j)(b+j)/((c+j)(1+j))| * |z|; both factors
        # are monotone in j with limit 1
        ratio = zmag * max(Fraction(1), (a + k) / (1 + k)) * max(Fraction(1), (b + k) / (c + k))
        if ratio < Fraction(19, 20):
            tail = _geom_tail(term_mag * ratio, ratio)
            if tail < eps:
                return total.widened(tail)
        if k > 40 * digits + 200:
            raise PrecisionError("2F1 series did not reach target precision")


def _connection_2f1(a: Fraction, b: Fraction, c: Fraction, w: PrecReal,
                    wmag: Fraction, digits: int) -> PrecReal:
    """2F1 at z = 1 - w for c = a + b + 1, |w| < 0.9, via the logarithmic
    connection expansion C + S(z) + log(w) T(z)."""
    if c != a + b + 1:
        raise ValueError("connection formula requires c = a + b + 1")
    prec = bits_for_digits(digits)
    c_ab = gamma_rational(a + b + 1, digits) / (
        gamma_rational(a + 1, digits) * gamma_rational(b + 1, digits)
    )
    pref = gamma_rational(a + b + 1, digits) / (
        gamma_rational(a, digits) * gamma_rational(b, digits)
    )
    # c_k = psi(a+k+1) + psi(b+k+1) - psi(k+1) - psi(k+2); exact increments
    ck = (
        digamma_rational(a + 1, digits)
        + digamma_rational(b + 1, digits)
        - digamma_rational(Fraction(1), digits)
        - digamma_rational(Fraction(2), digits)
    )
    p_term = w  # p_k w^{k+1} ball, starting k=0
    p_mag = wmag
    t_total = p_term
    s_total = p_term * ck
    k = 0
    eps = Fraction(1, 2 ** (prec + 6))
    while True:
        mult = (a + 1 + k) * (b + 1 + k) / ((k + 1) * (k + 2))
        p_term = p_term * mult * w
        p_mag = p_mag * abs(mult) * wmag
        ck = ck + (
            Fraction(1, 1) / (a + k + 1)
            + Fraction(1) / (b + k + 1)
            - Fraction(1, k + 1)
            - Fraction(1, k + 2)
        )
        k += 1
        t_total = t_total + p_term
        s_total = s_total + p_term * ck
        ratio = wmag * max(Fraction(1), (a + 1 + k) / (1 + k)) * max(
            Fraction(1), (b + 1 + k) / (2 + k)
        )
        if ratio < Fraction(19, 20):
            t_tail = _geom_tail(p_mag * ratio, ratio)
            if t_tail < eps:
                # |c_j| for j >= k is bounded: increments are O(1/j^2)
                kap = abs(a) + abs(1 - b) + 2
                c_bound = Fraction(abs(ck.mid_float())) + kap
                t_total = t_total.widened(t_tail)
                s_total = s_total.widened(c_bound * t_tail)
                break
        if k > 40 * digits + 200:
            raise PrecisionError("connection series did not converge")
    log_w = w.log()
    return c_ab + pref * (s_total + log_w * t_total)


def hyp2f1(a: Fraction, b: Fraction, c: Fraction, z, digits: int) -> PrecReal:
    """Gauss hypergeometric 2F1(a, b; c; z) on the supported real regimes.

    Dispatch: z = 1 exactly -> Gauss summation; |z| <= 0.9 -> direct series;
    |1-z| < 0.9 (and c = a+b+1) -> logarithmic connection expansion.
    """
    a, b, c = Fraction(a), Fraction(b), Fraction(c)
    prec = bits_for_digits(digits)
    if isinstance(z, Fraction) or isinstance(z, int):
        zq = Fraction(z)
        if zq == 1:
            return _gauss_value(a, b, c, digits)
        zb = PrecReal.from_fraction(zq, prec)
        zmag = abs(zq)
        wmag = abs(1 - zq)
    else:
        zb = z
        zmag = Fraction(abs(zb.mid_float())) + Fraction(1, 10**6)
        wmag = Fraction(abs(1 - Fraction(zb.mid_float()))) + Fraction(1, 10**6)
    if zmag <= Fraction(9, 10):
        return _series_2f1(a, b, c, zb, zmag, digits)
    if wmag < Fraction(9, 10):
        one = PrecReal.from_int(1, prec)
        return _connection_2f1(a, b, c, one - zb, wmag, digits)
    raise ValueError("argument outside the supported evaluation regimes")


def eval_B(z: Fraction, digits: int = 60) -> PrecReal:
    """Value of the walk generating function B at an exact rational z in
    (-1/2, 1/7]."""
    z = Fraction(z)
    if not (B_WINDOW_LO < z <= B_WINDOW_HI):
        raise ValueError("z outside the real evaluation window (-1/2, 1/7]")
    prec = bits_for_digits(digits)
    if z == 0:
        return PrecReal.from_int(1, prec)
    if abs(z) < _SERIES_CUT:
        # exact partial sum; the prefactor route would cancel ~5 digits per
        # decade here, the series is cheap and certified
        q = 7 * abs(z)
        n_terms = int((prec + 8) / -(math.log2(q.numerator) - math.log2(q.denominator))) + 2
        bs = walks.bn_exact_range(n_terms)
        acc = Fraction(0)
        zp = Fraction(1)
        for n in range(n_terms + 1):
            acc += bs[n] * zp
            zp *= z
        tail = 6 * q ** (n_terms + 1) / (1 - q)
        return PrecReal.from_fraction(acc, prec).widened(tail)
    phi = rational_phi(z)
    r1, r2, p, pre = _prefactors(z)
    f1 = hyp2f1(Fraction(1, 3), Fraction(2, 3), Fraction(2), phi, digits)
    f2 = hyp2f1(Fraction(2, 3), Fraction(4, 3), Fraction(3), phi, digits)
    return (f1 * r1 + f2 * r2 + 5 * p) * PrecReal.from_fraction(pre, prec)


# --- constants certification ------------------------------------------------


@dataclass(frozen=True)
class ConstantRecord:
    name: str
    value: PrecReal
    closed_form: str
    paper_approx: str
    alternate: PrecReal


_CLOSED_FORMS = {
    "rho": "5*pi/(8575*pi - 15552*sqrt(3))",
    "K": "4117715*sqrt(3)/(864*pi)",
    "M": "(4*sqrt(3)/(421875*pi)) * ((8575*pi-15552*sqrt(3))/(2592*sqrt(3)-1429*pi))^7",
    "lambda": "(852768*sqrt(3) - 470155*pi)/(10*pi)",
    "y_prime_1_7": "lambda + 7/rho",
    "A_prime_1_rho": "7 - 49/(rho*lambda + 7)",
}

_PAPER_APPROX = {
    "rho": "6.8211",
    "K": "2627.6",
    "M": "1721.0",
    "lambda": "0.0639",
    "y_prime_1_7": "1.0901",
    "A_prime_1_rho": "0.4106",
}


def closed_form_values(digits: int) -> dict[str, PrecReal]:
    """The six constants straight from their closed forms."""
    prec = bits_for_digits(digits)
    pi = pi_ball(prec)
    s3 = sqrt3_ball(prec)
    rho = 5 * pi / (8575 * pi - 15552 * s3)
    k_const = 4117715 * s3 / (864 * pi)
    m_const = (4 * s3 / (421875 * pi)) * (
        (8575 * pi - 15552 * s3) / (2592 * s3 - 1429 * pi)
    ).pow_int(7)
    lam = (852768 * s3 - 470155 * pi) / (10 * pi)
    y_prime = lam + 7 / rho
    a_prime = 7 - 49 / (rho * lam + 7)
    return {
        "rho": rho,
        "K": k_const,
        "M": m_const,
        "lambda": lam,
        "y_prime_1_7": y_prime,
        "A_prime_1_rho": a_prime,
    }


def constants(digits: int = 60, _corrupt: str | None = None) -> list[ConstantRecord]:
    """Certified values of rho, K, M, lambda, y'(1/7), A'(1/rho).

    Every constant is computed from its closed form and from an independent
    route (hypergeometric evaluation, the logarithmic singular expansion, or
    the bootstrap); the two balls must overlap and match the printed
    reference digits, else CertificationError.
    """
    from . import singular  # deferred: singular is a heavier import

    if digits < 30:
        raise ValueError("digits must be >= 30")
    prec = bits_for_digits(digits)
    cf = closed_form_values(digits)
    if _corrupt is not None:
        if _corrupt not in cf:
            raise ValueError(f"unknown constant {_corrupt!r}")
        cf[_corrupt] = cf[_corrupt] + Fraction(1, 10**10)

    # independent routes
    rho2 = 7 / eval_B(Fraction(1, 7), digits)
    exp_fg = singular.expand_fg(2, digits)
    f0, f1 = exp_fg.f_coeffs[0], exp_fg.f_coeffs[1]
    lam2 = -f1
    y_prime2 = f0 - f1
    kappa7 = -720 * singular.g_rational(7)[6]
    k2 = PrecReal.from_fraction(kappa7, prec) * sqrt3_ball(prec) / pi_ball(prec)
    psi_exp = singular.bootstrap_psi(digits)
    m2 = 49 * 720 * psi_exp.C / rho2
    a_prime2 = 7 - 49 / (rho2 * lam2 + 7)

    alternates = {
        "rho": rho2,
        "K": k2,
        "M": m2,
        "lambda": lam2,
        "y_prime_1_7": y_prime2,
        "A_prime_1_rho": a_prime2,
    }
    records = []
    for name, value in cf.items():
        alt = alternates[name]
        if not value.agrees_with(alt):
            raise CertificationError(
                f"{name}: closed form {value!r} and independent route {alt!r} disagree"
            )
        if not value.matches_printed(_PAPER_APPROX[name]):
            raise CertificationError(
                f"{name}: value {value!r} does not match printed {_PAPER_APPROX[name]}"
            )
        records.append(
            ConstantRecord(name, value, _CLOSED_FORMS[name], _PAPER_APPROX[name], alt)
        )
    return records


def constants_json(records: list[ConstantRecord], digits: int = 60) -> str:
    doc = {
        "schema_version": "1",
        "constants": [
            {
                "name": r.name,
                "decimal_midpoint": r.value.to_decimal(digits),
                "decimal_radius": r.value.rad_decimal(),
                "closed_form": r.closed_form,
                "paper_approx": r.paper_approx,
            }
            for r in records
        ],
    }
    return json.dumps(doc, indent=2)
