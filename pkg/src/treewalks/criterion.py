"""Generic sharpness analyzer for simply generated tree families.

Given a generator A(x) = 1 + sum a_n x^n with nonnegative coefficients, the
tree series y = x B(x) solves y = x A(y).  Writing R and r for the radii of
convergence of A and y, always y(r) <= R.  The analyzer classifies:

* strict branch: A(z) - z A'(z) has a root tau in (0, R); then r = tau/A(tau),
  y(r) = tau < R, and y_n ~ C r^-n n^(-3/2) with C = sqrt(A(tau)/(2 pi A''(tau))).
* sharp branch: A(z) - z A'(z) stays positive on (0, R); then y(r) = R and
  r = R / A(R).

The exponent fitter ``empirical_exponent`` is deliberately quarantined from
classification: a 3/2 exponent does not imply the strict branch (the
boundary fixture below is the counterexample), so it is reported as a
diagnostic only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .precision import PrecReal, PrecisionError, bits_for_digits, pi_ball
from .series import ExactSeries, conv_trunc, inv_trunc, lagrange_invert, read_series
from . import walks

__all__ = [
    "TailBound",
    "GeneratorSpec",
    "CriterionReport",
    "InvariantViolation",
    "gcd_period",
    "find_tau",
    "analyze",
    "empirical_exponent",
    "builtin_generator",
    "load_generator_spec",
    "report_json",
    "catalan_counts",
    "example2_counts_scaled",
    "example2_coefficients",
]


class InvariantViolation(ArithmeticError):
    """The generator violated a structural precondition (sign anomaly etc.)."""


@dataclass(frozen=True)
class TailBound:
    """Certificate |c_n| <= c * q^n / n^e for n >= n0 (q, e rational)."""

    c: Fraction
    q: Fraction
    e: Fraction
    n0: int

    def tail_sum(self, zmag: Fraction, start: int, shift: int = 0) -> Fraction:
        """Upper bound for sum_{n > start} n^shift * c_n * zmag^n.

        shift=1 serves first derivatives (n a_n), shift=2 second ones.
        """
        if start < self.n0:
            raise ValueError("tail start below the certificate's n0")
        e_eff = self.e - shift
        t = self.q * zmag
        n1 = start + 1
        if t <= 0:
            return Fraction(0)
        # consecutive-term ratio for n^shift t^n n^-e is at most t (1 + 1/n)^shift
        ratio = t * (1 + Fraction(1, n1)) ** shift
        if ratio < Fraction(99, 100):
            first = self.c * t**n1 * n1**shift
            return first / (1 - ratio)
        if t <= 1 + Fraction(1, 2**64):
            # boundary evaluation; sum_{n>N} n^-e_eff <= N^(1-e_eff)/(e_eff-1)
            if e_eff <= 1:
                raise PrecisionError("tail exponent too small for boundary evaluation")
            bound = Fraction(2) * self.c / (e_eff - 1)
            # N^(1-e_eff) with fractional exponent: use a rational overestimate
            p = e_eff - 1
            val = Fraction(1, n1 ** math.floor(p))
            return bound * val
        raise PrecisionError("evaluation point outside the certified growth radius")


def _dyadic(mpf_tuple) -> Fraction:
    """Exact rational value of a raw mpf (sign, man, exp, bc) tuple."""
    sign, man, exp, _ = mpf_tuple
    if man == 0:
        return Fraction(0)
    v = Fraction(int(man)) * Fraction(2) ** exp
    return -v if sign else v


def _poly_derive(coeffs: Sequence[Fraction]) -> list[Fraction]:
    return [Fraction(i) * c for i, c in enumerate(coeffs)][1:] or [Fraction(0)]


def _poly_value(coeffs: Sequence[Fraction], z: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


@dataclass
class GeneratorSpec:
    """Exact description of a generator, able to produce coefficients to any
    order and values with two derivatives at rational points."""

    kind: str  # 'coefficient-list' | 'rational-function' | 'closed-form'
    coeffs: Optional[tuple[Fraction, ...]] = None
    numerator: Optional[tuple[Fraction, ...]] = None
    denominator: Optional[tuple[Fraction, ...]] = None
    name: Optional[str] = None
    radius: Optional[Fraction] = None          # None: infinite or irrational
    radius_digits: Optional[object] = None     # callable digits -> PrecReal
    tail: Optional[TailBound] = None           # on the a_n
    y_tail: Optional[TailBound] = None         # on the tree counts y_n
    label: str = "generator"

    def __post_init__(self):
        head = self.coefficients(1)
        if head[0] != 1:
            raise InvariantViolation("constant coefficient must be 1")

    # -- coefficients -----------------------------------------------------

    def coefficients(self, n: int) -> list[Fraction]:
        """a_0 .. a_n as exact rationals."""
        if self.kind == "coefficient-list":
            if n >= len(self.coeffs):
                raise ValueError(
                    f"{self.label}: only {len(self.coeffs)} coefficients available"
                )
            return list(self.coeffs[: n + 1])
        if self.kind == "rational-function":
            num = list(self.numerator) + [Fraction(0)] * (n + 1)
            den = list(self.denominator) + [Fraction(0)] * (n + 1)
            inv = inv_trunc(den[: n + 1], n + 1, Fraction(1))
            return conv_trunc(num[: n + 1], inv, n + 1, Fraction(0))
        if self.name == "example2":
            return [Fraction(c) for c in example2_coefficients(n)]
        raise ValueError(f"unknown generator kind {self.kind}")

    def nonnegative_on(self, n: int) -> bool:
        return all(c >= 0 for c in self.coefficients(n)[1:])

    # -- radius ------------------------------------------------------------

    def radius_ball(self, digits: int) -> Optional[PrecReal]:
        if self.radius is not None:
            return PrecReal.from_fraction(self.radius, bits_for_digits(digits))
        if self.radius_digits is not None:
            return self.radius_digits(digits)
        return None

    def radius_rational_lower(self, digits: int) -> Optional[Fraction]:
        ball = self.radius_ball(digits)
        if ball is None:
            return None
        if self.radius is not None:
            return self.radius
        lo = _dyadic(ball.lower())
        if lo <= 0:
            raise InvariantViolation("radius lower bound must be positive")
        return lo

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, z: Fraction, digits: int):
        """(A(z), A'(z), A''(z), A'''(z)) as certified balls at rational z >= 0."""
        z = Fraction(z)
        prec = bits_for_digits(digits)
        if self.kind == "rational-function":
            nd = [self.numerator, self.denominator]
            vals = []
            for coeffs in nd:
                cs = list(coeffs)
                row = []
                for _ in range(4):
                    row.append(_poly_value(cs, z))
                    cs = _poly_derive(cs)
                vals.append(row)
            (n0, n1, n2, n3), (d0, d1, d2, d3) = vals
            if d0 == 0:
                raise ZeroDivisionError("denominator vanishes")
            a0 = n0 / d0
            a1 = (n1 - a0 * d1) / d0
            a2 = (n2 - 2 * a1 * d1 - a0 * d2) / d0
            a3 = (n3 - 3 * a2 * d1 - 3 * a1 * d2 - a0 * d3) / d0
            return tuple(PrecReal.from_fraction(v, prec) for v in (a0, a1, a2, a3))
        if self.kind == "closed-form" and self.name == "example2":
            return _example2_eval(z, digits)
        if self.kind == "coefficient-list":
            order = len(self.coeffs) - 1
            zmag = abs(z)
            out = []
            for shift in range(4):
                acc = Fraction(0)
                for n in range(shift, order + 1):
                    w = 1
                    for t in range(shift):
                        w *= n - t
                    acc += w * self.coeffs[n] * z ** (n - shift)
                val = PrecReal.from_fraction(acc, prec)
                if self.tail is not None:
                    bound = self.tail.tail_sum(zmag, order, shift=shift)
                    if zmag > 0:
                        bound = bound / zmag**shift
                    val = val.widened(bound)
                elif zmag > 0:
                    # uncertified: widen by the last few computed terms
                    heur = 8 * abs(self.coeffs[order]) * zmag ** (order - shift) * order**shift
                    val = val.widened(heur)
                out.append(val)
            return tuple(out)
        raise ValueError(f"cannot evaluate generator kind {self.kind}")

    def tree_series(self, order: int) -> ExactSeries:
        """y = lagrange_invert(A) to the given order."""
        a = ExactSeries(tuple(self.coefficients(order)))
        return lagrange_invert(a, order)


# --- fixtures ----------------------------------------------------------------


def _binom_fraction(a: Fraction, n: int) -> Fraction:
    r = Fraction(1)
    for i in range(n):
        r *= a - i
    return r / math.factorial(n)


@lru_cache(maxsize=4)
def example2_coefficients(n: int) -> tuple[int, ...]:
    """Integer Taylor coefficients of 6x + 2(1-4x)^2 - (1-4x)^(5/2)."""
    out = []
    for k in range(n + 1):
        c = Fraction(0)
        if k == 0:
            c += 2
        if k == 1:
            c += 6 - 16
        if k == 2:
            c += 32
        c -= _binom_fraction(Fraction(5, 2), k) * (-4) ** k
        if c.denominator != 1:
            raise AssertionError("boundary fixture must have integer coefficients")
        out.append(int(c))
    return tuple(out)


def _example2_eval(z: Fraction, digits: int):
    prec = bits_for_digits(digits)
    if z > Fraction(1, 4):
        raise ValueError("outside the real domain of the boundary fixture")
    u = PrecReal.from_fraction(1 - 4 * z, prec)
    sq = u.sqrt()
    a0 = 6 * PrecReal.from_fraction(z, prec) + 2 * u * u - u * u * sq
    a1 = 6 - 16 * u + 10 * u * sq
    a2 = PrecReal.from_int(64, prec) - 60 * sq
    if z == Fraction(1, 4):
        a3 = None  # A''' diverges at the endpoint
    else:
        a3 = 120 / sq
    return a0, a1, a2, a3


def _g2_radius(digits: int) -> PrecReal:
    from .hyper import closed_form_values

    return 1 / closed_form_values(digits)["rho"]


@lru_cache(maxsize=4)
def _g2_coefficients(order: int) -> tuple[Fraction, ...]:
    from .series import recover_generator

    bs = walks.bn_exact_range(order + 1)
    b_series = ExactSeries.from_coeffs(bs)
    return recover_generator(b_series, order).coeffs


def builtin_generator(name: str, order: int = 300) -> GeneratorSpec:
    """The three reference generators used throughout the test suite."""
    if name == "catalan":
        return GeneratorSpec(
            kind="rational-function",
            numerator=(Fraction(1),),
            denominator=(Fraction(1), Fraction(-1)),
            radius=Fraction(1),
            y_tail=TailBound(c=Fraction(1), q=Fraction(4), e=Fraction(3, 2), n0=1),
            label="catalan",
        )
    if name == "example2":
        return GeneratorSpec(
            kind="closed-form",
            name="example2",
            radius=Fraction(1, 4),
            y_tail=TailBound(c=Fraction(1, 8), q=Fraction(6), e=Fraction(3, 2), n0=5),
            label="example2",
        )
    if name == "g2":
        # a_n <= 2 M rho^n / n^7 for n >= 10 (checked on the computed range);
        # q is a 40-digit rational upper bound for rho
        rho_hi = Fraction(
            68211111726821100122853356608751756344528,
            10**40,
        )
        m_hi = Fraction(1721)
        return GeneratorSpec(
            kind="coefficient-list",
            coeffs=_g2_coefficients(order),
            radius_digits=_g2_radius,
            tail=TailBound(c=2 * m_hi, q=rho_hi, e=Fraction(7), n0=10),
            y_tail=TailBound(c=Fraction(5256), q=Fraction(7), e=Fraction(7), n0=10),
            label="g2",
        )
    raise ValueError(f"unknown builtin generator {name!r}")


def catalan_counts(n_max: int) -> list[int]:
    """Tree counts for the all-colors-one generator: y_n = Catalan(n-1)."""
    return [0] + [math.comb(2 * (n - 1), n - 1) // n for n in range(1, n_max + 1)]


def example2_counts_scaled(n_max: int) -> np.ndarray:
    """y_n / 6^n for the boundary fixture, by a stable joint recurrence.

    Runs on u = y(t/6) with the auxiliary square root v = (1 - 4u)^(1/2):
    u_n = (6 u_{n-1} + 2 [v^4]_{n-1} - [v^5]_{n-1})/6, then v_n from
    v^2 = 1 - 4u.  All series involved have radius 1 and bounded
    coefficients, so the recurrence is numerically tame (checked against
    exact values in the tests); Newton iteration with series division is
    not, because the derivative series vanishes exactly on the circle.
    """
    n = n_max + 1
    u = np.zeros(n)
    v = np.zeros(n)
    v2 = np.zeros(n)
    v4 = np.zeros(n)
    v5 = np.zeros(n)
    v[0] = v2[0] = v4[0] = v5[0] = 1.0
    for k in range(1, n):
        u[k] = (6.0 * u[k - 1] + 2.0 * v4[k - 1] - v5[k - 1]) / 6.0
        s = np.dot(v[1:k], v[k - 1 : 0 : -1]) if k > 1 else 0.0
        v[k] = (-4.0 * u[k] - s) / 2.0
        v2[k] = np.dot(v[0 : k + 1], v[k::-1])
        v4[k] = np.dot(v2[0 : k + 1], v2[k::-1])
        v5[k] = np.dot(v4[0 : k + 1], v[k::-1])
    return u


# --- analysis ----------------------------------------------------------------


@dataclass
class CriterionReport:
    branch: str                       # 'strict' | 'sharp'
    tau: Optional[PrecReal]
    r: PrecReal
    C: Optional[PrecReal]
    R: Optional[PrecReal]             # None encodes an infinite radius
    gcd_period: int
    boundary_root: bool = False
    alpha_fit: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)


def gcd_period(spec: GeneratorSpec, probe: int = 64) -> int:
    """gcd of the support indices among the first `probe` coefficients."""
    if probe < 10:
        raise ValueError("probe must be >= 10")
    coeffs = spec.coefficients(probe)
    g = 0
    for i, c in enumerate(coeffs[1:], start=1):
        if c > 0:
            g = math.gcd(g, i)
    if g == 0:
        raise InvariantViolation("all probed coefficients vanish")
    return g


def _h_ball(spec: GeneratorSpec, z: Fraction, digits: int) -> PrecReal:
    a0, a1, _, _ = spec.evaluate(z, digits)
    return a0 - a1 * z


def find_tau(
    spec: GeneratorSpec,
    radius: Optional[Fraction] = None,
    tol: Fraction = Fraction(1, 10**40),
    digits: int = 60,
) -> Optional[PrecReal]:
    """Root of h(z) = A(z) - z A'(z) on (0, R), or None when h stays positive.

    h is decreasing for nonnegative generators, so plain bisection applies.
    Probes stay strictly inside the disk: the high probe is R (1 - 2^-24).
    """
    r_frac = radius if radius is not None else spec.radius_rational_lower(digits)
    if r_frac is None:
        # infinite radius: grow the probe until h goes negative
        hi = Fraction(1)
        for _ in range(200):
            if _h_ball(spec, hi, digits).is_negative():
                break
            hi *= 2
        else:
            return None
    else:
        hi = r_frac * (1 - Fraction(1, 2**24))
        h_hi = _h_ball(spec, hi, digits)
        if h_hi.is_positive():
            return None
        if not h_hi.is_negative():
            raise PrecisionError("sign of h at the boundary probe is ambiguous")
    lo = hi / 2**20
    h_lo = _h_ball(spec, lo, digits)
    if not h_lo.is_positive():
        raise InvariantViolation("h must be positive near the origin")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        h_mid = _h_ball(spec, mid, digits)
        if h_mid.is_positive():
            lo = mid
        elif h_mid.is_negative():
            hi = mid
        else:
            break  # ball straddles zero: mid is within ball radius of tau
    mid = (lo + hi) / 2
    prec = bits_for_digits(digits)
    return PrecReal.from_fraction(mid, prec).widened((hi - lo) / 2 + tol / 10**6)


def analyze(spec: GeneratorSpec, digits: int = 60, y_order: Optional[int] = None) -> CriterionReport:
    """Classify the generator per the sharpness dichotomy and report the
    associated constants."""
    if not spec.nonnegative_on(min(64, _max_coeff_order(spec))):
        raise InvariantViolation("negative generator coefficient")
    period = gcd_period(spec)
    tol = Fraction(1, 10**40)
    r_frac = spec.radius_rational_lower(digits)
    tau = find_tau(spec, tol=tol, digits=digits)
    prec = bits_for_digits(digits)

    if tau is not None:
        # strict branch: widen values at the rational midpoint by slope * tol
        tau_q = _dyadic(tau.mid)
        a0, a1, a2, a3 = spec.evaluate(tau_q, digits)
        tau_err = Fraction(tau.rad_float()) * 2 + tol
        a0 = a0.widened(Fraction(abs(a1.mid_float())) * tau_err * 2)
        a1 = a1.widened(Fraction(abs(a2.mid_float())) * tau_err * 2)
        if a3 is not None:
            a2 = a2.widened(Fraction(abs(a3.mid_float())) * tau_err * 2)
        r = tau / a0
        c_val = (a0 / (2 * pi_ball(prec) * a2)).sqrt()
        report = CriterionReport(
            branch="strict", tau=tau, r=r, C=c_val,
            R=spec.radius_ball(digits), gcd_period=period,
        )
    else:
        r_ball = spec.radius_ball(digits)
        if r_ball is None:
            raise InvariantViolation("sharp branch requires a declared finite radius")
        a0, a1, _, _ = spec.evaluate(r_frac, digits)
        r = r_ball / a0
        # y(r) from series partial sums, hulled over the r ball (y has
        # nonnegative coefficients, so endpoint evaluation brackets it)
        order = y_order if y_order is not None else _max_coeff_order(spec)
        y = spec.tree_series(order)
        r_lo = _dyadic(r.lower())
        r_hi = _dyadic(r.upper())
        s_lo = y.eval_fraction(r_lo)
        s_hi = y.eval_fraction(r_hi)
        y_val = PrecReal.from_fraction(s_hi, prec).widened(s_hi - s_lo)
        if spec.y_tail is not None:
            y_val = y_val.widened(spec.y_tail.tail_sum(r_hi, order))
            certified = True
        else:
            last = abs(y.coeffs[order]) * r_hi**order
            y_val = y_val.widened(8 * order * last)
            certified = False
        h_near = _h_ball(spec, r_frac * (1 - Fraction(1, 2**24)), digits)
        h_mid = _h_ball(spec, r_frac / 2, digits)
        boundary = abs(h_near.mid_float()) < 1e-3 * abs(h_mid.mid_float())
        report = CriterionReport(
            branch="sharp", tau=None, r=r, C=None, R=y_val,
            gcd_period=period, boundary_root=boundary,
            diagnostics={} if certified else {"y_tail": "heuristic"},
        )

    # diagnostic exponent fit, never used for classification
    try:
        order = min(_max_coeff_order(spec), 400)
        if order >= 120:
            y = spec.tree_series(order)
            r_inv = 1 / report.r.mid_float()
            report.alpha_fit = empirical_exponent(
                [c for c in y.coeffs[1:]], r_inv
            )
    except (ValueError, OverflowError):
        report.alpha_fit = None
    return report


def _max_coeff_order(spec: GeneratorSpec) -> int:
    if spec.kind == "coefficient-list":
        return len(spec.coeffs) - 1
    return 400


def empirical_exponent(y_coeffs: Sequence, r_inv) -> float:
    """Least-squares slope alpha of log(y_n r^n) against -log n over the
    tail half of the data.  Purely diagnostic."""
    n_total = len(y_coeffs)
    if n_total < 50:
        raise ValueError("need at least 50 coefficients")
    ln_rinv = _ln(r_inv)
    start = n_total // 2
    ns, logs = [], []
    for n in range(start, n_total + 1):
        v = y_coeffs[n - 1]  # entry i holds y_{i+1}
        if v <= 0:
            raise ValueError("nonpositive coefficient in the fitted tail")
        ns.append(n)
        logs.append(_ln(v) - n * ln_rinv)
    a = np.vstack([np.ones(len(ns)), -np.log(np.array(ns, dtype=float))]).T
    coef, *_ = np.linalg.lstsq(a, np.array(logs), rcond=None)
    return float(coef[1])


def _ln(v) -> float:
    if isinstance(v, float):
        return math.log(v)
    if isinstance(v, int):
        return _ln_int(v)
    if isinstance(v, Fraction):
        return _ln_int(v.numerator) - _ln_int(v.denominator)
    raise TypeError(f"cannot take log of {type(v).__name__}")


def _ln_int(n: int) -> float:
    if n <= 0:
        raise ValueError("log of nonpositive integer")
    shift = max(0, n.bit_length() - 53)
    return math.log(n >> shift) + shift * math.log(2)


# --- spec files and report serialization -------------------------------------


def load_generator_spec(path: str | Path) -> GeneratorSpec:
    """Parse the small text format (kind: header plus payload lines)."""
    path = Path(path)
    fields: dict[str, str] = {}
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ValueError(f"malformed line in {path}: {raw!r}")
        key, _, value = line.partition(":")
        fields[key.strip()] = value.strip()
    kind = fields.get("kind")
    if kind is None:
        raise ValueError("missing kind header")
    radius = None
    if "radius" in fields and fields["radius"] != "infinite":
        radius = Fraction(fields["radius"])
    tail = None
    if "tail" in fields:
        parts = dict(p.split("=") for p in fields["tail"].split())
        tail = TailBound(
            c=Fraction(parts["c"]), q=Fraction(parts["q"]),
            e=Fraction(parts["e"]), n0=int(parts["n0"]),
        )
    if kind == "coefficient-list":
        if "coeffs" in fields:
            coeffs = tuple(Fraction(v) for v in fields["coeffs"].split())
        elif "coeffs-file" in fields:
            with open(path.parent / fields["coeffs-file"]) as fh:
                coeffs = read_series(fh).coeffs
        else:
            raise ValueError("coefficient-list needs coeffs or coeffs-file")
        return GeneratorSpec(kind=kind, coeffs=coeffs, radius=radius, tail=tail,
                             label=path.stem)
    if kind == "rational-function":
        num = tuple(Fraction(v) for v in fields["numerator"].split())
        den = tuple(Fraction(v) for v in fields["denominator"].split())
        return GeneratorSpec(kind=kind, numerator=num, denominator=den,
                             radius=radius, label=path.stem)
    if kind == "closed-form":
        return builtin_generator(fields["name"])
    raise ValueError(f"unknown kind {kind!r}")


def report_json(report: CriterionReport, digits: int = 60) -> str:
    def dec(x: Optional[PrecReal]):
        return None if x is None else x.to_decimal(min(digits, 30))

    doc = {
        "schema_version": "1",
        "branch": report.branch,
        "tau": dec(report.tau),
        "r": dec(report.r),
        "C": dec(report.C),
        "R": dec(report.R) if report.R is not None else "infinite",
        "gcd_period": report.gcd_period,
        "boundary_root": report.boundary_root,
        "diagnostics": {"alpha_fit": report.alpha_fit, **report.diagnostics},
    }
    return json.dumps(doc, indent=2)
