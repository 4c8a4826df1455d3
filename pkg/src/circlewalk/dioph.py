"""Continued fractions, fixed-point irrationals, and Diophantine sums.

Irrational rotation numbers are held as fixed-point integers with 96
fractional bits so that distances to the nearest integer carry a proven
error certificate: ``||h*alpha||`` computed here is exact to within
``|h| * 2^-precision_bits``, and operations raise PrecisionExhausted
rather than return an uncertifiable value.

Integer arithmetic for convergents is capped at 128 bits; exceeding the
cap raises Overflow instead of silently continuing with Python's
unbounded integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import Overflow, PrecisionExhausted

#: fractional bits of the fixed-point representation built from convergents
FRAC_BITS = 96
#: convergents are accumulated until 1/(q_m q_{m+1}) < 2^-CONVERGENT_GAP_BITS
CONVERGENT_GAP_BITS = 100
#: certified precision: convergent tail (2^-100) plus rounding (2^-96)
DEFAULT_PRECISION_BITS = 95
#: hard cap for convergent integer arithmetic
INT_WIDTH_BITS = 128
#: norms are only certified when the fixed-point error stays below this
NORM_CERT_TOL = 1e-9


@dataclass(frozen=True, order=True)
class Rational:
    """Reduced fraction p/q with q >= 1."""

    p: int
    q: int

    def __post_init__(self):
        if self.q == 0:
            raise ValueError("zero denominator")
        g = math.gcd(self.p, self.q)
        sign = -1 if self.q < 0 else 1
        object.__setattr__(self, "p", sign * self.p // g)
        object.__setattr__(self, "q", sign * self.q // g)

    @classmethod
    def from_string(cls, text: str) -> "Rational":
        parts = text.strip().split("/")
        if len(parts) != 2:
            raise ValueError(f"expected 'p/q', got {text!r}")
        try:
            return cls(int(parts[0]), int(parts[1]))
        except ValueError as exc:
            raise ValueError(f"expected 'p/q', got {text!r}") from exc

    @property
    def value(self) -> float:
        return self.p / self.q

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


@dataclass(frozen=True)
class ContinuedFraction:
    """Quotients [a0; a1, ..., aM] with matching convergents p_m/q_m."""

    quotients: Tuple[int, ...]
    convergents: Tuple[Rational, ...]


def _check_width(n: int) -> int:
    if abs(n) >= 1 << (INT_WIDTH_BITS - 1):
        raise Overflow(f"convergent arithmetic exceeded {INT_WIDTH_BITS}-bit range")
    return n


def _convergents_from_quotients(quotients: Sequence[int]) -> Tuple[Rational, ...]:
    p_prev, p_prev2 = 1, 0
    q_prev, q_prev2 = 0, 1
    out: List[Rational] = []
    for a in quotients:
        p = _check_width(a * p_prev + p_prev2)
        q = _check_width(a * q_prev + q_prev2)
        out.append(Rational(p, q))
        p_prev2, p_prev = p_prev, p
        q_prev2, q_prev = q_prev, q
    return tuple(out)


def cf_expand(r: Rational) -> ContinuedFraction:
    """Euclidean continued-fraction expansion in canonical form.

    The Euclidean algorithm naturally yields a final quotient >= 2
    whenever there is more than one quotient, which fixes the canonical
    representative of the two possible expansions.
    """
    quotients: List[int] = []
    num, den = r.p, r.q
    while den:
        a, rem = divmod(num, den)
        quotients.append(a)
        num, den = den, rem
    return ContinuedFraction(
        quotients=tuple(quotients),
        convergents=_convergents_from_quotients(quotients),
    )


def golden_ratio_convergents(m_max: int) -> ContinuedFraction:
    """Convergents of (1+sqrt(5))/2 = [1; 1, 1, ...] up to index m_max.

    These are ratios of consecutive Fibonacci numbers, computed exactly.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    quotients = (1,) * (m_max + 1)
    return ContinuedFraction(
        quotients=quotients,
        convergents=_convergents_from_quotients(quotients),
    )


def max_partial_quotient(cf: ContinuedFraction) -> int:
    """Largest quotient a_i with i >= 1 (a_0 if the expansion is a single term)."""
    if len(cf.quotients) == 1:
        return cf.quotients[0]
    return max(cf.quotients[1:])


@dataclass(frozen=True)
class IrrationalNumber:
    """Fixed-point rotation number with a precision certificate.

    ``scaled`` is round(alpha * 2^frac_bits) as an exact integer; every
    arithmetic consumer must tolerate (and certify against) an absolute
    error of 2^-precision_bits on alpha itself.
    """

    kind: str
    scaled: int
    frac_bits: int
    precision_bits: int
    quotients: Tuple[int, ...] = ()
    convergents: Tuple[Rational, ...] = ()

    @property
    def value_float(self) -> float:
        return self.scaled / float(1 << self.frac_bits)

    def frac_scaled(self, h: int) -> int:
        """(h * alpha) mod 1 in fixed point: an integer in [0, 2^frac_bits)."""
        return (h * self.scaled) % (1 << self.frac_bits)


def _alpha_from_quotient_stream(kind: str, quotients: Iterable[int]) -> IrrationalNumber:
    """Build the fixed-point value from convergents of a quotient stream.

    Convergents are accumulated until 1/(q_m q_{m+1}) < 2^-100, at which
    point p_m/q_m determines alpha to well below the rounding grain of
    the 96-bit representation.
    """
    gap_limit = 1 << CONVERGENT_GAP_BITS
    quots: List[int] = []
    convs: List[Rational] = []
    p_prev, p_prev2 = 1, 0
    q_prev, q_prev2 = 0, 1
    for i, a in enumerate(quotients):
        if i > 0 and a < 1:
            raise ValueError("partial quotients a_i must be >= 1 for i >= 1")
        p = a * p_prev + p_prev2
        q = a * q_prev + q_prev2
        quots.append(a)
        convs.append(Rational(p, q))
        if q_prev * q >= gap_limit:
            break
        p_prev2, p_prev = p_prev, p
        q_prev2, q_prev = q_prev, q
    else:
        raise ValueError("quotient stream exhausted before reaching target precision")
    last = convs[-1]
    scaled = (last.p << FRAC_BITS) // last.q
    return IrrationalNumber(
        kind=kind,
        scaled=scaled,
        frac_bits=FRAC_BITS,
        precision_bits=DEFAULT_PRECISION_BITS,
        quotients=tuple(quots),
        convergents=tuple(convs),
    )


def _periodic_stream(preperiod: Sequence[int], period: Sequence[int]):
    yield from preperiod
    while True:
        yield from period


def golden_alpha() -> IrrationalNumber:
    """(1+sqrt(5))/2 as a certified fixed-point number."""
    return _alpha_from_quotient_stream("golden", _periodic_stream([1], [1]))


def quadratic_alpha(preperiod: Sequence[int], period: Sequence[int]) -> IrrationalNumber:
    """Quadratic irrational from its (eventually) periodic continued fraction."""
    if not period:
        raise ValueError("period must be nonempty")
    return _alpha_from_quotient_stream(
        "quadratic", _periodic_stream(list(preperiod), list(period))
    )


def fixed_alpha(bits_hex: str) -> IrrationalNumber:
    """Literal fixed-point fractional value from a hex string.

    The string encodes the fractional bits; 4 bits per hex digit, at
    least 96 bits required.  The literal is taken as exact.
    """
    text = bits_hex.strip().lower().removeprefix("0x")
    bits = 4 * len(text)
    if bits < 96:
        raise ValueError(f"fixed-point literal has {bits} bits; need >= 96")
    scaled = int(text, 16)
    if scaled >= 1 << bits:
        raise ValueError("literal does not fit its declared width")
    return IrrationalNumber(
        kind="fixed", scaled=scaled, frac_bits=bits, precision_bits=bits
    )


def parse_alpha(config: dict) -> IrrationalNumber:
    """Resolve the config form of a rotation number.

    Accepted: {"kind": "golden"} | {"kind": "quadratic", "period": [...],
    "preperiod": [...]} | {"kind": "fixed", "bits": "<hex>"}.
    """
    kind = config.get("kind")
    if kind == "golden":
        return golden_alpha()
    if kind == "quadratic":
        return quadratic_alpha(config.get("preperiod", []), config.get("period", []))
    if kind == "fixed":
        return fixed_alpha(config["bits"])
    raise ValueError(f"unknown irrational kind {kind!r}")


def dist_nearest_int(x: float) -> float:
    """Distance from x to the nearest integer, in [0, 1/2]."""
    y = float(x) % 1.0
    return min(y, 1.0 - y)


def norm_h_alpha(alpha: IrrationalNumber, h: int) -> float:
    """||h * alpha|| with a certified error below |h| * 2^-precision_bits.

    Raises PrecisionExhausted when the certificate cannot be met, or when
    the computed distance is itself within the error bound of zero (the
    sign of the result would then be unknowable).
    """
    h = int(h)
    if h == 0:
        raise ValueError("h must be nonzero")
    err = abs(h) * 2.0 ** (-alpha.precision_bits)
    if err >= NORM_CERT_TOL:
        raise PrecisionExhausted(
            f"|h|={abs(h)} exceeds the {alpha.precision_bits}-bit certificate"
        )
    one = 1 << alpha.frac_bits
    t = (h * alpha.scaled) % one
    dist = min(t, one - t)
    # scaled error bound: |h| * 2^(frac_bits - precision_bits)
    if dist <= abs(h) << max(alpha.frac_bits - alpha.precision_bits, 0):
        raise PrecisionExhausted(
            f"||h*alpha|| for h={h} is indistinguishable from 0 at this precision"
        )
    return dist / float(one)


def bad_approx_constant_rational(r: Rational) -> float:
    """min over 0 < h <= q/2 of h * ||h p/q||, exact integer enumeration."""
    if r.q < 2:
        raise ValueError("requires q >= 2")
    best = None
    residue = 0
    p_mod = r.p % r.q
    for h in range(1, r.q // 2 + 1):
        residue = (residue + p_mod) % r.q
        prod = h * min(residue, r.q - residue)
        if best is None or prod < best:
            best = prod
    return best / r.q


def dioph_sum(alpha: IrrationalNumber, H: int, power: int) -> float:
    """sum_{h=1}^{H} 1/(h ||h alpha||)^power for power in {1, 2}."""
    if H < 2:
        raise ValueError("H must be >= 2")
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    terms = []
    for h in range(1, H + 1):
        d = norm_h_alpha(alpha, h)
        terms.append(1.0 / (h * d) ** power)
    return math.fsum(terms)


def frac_table(alpha: IrrationalNumber, n_max: int) -> np.ndarray:
    """Array of {n * alpha} for n = 0..n_max as float64.

    Built by exact fixed-point accumulation (O(n_max) big-int additions),
    so entry n carries only the conversion rounding of one division, not
    n accumulated float errors.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    one = 1 << alpha.frac_bits
    mask = one - 1
    step = alpha.scaled % one
    scale = 1.0 / float(one)
    out = np.empty(n_max + 1, dtype=np.float64)
    acc = 0
    for n in range(n_max + 1):
        out[n] = acc * scale
        acc = (acc + step) & mask
    return out
