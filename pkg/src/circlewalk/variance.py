"""Bounded-variation test functions and limiting variance constants.

Houses the closed-form Fourier catalogue (sawtooth, single frequencies,
interval indicators, trigonometric polynomials), the limiting variance
constant of normalized walk sums for rational and irrational rotation
numbers, finite-horizon stationary variances, exact second moments of
weighted exponential sums along the walk, and the Fejer-kernel /
shift-transfer utilities used by the discrepancy arguments.

All spectral sums run in ascending frequency order so results are
reproducible bit-for-bit regardless of any outer parallelism.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .cyclic import SpectralState, one_step_spectrum, to_distribution
from .dioph import IrrationalNumber, Rational, frac_table, norm_h_alpha
from .errors import (
    CoefficientBound,
    PrecisionExhausted,
    SpanNotCoprime,
    ZeroSeparation,
)
from .steps import StepDistribution, char_fn

#: default frequency cutoff for truncated spectral sums
DEFAULT_TRUNCATION = 1 << 12
#: |1 - phi| below which the spectral factor is numerically meaningless
FACTOR_MIN_GAP = 1e-13
#: hard cap on per-coefficient frequencies in exact second-moment mode
EXACT_MODE_MAX_FREQ = 511
#: reporting constant standing in for the universal one in the kernel bounds
FEJER_KAPPA = 10.0
#: quadrature resolution and safety inflation for trig-poly total variation
_TV_QUAD_POINTS = 1 << 15
_TV_INFLATION = 1.0005


@dataclass(frozen=True)
class TestFunction:
    """1-periodic test function with closed-form Fourier data.

    ``max_frequency`` is the largest nonzero frequency (0 for constants)
    or None when the spectrum is unbounded; tail bounds use it to decide
    when a truncation is exact.
    """

    __test__ = False  # not a pytest class, despite the name

    kind: str
    total_variation: float
    mean: float
    l2sq_centered: float
    max_frequency: Optional[int]
    j: int = 0
    a: float = 0.0
    b: float = 0.0
    a0: float = 0.0
    coeffs: Tuple[Tuple[float, float], ...] = ()

    def evaluate(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        xs = np.asarray(x, dtype=np.float64)
        if self.kind == "sawtooth":
            out = np.mod(xs, 1.0) - 0.5
        elif self.kind == "cosine":
            out = np.cos(2.0 * np.pi * self.j * xs)
        elif self.kind == "sine":
            out = np.sin(2.0 * np.pi * self.j * xs)
        elif self.kind == "indicator":
            frac = np.mod(xs, 1.0)
            out = ((frac >= self.a) & (frac < self.b)).astype(np.float64)
        elif self.kind == "trigpoly":
            out = np.full_like(xs, self.a0, dtype=np.float64)
            for freq, (aj, bj) in enumerate(self.coeffs, start=1):
                out = out + aj * np.cos(2.0 * np.pi * freq * xs)
                out = out + bj * np.sin(2.0 * np.pi * freq * xs)
        else:  # pragma: no cover - factories gate the kinds
            raise ValueError(f"unknown kind {self.kind!r}")
        if xs.ndim == 0:
            return float(out)
        return out

    def fourier(self, h: int) -> complex:
        h = int(h)
        if h == 0:
            return complex(self.mean)
        if self.kind == "sawtooth":
            return 1j / (2.0 * math.pi * h)
        if self.kind == "cosine":
            return complex(0.5) if abs(h) == self.j else 0j
        if self.kind == "sine":
            if abs(h) != self.j:
                return 0j
            return -0.5j if h > 0 else 0.5j
        if self.kind == "indicator":
            num = cmath.exp(-2j * cmath.pi * h * self.a) - cmath.exp(
                -2j * cmath.pi * h * self.b
            )
            return num / (2j * cmath.pi * h)
        if self.kind == "trigpoly":
            if abs(h) > len(self.coeffs):
                return 0j
            aj, bj = self.coeffs[abs(h) - 1]
            coeff = complex(aj, -bj) / 2.0
            return coeff if h > 0 else coeff.conjugate()
        raise ValueError(f"unknown kind {self.kind!r}")  # pragma: no cover


def fourier(f: TestFunction, h: int) -> complex:
    """Fourier coefficient of f at integer frequency h (closed form)."""
    return f.fourier(h)


def sawtooth() -> TestFunction:
    """Centered fractional part {x} - 1/2."""
    return TestFunction(
        kind="sawtooth",
        total_variation=2.0,
        mean=0.0,
        l2sq_centered=1.0 / 12.0,
        max_frequency=None,
    )


def cosine(j: int = 1) -> TestFunction:
    """cos(2 pi j x)."""
    if j < 1:
        raise ValueError("frequency j must be >= 1")
    return TestFunction(
        kind="cosine",
        total_variation=4.0 * j,
        mean=0.0,
        l2sq_centered=0.5,
        max_frequency=j,
        j=j,
    )


def sine(j: int = 1) -> TestFunction:
    """sin(2 pi j x)."""
    if j < 1:
        raise ValueError("frequency j must be >= 1")
    return TestFunction(
        kind="sine",
        total_variation=4.0 * j,
        mean=0.0,
        l2sq_centered=0.5,
        max_frequency=j,
        j=j,
    )


def interval_indicator(a: float, b: float) -> TestFunction:
    """Indicator of [a, b) extended 1-periodically (right-continuous)."""
    if not (0.0 <= a < b <= 1.0):
        raise ValueError("need 0 <= a < b <= 1")
    length = b - a
    return TestFunction(
        kind="indicator",
        total_variation=2.0 if length < 1.0 else 0.0,
        mean=length,
        l2sq_centered=length * (1.0 - length),
        max_frequency=None if length < 1.0 else 0,
        a=float(a),
        b=float(b),
    )


def trig_poly(
    coeffs: Sequence[Sequence[float]], a0: float = 0.0
) -> TestFunction:
    """a0 + sum_j (a_j cos(2 pi j x) + b_j sin(2 pi j x)).

    ``coeffs[j-1] = (a_j, b_j)``.  Total variation has no simple closed
    form, so it is measured as the midpoint-rule integral of |f'| with a
    small safety inflation; the Fourier-decay invariant holds with slack.
    """
    pairs = tuple((float(aj), float(bj)) for aj, bj in coeffs)
    max_freq = 0
    for freq, (aj, bj) in enumerate(pairs, start=1):
        if aj != 0.0 or bj != 0.0:
            max_freq = freq
    if max_freq == 0:
        variation = 0.0
    else:
        mids = (np.arange(_TV_QUAD_POINTS) + 0.5) / _TV_QUAD_POINTS
        deriv = np.zeros_like(mids)
        for freq, (aj, bj) in enumerate(pairs, start=1):
            w = 2.0 * np.pi * freq
            deriv += w * (-aj * np.sin(w * mids) + bj * np.cos(w * mids))
        variation = float(np.mean(np.abs(deriv))) * _TV_INFLATION
    return TestFunction(
        kind="trigpoly",
        total_variation=variation,
        mean=float(a0),
        l2sq_centered=sum(aj**2 + bj**2 for aj, bj in pairs) / 2.0,
        max_frequency=max_freq,
        a0=float(a0),
        coeffs=pairs,
    )


def parse_test_function(config: dict) -> TestFunction:
    """Resolve the config encoding of a test function."""
    kind = config.get("kind")
    if kind == "sawtooth":
        return sawtooth()
    if kind == "cosine":
        return cosine(int(config.get("j", 1)))
    if kind == "sine":
        return sine(int(config.get("j", 1)))
    if kind == "indicator":
        return interval_indicator(float(config["a"]), float(config["b"]))
    if kind == "trigpoly":
        return trig_poly(config.get("coeffs", ()), a0=float(config.get("a0", 0.0)))
    raise ValueError(f"unknown test function kind {kind!r}")


# ----------------------------------------------------------- spectral factor


def spectral_factor(z: complex) -> float:
    """(1 - |z|^2)/|1 - z|^2 via the cancellation-free form 1 + 2 Re z/(1-z).

    Rejects z too close to 1 for the quotient to carry information.
    """
    d = 1.0 - z
    if abs(d) < FACTOR_MIN_GAP:
        raise PrecisionExhausted(f"|1 - phi| = {abs(d):.3e} below {FACTOR_MIN_GAP}")
    return max(1.0 + 2.0 * (z / d).real, 0.0)


def _spectral_factors(zs: np.ndarray) -> np.ndarray:
    """Vectorized spectral factor with the same rejection rule."""
    d = 1.0 - zs
    smallest = float(np.min(np.abs(d))) if d.size else 1.0
    if smallest < FACTOR_MIN_GAP:
        raise PrecisionExhausted(
            f"|1 - phi| = {smallest:.3e} below {FACTOR_MIN_GAP}"
        )
    return np.maximum(1.0 + 2.0 * (zs / d).real, 0.0)


# --------------------------------------------------------- variance constants


def _grid_coefficients(f: TestFunction, q: int) -> np.ndarray:
    """DFT coefficients of the q samples f(a/q) (sampling convention:
    right-continuous at jumps, values taken exactly on the grid)."""
    samples = np.asarray(f.evaluate(np.arange(q) / q), dtype=np.float64)
    return np.fft.fft(samples) / q


def c_rational(f: TestFunction, sd: StepDistribution, r: Rational) -> float:
    """Limiting variance constant of the walk sum for rotation p/q.

    Finite spectral sum over the nonzero grid frequencies: |f_q(h)|^2
    weighted by the spectral factor of phi at angle 2 pi h p / q.
    """
    if math.gcd(sd.D, r.q) != 1:
        raise SpanNotCoprime(f"gcd(D={sd.D}, q={r.q}) != 1")
    q = r.q
    if q == 1:
        return 0.0
    fhat = _grid_coefficients(f, q)
    h = np.arange(1, q, dtype=np.int64)
    zs = np.asarray(
        char_fn(sd, 2.0 * np.pi * ((h * (r.p % q)) % q) / q), dtype=np.complex128
    )
    weights = np.abs(fhat[1:]) ** 2
    return float(np.dot(weights, _spectral_factors(zs)))


def c_rational_oracle(
    f: TestFunction, sd: StepDistribution, r: Rational, tol: float
) -> float:
    """Autocovariance-series route to the rational variance constant.

    Sums E fbar(U)^2 + 2 sum_k E fbar(U) fbar(U + S_k p/q) with each lag
    term taken from the exact spectral walk law, stopping once the
    geometric envelope of the remaining tail drops below tol.  Serves as
    the independent cross-check for :func:`c_rational`.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if r.q > 256:
        raise ValueError("oracle route caps q at 256")
    if math.gcd(sd.D, r.q) != 1:
        raise SpanNotCoprime(f"gcd(D={sd.D}, q={r.q}) != 1")
    q = r.q
    if q == 1:
        return 0.0
    samples = np.asarray(f.evaluate(np.arange(q) / q), dtype=np.float64)
    centered = samples - samples.mean()
    lag_cov = np.array(
        [float(np.dot(centered, np.roll(centered, -b))) / q for b in range(q)]
    )
    state = one_step_spectrum(sd, r)
    base = state.base
    rho = float(np.max(np.abs(base[1:])))
    l2 = lag_cov[0]
    total = lag_cov[0]
    spectrum = base.copy()
    k = 1
    while 2.0 * l2 * rho**k / (1.0 - rho) >= tol:
        law = to_distribution(SpectralState(q=q, k=k, spectrum=spectrum, base=base))
        total += 2.0 * float(np.dot(law.probs, lag_cov))
        spectrum = spectrum * base
        k += 1
    return float(total)


def c_alpha(
    f: TestFunction, sd: StepDistribution, alpha: IrrationalNumber, H: int
) -> Tuple[float, float]:
    """Truncated variance constant for an irrational rotation number.

    Returns (value, tail_bound): the sum over 0 < |h| < H plus a reported
    tail bracket from the Fourier-decay bound scaled by the largest
    spectral factor seen on the sampled frequencies.  The tail is exactly
    zero when f is band-limited below H.
    """
    if H < 2:
        raise ValueError("H must be >= 2")
    for h in range(1, H):
        norm_h_alpha(alpha, h)
    fracs = frac_table(alpha, H - 1)[1:]
    zs = np.asarray(char_fn(sd, 2.0 * np.pi * fracs), dtype=np.complex128)
    factors = _spectral_factors(zs)
    value = math.fsum(
        2.0 * abs(f.fourier(h)) ** 2 * factors[h - 1] for h in range(1, H)
    )
    if f.max_frequency is not None and f.max_frequency < H:
        tail = 0.0
    else:
        kappa_ratio = float(factors.max())
        tail = kappa_ratio * f.total_variation**2 / (2.0 * math.pi**2 * (H - 1))
    return value, tail


def c_convergence_experiment(
    f: TestFunction,
    sd: StepDistribution,
    alpha: IrrationalNumber,
    m_range: Iterable[int],
    H: int = DEFAULT_TRUNCATION,
) -> List[dict]:
    """Rational constants along the convergents against the limit constant.

    One row per usable convergent index m: the rational constant at
    p_m/q_m, the truncated irrational constant, their gap, and the gap of
    the grid average of f from its integral.  Convergents whose
    denominator shares a factor with the step span are skipped.  H sets
    the reference truncation; gaps are only resolved down to its bracket.
    """
    limit_value, _ = c_alpha(f, sd, alpha, H)
    rows: List[dict] = []
    for m in m_range:
        if m < 0 or m >= len(alpha.convergents):
            raise ValueError(f"convergent index {m} out of range")
        conv = alpha.convergents[m]
        if math.gcd(sd.D, conv.q) != 1:
            continue
        value = c_rational(f, sd, conv)
        samples = np.asarray(f.evaluate(np.arange(conv.q) / conv.q), dtype=np.float64)
        rows.append(
            {
                "m": m,
                "q_m": conv.q,
                "c_rational": value,
                "c_alpha": limit_value,
                "gap": abs(value - limit_value),
                "riemann_gap": abs(float(samples.mean()) - f.mean),
            }
        )
    return rows


def stationary_variance(
    f: TestFunction,
    sd: StepDistribution,
    alpha: IrrationalNumber,
    N: int,
    H: int,
) -> float:
    """Variance of the centered N-step occupation sum, truncated at H.

    Closed form per frequency: N times the spectral factor minus twice
    the boundary correction Re (phi - phi^{N+1})/(1 - phi)^2; at N = 1
    the two combine to exactly the truncated L2 mass.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if H < 2:
        raise ValueError("H must be >= 2")
    terms = []
    fracs = frac_table(alpha, H - 1)
    for h in range(1, H):
        weight = 2.0 * abs(f.fourier(h)) ** 2
        if weight == 0.0:
            continue
        norm_h_alpha(alpha, h)
        z = complex(char_fn(sd, 2.0 * math.pi * fracs[h]))
        d = 1.0 - z
        if abs(d) < FACTOR_MIN_GAP:
            raise PrecisionExhausted(f"|1 - phi| below {FACTOR_MIN_GAP} at h={h}")
        boundary = ((z - z ** (N + 1)) / (d * d)).real
        terms.append(weight * (N * spectral_factor(z) - 2.0 * boundary))
    return math.fsum(terms)


# ------------------------------------------------ exponential-sum moments


def _geom_sum(z: complex, n: int) -> complex:
    """sum_{s=0}^{n-1} z^s."""
    if n <= 0:
        return 0j
    if abs(1.0 - z) < 1e-15:
        return complex(n)
    return (1.0 - z**n) / (1.0 - z)


def _mixed_sum(u: complex, v: complex, n: int) -> complex:
    """sum_{s=0}^{n-1} u^s v^{n-1-s}, stable when u and v nearly coincide."""
    if n <= 0:
        return 0j
    if abs(u - v) < 1e-8:
        total = 0j
        upow = 1.0 + 0j
        vpow = v ** (n - 1) if n > 1 else 1.0 + 0j
        for _ in range(n):
            total += upow * vpow
            upow *= u
            if v != 0:
                vpow /= v
            else:
                vpow = 0j
        return total
    return (u**n - v**n) / (u - v)


def _one_sided_block(c: complex, w: complex, N: int) -> complex:
    """sum_{s=0}^{N-2} c^s sum_{d=1}^{N-1-s} w^d (closed form, loop fallback)."""
    if N < 2:
        return 0j
    if abs(1.0 - w) >= 1e-9:
        return (w / (1.0 - w)) * (_geom_sum(c, N - 1) - w * _mixed_sum(c, w, N - 1))
    total = 0j
    cpow = 1.0 + 0j
    for s in range(N - 1):
        total += cpow * w * _geom_sum(w, N - 1 - s)
        cpow *= c
    return total


def expsum_second_moment(
    coeffs: Dict[int, complex],
    sd: StepDistribution,
    alpha: IrrationalNumber,
    M: int,
    N: int,
    mode: str,
) -> float:
    """Second moment of sum_h c_h sum_{k=M+1}^{M+N} e(h S_k alpha).

    ``exact`` evaluates the pairwise double sum over time indices through
    geometric closed forms (O(1) per frequency pair); ``main_term``
    returns the leading N-linear term with the spectral factor weights.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if M < 0:
        raise ValueError("M must be >= 0")
    if mode not in ("exact", "main_term"):
        raise ValueError(f"unknown mode {mode!r}")
    cleaned: Dict[int, complex] = {}
    for h, c in coeffs.items():
        h = int(h)
        if h == 0:
            raise ValueError("coefficients are indexed by nonzero frequencies")
        c = complex(c)
        if abs(c) > 1.0 / abs(h) + 1e-12:
            raise CoefficientBound(f"|c_{h}| = {abs(c):.6g} exceeds 1/|h|")
        cleaned[h] = c

    one = float(1 << alpha.frac_bits)

    def phi_at(m: int) -> complex:
        if m == 0:
            return 1.0 + 0j
        norm_h_alpha(alpha, m)
        return complex(char_fn(sd, 2.0 * math.pi * alpha.frac_scaled(m) / one))

    if mode == "main_term":
        return float(
            N
            * math.fsum(
                abs(c) ** 2 * spectral_factor(phi_at(h))
                for h, c in sorted(cleaned.items())
            )
        )

    if any(abs(h) > EXACT_MODE_MAX_FREQ for h in cleaned):
        raise ValueError(f"exact mode caps |h| at {EXACT_MODE_MAX_FREQ}")
    needed = set()
    for j in cleaned:
        needed.add(j)
        for h in cleaned:
            needed.add(j - h)
    phi = {m: phi_at(m) for m in needed}

    total = 0j
    for j, cj in cleaned.items():
        for h, ch in cleaned.items():
            c = phi[j - h]
            diag = c ** (M + 1) * _geom_sum(c, N)
            upper = c ** (M + 1) * _one_sided_block(c, phi[h].conjugate(), N)
            lower = c ** (M + 1) * _one_sided_block(c, phi[j], N)
            total += cj * ch.conjugate() * (diag + upper + lower)
    return float(total.real)


# ---------------------------------------------------------- Fejer / Koksma


def fejer_approx(
    f: TestFunction, points: Sequence[float], H: int
) -> Tuple[float, float]:
    """Cesaro-weighted Fourier approximation of sum_k f(x_k) with a bound.

    Returns (approx_sum, error_bound) where the bound is the reporting
    form kappa * V(f) * (log H / (r_sep H) + 1) with kappa = 10; tests
    assert it, violations surface as failures rather than being widened.
    """
    if H < 2:
        raise ValueError("H must be >= 2")
    pts = np.mod(np.asarray(points, dtype=np.float64), 1.0)
    if pts.size == 0:
        raise ValueError("needs at least one point")
    if pts.size == 1:
        r_sep = 0.5
    else:
        diff = np.abs(pts[:, None] - pts[None, :])
        circ = np.minimum(diff, 1.0 - diff)
        r_sep = float(np.min(circ[np.triu_indices(pts.size, k=1)]))
        if r_sep == 0.0:
            raise ZeroSeparation("duplicate points mod 1")
    approx = f.mean * pts.size
    for h in range(1, H):
        fh = f.fourier(h)
        if fh == 0:
            continue
        window_sum = complex(np.sum(np.exp(2j * np.pi * h * pts)))
        approx += (1.0 - h / H) * 2.0 * (fh * window_sum).real
    bound = FEJER_KAPPA * f.total_variation * (math.log(H) / (r_sep * H) + 1.0)
    return float(approx), float(bound)


def koksma_transfer_check(
    f: TestFunction, points: Sequence[float], y: float
) -> Tuple[float, float]:
    """Shift-difference of point sums against the variation-times-count form.

    lhs = |sum f(x_k) - sum f(x_k - y)|; rhs = V(f) times the spread
    between the largest closed-interval count and the smallest
    open-interval count over intervals of length |y|, maximized exactly
    on the finite candidate set of interval positions anchored at the
    points.  The inequality lhs <= rhs is the content under test.
    """
    if abs(y) > 0.5:
        raise ValueError("|y| must be <= 1/2")
    pts = np.mod(np.asarray(points, dtype=np.float64), 1.0)
    lhs = abs(
        float(np.sum(f.evaluate(pts))) - float(np.sum(f.evaluate(pts - y)))
    )
    length = abs(y)
    anchors = np.concatenate((pts, np.mod(pts - length, 1.0)))
    sup_count = 0
    inf_count = pts.size
    for t in anchors:
        rel = np.mod(pts - t, 1.0)
        closed = int(np.sum((rel <= length + 1e-12) | (rel >= 1.0 - 1e-12)))
        open_ = int(np.sum((rel > 1e-12) & (rel < length - 1e-12)))
        sup_count = max(sup_count, closed)
        inf_count = min(inf_count, open_)
    rhs = f.total_variation * (sup_count - inf_count)
    return lhs, float(rhs)
