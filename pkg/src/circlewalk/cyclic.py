"""Exact evolution of S_k * p/q mod 1 on Z_q and its distance metrics.

The law of the walk after k steps is synthesized spectrally: the DFT of
the k-step law is the pointwise k-th power of the one-step spectrum
phi(2 pi h p / q).  Scans power the spectrum incrementally along a
k-grid and re-synchronize against a fresh power-by-squaring every 2^16
steps.

Distance metrics are computed from the *deviation vector* (inverse DFT
with the h=0 mode removed), i.e. probs - 1/q synthesized directly.  Far
past mixing the deviations sit many orders of magnitude below the ulp
of 1/q, so computing them from the probabilities would destroy them;
the zero-mode-free synthesis keeps full relative precision, which the
normalized decay-rate series need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .dioph import Rational, bad_approx_constant_rational, cf_expand, max_partial_quotient
from .errors import (
    InvalidProbability,
    SpanNotCoprime,
    SpectralCorruption,
    SupportTooLarge,
)
from .steps import StepDistribution, char_fn, envelope_params, new_step_distribution

#: incremental spectra are re-synthesized by power-by-squaring this often
RESYNC_INTERVAL = 1 << 16
#: max tolerated drift between incremental and fresh spectra
RESYNC_TOL = 1e-9
#: probabilities may dip this far below zero from float error
NEGATIVE_CLIP = -1e-12
#: beyond this, imaginary residue / negative mass means corrupted state
CORRUPTION_TOL = 1e-6
#: total mass must match 1 this closely
MASS_TOL = 1e-9
#: hard cap on exact integer-convolution support
SUPPORT_CAP = 1 << 24
#: slack for the monotonicity assertion on the cyclic-interval discrepancy
MONOTONE_SLACK = 1e-12

#: CSV column order for serialized transition scans
SCAN_COLUMNS = (
    "psi_disc",
    "psi_disc_star",
    "psi_tv",
    "be_bound",
    "tv_ub",
    "lb_spectral",
    "lb_atom",
    "norm_poly",
    "norm_exp",
)


@dataclass(eq=False)
class CyclicDistribution:
    """Probability vector on Z_q plus its deviation from uniform.

    ``dev`` is probs - 1/q but may carry far more relative precision
    than the difference of the stored floats would.
    """

    q: int
    probs: np.ndarray
    dev: np.ndarray
    imag_residue: float = 0.0


@dataclass(eq=False)
class SpectralState:
    """DFT of the k-step walk law: spectrum[h] = phi(2 pi h p / q)^k."""

    q: int
    k: int
    spectrum: np.ndarray
    base: np.ndarray


@dataclass(frozen=True)
class MetricSeries:
    """One named metric sampled along an increasing k-grid."""

    k_values: Tuple[int, ...]
    metric: str
    values: Tuple[float, ...]
    meta: dict


def new_cyclic_distribution(probs: Sequence[float]) -> CyclicDistribution:
    """Validate and wrap an explicit probability vector on Z_q."""
    arr = np.array(probs, dtype=np.float64)
    q = arr.shape[0]
    if q < 1:
        raise InvalidProbability("empty probability vector")
    if float(arr.min(initial=0.0)) < NEGATIVE_CLIP:
        raise InvalidProbability(f"negative mass below {NEGATIVE_CLIP}")
    total = float(arr.sum())
    if abs(total - 1.0) > MASS_TOL:
        raise InvalidProbability(f"total mass {total!r} deviates from 1 by > {MASS_TOL}")
    np.clip(arr, 0.0, None, out=arr)
    return CyclicDistribution(q=q, probs=arr, dev=arr - 1.0 / q)


def reduce_to_unit_span(
    sd: StepDistribution, r: Rational
) -> Tuple[StepDistribution, Rational]:
    """Translate/rescale the step law so its span D becomes 1.

    The walk of the reduced instance is the original walk up to a
    (k-dependent) rotation of Z_q, so interval metrics transfer: the
    cyclic-interval discrepancy exactly, the anchored one up to its
    factor-2 equivalence.
    """
    if sd.D == 1:
        return sd, r
    if math.gcd(sd.D, r.q) != 1:
        raise SpanNotCoprime(
            f"gcd(D={sd.D}, q={r.q}) != 1: the walk never equidistributes"
        )
    v0 = sd.atoms[0][0]
    reduced = new_step_distribution([((v - v0) // sd.D, p) for v, p in sd.atoms])
    return reduced, Rational((sd.D * r.p) % r.q, r.q)


def _unit_roots(q: int) -> np.ndarray:
    """e^(2 pi i j / q) for j = 0..q-1, with exact quarter-circle entries.

    Pinning the residues at j in {0, q/4, q/2, 3q/4} to exactly 1, i, -1,
    -i keeps spectra that vanish algebraically (e.g. q = 2 with equal odd
    and even mass) at exactly zero instead of picking up float residue.
    """
    roots = np.exp(2j * math.pi * np.arange(q) / q)
    roots[0] = 1.0 + 0.0j
    if q % 2 == 0:
        roots[q // 2] = -1.0 + 0.0j
    if q % 4 == 0:
        roots[q // 4] = 1.0j
        roots[3 * q // 4] = -1.0j
    return roots


def one_step_spectrum(sd: StepDistribution, r: Rational) -> SpectralState:
    """Spectrum of the one-step law: entry h is phi(2 pi (h p mod q) / q).

    The residue v*h*p mod q is reduced in integer arithmetic per atom
    before indexing the root table, so large products never lose
    precision to angle wrap-around.
    """
    q = r.q
    roots = _unit_roots(q)
    h = np.arange(q, dtype=np.int64)
    base = np.zeros(q, dtype=np.complex128)
    for v, p in sd.atoms:
        base += p * roots[(h * ((int(v) * r.p) % q)) % q]
    base[0] = 1.0 + 0.0j
    return SpectralState(q=q, k=1, spectrum=base.copy(), base=base)


def _pow_pointwise(base: np.ndarray, exponent: int) -> np.ndarray:
    """Entrywise base**exponent by binary powering (stable for |z| <= 1)."""
    result = np.ones_like(base)
    acc = base.copy()
    e = int(exponent)
    while e:
        if e & 1:
            result = result * acc
        e >>= 1
        if e:
            acc = acc * acc
    return result


def advance(state: SpectralState, steps: int) -> SpectralState:
    """Multiply in `steps` further one-step factors (power-by-squaring)."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps == 0:
        return state
    spectrum = state.spectrum * _pow_pointwise(state.base, steps)
    return SpectralState(q=state.q, k=state.k + steps, spectrum=spectrum, base=state.base)


def to_distribution(state: SpectralState) -> CyclicDistribution:
    """Inverse DFT of the spectral state, with integrity checks.

    The h=0 mode is removed before the transform so the deviation vector
    is synthesized directly; probs are then 1/q + dev.
    """
    q = state.q
    s = np.array(state.spectrum, dtype=np.complex128)
    s[0] = 0.0
    devc = np.fft.fft(s) / q
    imag_residue = float(np.max(np.abs(devc.imag))) if q > 0 else 0.0
    dev = devc.real.copy()
    probs = dev + 1.0 / q
    lowest = float(probs.min())
    if imag_residue > CORRUPTION_TOL or lowest < -CORRUPTION_TOL:
        raise SpectralCorruption(
            f"inverse DFT residue {imag_residue:.3e} / negative mass {lowest:.3e} "
            f"exceeds {CORRUPTION_TOL}"
        )
    if lowest < 0.0:
        np.clip(probs, 0.0, None, out=probs)
        probs /= probs.sum()
        dev = probs - 1.0 / q
    return CyclicDistribution(q=q, probs=probs, dev=dev, imag_residue=imag_residue)


# ----------------------------------------------------------------- metrics


def psi_disc(dist: CyclicDistribution) -> float:
    """Max over anchored intervals [0, a] of |CDF(a/q) - (a+1)/q|."""
    return float(np.max(np.abs(np.cumsum(dist.dev))))


def psi_disc_star(dist: CyclicDistribution) -> float:
    """Max deviation over all cyclic intervals, via prefix extremes (O(q))."""
    prefix = np.concatenate(([0.0], np.cumsum(dist.dev)))
    return float(prefix.max() - prefix.min())


def psi_tv(dist: CyclicDistribution) -> float:
    """Total variation distance to uniform (half the L1 deviation)."""
    return 0.5 * float(np.sum(np.abs(dist.dev)))


# ------------------------------------------------------------------ bounds


def berry_esseen_bound(sd: StepDistribution, r: Rational, k: int) -> float:
    """Upper bound sum_{1<=h<=q/2} |phi(2 pi h p/q)|^k / h for psi_disc(k).

    Computed after span reduction (the bound certifies the reduced walk).
    """
    sd, r = reduce_to_unit_span(sd, r)
    q = r.q
    if q < 2:
        return 0.0
    h = np.arange(1, q // 2 + 1, dtype=np.int64)
    mods = np.abs(char_fn(sd, 2.0 * math.pi * ((h * (r.p % q)) % q) / q))
    return float(np.sum(np.power(mods, k) / h))


def tv_upper_bound(sd: StepDistribution, r: Rational, k: int) -> float:
    """Upper bound sqrt((1/4) sum_{h=1}^{q-1} |phi(2 pi h/q)|^{2k}) for psi_tv(k).

    Multiplication by p permutes the frequencies, so p drops out.
    """
    sd, r = reduce_to_unit_span(sd, r)
    q = r.q
    if q < 2:
        return 0.0
    h = np.arange(1, q, dtype=np.int64)
    mods = np.abs(char_fn(sd, 2.0 * math.pi * h / q))
    return float(math.sqrt(0.25 * np.sum(np.power(mods, 2 * k))))


def lower_bounds(
    sd: StepDistribution, r: Rational, k: int
) -> Tuple[float, Optional[float]]:
    """Certified lower bounds for psi_disc(k).

    Returns (spectral_lb, atom_lb); the atom bound is only valid for
    1 <= k <= (q-3)^2 / (108 Var X) and is None outside that window.
    """
    sd, r = reduce_to_unit_span(sd, r)
    q = r.q
    if q < 2:
        raise ValueError("requires q >= 2")
    phi1 = abs(char_fn(sd, 2.0 * math.pi / q))
    spectral = phi1**k / (2.0 * (q - 1))
    atom: Optional[float] = None
    if q >= 3 and 1 <= k <= (q - 3) ** 2 / (108.0 * sd.variance):
        atom = 1.0 / (12.0 * math.sqrt(3.0 * sd.variance * k) + 6.0)
    return float(spectral), atom


def tv_lower_bound(sd: StepDistribution, r: Rational, k: int) -> float:
    """Certified lower bound (1/2) |phi(2 pi/q)|^k for psi_tv(k)."""
    sd, r = reduce_to_unit_span(sd, r)
    q = r.q
    if q < 2:
        return 0.0
    return 0.5 * abs(char_fn(sd, 2.0 * math.pi / q)) ** k


# ---------------------------------------------------------------- scanning


def default_k_grid(q: int) -> List[int]:
    """All k <= 64, then geometric with ratio 1.05, plus q^2 and 8q^2."""
    end = 8 * q * q
    ks = set(range(1, min(64, end) + 1))
    v = 64
    while v < end:
        v = max(v + 1, math.ceil(v * 1.05))
        ks.add(min(v, end))
    ks.add(q * q)
    ks.add(end)
    return sorted(k for k in ks if k >= 1)


@dataclass(eq=False)
class ScanResult:
    """Metric series sampled along one k-grid, plus derived constants."""

    k_values: List[int]
    columns: Dict[str, np.ndarray]
    meta: dict

    def values(self, metric: str) -> np.ndarray:
        return self.columns[metric]

    def series(self, metric: str) -> MetricSeries:
        vals = self.columns[metric]
        keep = ~np.isnan(vals)
        return MetricSeries(
            k_values=tuple(int(k) for k, m in zip(self.k_values, keep) if m),
            metric=metric,
            values=tuple(float(v) for v in vals[keep]),
            meta=self.meta,
        )


def transition_scan(
    sd: StepDistribution, r: Rational, k_grid: Optional[Iterable[int]] = None
) -> ScanResult:
    """Evolve the walk law along a k-grid and record metrics plus bounds.

    One spectral state is powered incrementally between grid points and
    re-synchronized against a direct power every 2^16 steps.  Emits the
    normalized series sqrt(k) * psi_disc(k) for k <= q^2 and
    q * psi_disc(k) / |phi(2 pi/q)|^k for k >= q^2 (NaN outside their
    regimes, and for norm_exp wherever |phi|^k underflows).
    """
    original = sd
    sd, r = reduce_to_unit_span(sd, r)
    q = r.q
    ks = sorted({int(k) for k in (default_k_grid(q) if k_grid is None else k_grid)})
    if not ks or ks[0] < 1:
        raise ValueError("k_grid must contain integers >= 1")

    state = one_step_spectrum(sd, r)
    base = state.base
    h_be = np.arange(1, q // 2 + 1, dtype=np.int64)
    mods_be = np.abs(char_fn(sd, 2.0 * math.pi * ((h_be * (r.p % q)) % q) / q))
    h_tv = np.arange(1, q, dtype=np.int64)
    mods_tv = np.abs(char_fn(sd, 2.0 * math.pi * h_tv / q))
    phi1 = float(mods_tv[0]) if q >= 2 else 0.0
    atom_k_max = (q - 3) ** 2 / (108.0 * sd.variance) if q >= 3 else 0.0
    env = envelope_params(sd)
    q2 = q * q

    cols = {name: np.full(len(ks), np.nan) for name in SCAN_COLUMNS + ("tv_lb",)}
    spectrum = state.spectrum
    prev_k = 1
    since_resync = 0
    for i, k in enumerate(ks):
        delta = k - prev_k
        if delta:
            spectrum = spectrum * _pow_pointwise(base, delta)
            since_resync += delta
            prev_k = k
        if since_resync >= RESYNC_INTERVAL:
            fresh = _pow_pointwise(base, k)
            drift = float(np.max(np.abs(fresh - spectrum)))
            if drift > RESYNC_TOL:
                raise SpectralCorruption(
                    f"incremental spectrum drifted {drift:.3e} from direct power at k={k}"
                )
            spectrum = fresh
            since_resync = 0
        dist = to_distribution(SpectralState(q=q, k=k, spectrum=spectrum, base=base))
        psi = psi_disc(dist)
        cols["psi_disc"][i] = psi
        cols["psi_disc_star"][i] = psi_disc_star(dist)
        cols["psi_tv"][i] = psi_tv(dist)
        cols["be_bound"][i] = float(np.sum(np.power(mods_be, k) / h_be)) if q >= 2 else 0.0
        cols["tv_ub"][i] = math.sqrt(0.25 * float(np.sum(np.power(mods_tv, 2 * k))))
        cols["lb_spectral"][i] = phi1**k / (2.0 * (q - 1)) if q >= 2 else 0.0
        if 1 <= k <= atom_k_max:
            cols["lb_atom"][i] = 1.0 / (12.0 * math.sqrt(3.0 * sd.variance * k) + 6.0)
        cols["tv_lb"][i] = 0.5 * phi1**k
        if k <= q2:
            cols["norm_poly"][i] = math.sqrt(k) * psi
        if k >= q2:
            phik = phi1**k
            if phik > 0.0:
                cols["norm_exp"][i] = q * psi / phik

    star = cols["psi_disc_star"]
    if np.any(star[1:] > star[:-1] + MONOTONE_SLACK):
        worst = int(np.argmax(star[1:] - star[:-1]))
        raise SpectralCorruption(
            f"cyclic-interval discrepancy increased between k={ks[worst]} "
            f"and k={ks[worst + 1]}"
        )

    meta = {
        "q": q,
        "p": r.p,
        "A": bad_approx_constant_rational(r) if q >= 2 else 0.5,
        "c": 2.0 * math.pi**2 * original.variance / original.D**2,
        "r": env.r,
        "tau": env.tau,
        "variance": sd.variance,
        "atoms": [[v, p] for v, p in sd.atoms],
        "max_partial_quotient": max_partial_quotient(cf_expand(r)),
    }
    return ScanResult(k_values=ks, columns=cols, meta=meta)


# ------------------------------------------- continuous Kolmogorov distance


def kolmogorov_continuous(sd, alpha, k: int, tail_eps: float = 0.0) -> float:
    """Kolmogorov distance of the law of {S_k alpha} from uniform on [0,1).

    The integer law of S_k is built by exact k-fold convolution (optionally
    trimmed, discarding total mass <= tail_eps); atoms land at {n alpha}
    through the fixed-point representation.  The supremum runs over left
    and right limits at every atom.  When trimming is active the reported
    value includes the tail_eps slack, so it upper-bounds the exact one.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 1.0
    values = sd.values
    probs = sd.probs
    vmin, vmax = int(values[0]), int(values[-1])
    width = k * (vmax - vmin) + 1
    if width > SUPPORT_CAP:
        raise SupportTooLarge(f"support of S_k needs {width} points (cap {SUPPORT_CAP})")
    kernel = np.zeros(vmax - vmin + 1)
    kernel[values - vmin] = probs
    cur = kernel.copy()
    n_lo = vmin
    side_budget = (tail_eps / k) / 2.0 if tail_eps > 0.0 else 0.0
    for _ in range(k - 1):
        cur = np.convolve(cur, kernel)
        n_lo += vmin
        if side_budget > 0.0:
            cs = np.cumsum(cur)
            left = int(np.searchsorted(cs, side_budget, side="right"))
            ss = np.cumsum(cur[::-1])
            right = int(np.searchsorted(ss, side_budget, side="right"))
            if left or right:
                cur = cur[left : len(cur) - right if right else len(cur)]
                n_lo += left

    keep = cur > 0.0
    weights = cur[keep]
    one = 1 << alpha.frac_bits
    step_scaled = alpha.scaled % one
    acc = (n_lo * alpha.scaled) % one
    scale = 1.0 / float(one)
    xs_all = np.empty(len(cur))
    for i in range(len(cur)):
        xs_all[i] = acc * scale
        acc = (acc + step_scaled) % one
    xs = xs_all[keep]
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    cdf = np.cumsum(weights[order])
    cdf_left = cdf - weights[order]
    sup = max(
        float(np.max(np.abs(cdf - xs))),
        float(np.max(np.abs(cdf_left - xs))),
    )
    return sup + (tail_eps if tail_eps > 0.0 else 0.0)
