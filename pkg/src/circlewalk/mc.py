"""Seeded Monte Carlo experiments on circle walks.

Replica r of a run draws from a Philox counter stream keyed by
(seed, r), so every experiment is a pure function of its config no
matter how many worker threads execute it.  Fractional parts of S_k
times the rotation number are produced in exact fixed point (32-bit
limb arithmetic over the walk vector), matching the orbit the exact
spectral code certifies.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from .cyclic import new_cyclic_distribution, psi_disc
from .dioph import IrrationalNumber, Rational
from .errors import PrecisionExhausted, SpanNotCoprime
from .steps import StepDistribution
from .variance import TestFunction

#: environment override for the replica worker pool
THREADS_ENV_VAR = "CIRCLEWALK_THREADS"
#: fixed-point magnitude certificate threshold (matches the h-norm rule)
_CERT_THRESHOLD = 1e-9
#: walk magnitudes must fit the 32-bit limb product path
_WALK_MAGNITUDE_CAP = 1 << 31


@dataclass(frozen=True)
class SamplerConfig:
    """Walk-sampling parameters: step law, seed, length, replica count."""

    sd: StepDistribution
    seed: int
    N: int
    M: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not (0 <= self.seed < 1 << 64):
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class CltReport:
    """Outcome of a normalized-endpoint distribution experiment."""

    sigma_theory: float
    empirical_std: float
    ks_distance: float
    replicas: int
    N: int
    seed: int


def _replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Counter-based stream for one replica: key = (seed, replica)."""
    return np.random.Generator(np.random.Philox(key=(seed << 64) | replica))


def _worker_count() -> int:
    configured = os.environ.get(THREADS_ENV_VAR, "")
    if configured.strip():
        return max(1, int(configured))
    return min(8, os.cpu_count() or 1)


def _run_replicas(fn, count: int) -> list:
    """Evaluate fn(replica) for each replica, merged in index order."""
    workers = _worker_count()
    if workers == 1 or count == 1:
        return [fn(r) for r in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def sample_walk(cfg: SamplerConfig, replica: int) -> np.ndarray:
    """Partial sums S_1..S_N of one replica's i.i.d. step draws.

    Inverse-CDF sampling over the atom table; deterministic given
    (seed, replica) regardless of worker threads.
    """
    if not 0 <= replica < cfg.M:
        raise ValueError(f"replica {replica} outside 0..{cfg.M - 1}")
    rng = _replica_rng(cfg.seed, replica)
    cum = np.cumsum(cfg.sd.probs)
    draws = rng.random(cfg.N)
    idx = np.minimum(
        np.searchsorted(cum, draws, side="right"), len(cum) - 1
    )
    return np.cumsum(cfg.sd.values[idx], dtype=np.int64)


def _frac_parts(walk: np.ndarray, alpha: IrrationalNumber) -> np.ndarray:
    """{S_j * alpha} for every entry, in exact fixed point.

    Splits alpha's scaled integer into 32-bit limbs so each product
    S_j * limb fits a uint64; the final fraction is recombined in float
    with only one rounding.
    """
    walk = np.asarray(walk, dtype=np.int64)
    if walk.size == 0:
        return np.zeros(0)
    magnitude = int(np.max(np.abs(walk)))
    if magnitude >= _WALK_MAGNITUDE_CAP:
        raise ValueError("walk magnitude exceeds the 32-bit limb range")
    if magnitude * 2.0 ** (-alpha.precision_bits) >= _CERT_THRESHOLD:
        raise PrecisionExhausted(
            f"|S| = {magnitude} outside the certified range for "
            f"{alpha.precision_bits} precision bits"
        )
    fb = alpha.frac_bits
    n_limbs = (fb + 31) // 32
    scaled = alpha.scaled % (1 << fb)
    mags = np.abs(walk).astype(np.uint64)
    carry = np.zeros(walk.shape, dtype=np.uint64)
    frac = np.zeros(walk.shape, dtype=np.float64)
    mask32 = np.uint64(0xFFFFFFFF)
    for i in range(n_limbs):
        limb = np.uint64((scaled >> (32 * i)) & 0xFFFFFFFF)
        t = mags * limb + carry
        r = t & mask32
        carry = t >> np.uint64(32)
        if i == n_limbs - 1:
            top_bits = fb - 32 * (n_limbs - 1)
            r = r & np.uint64((1 << top_bits) - 1)
        frac += np.ldexp(r.astype(np.float64), 32 * i - fb)
    negative = walk < 0
    frac = np.where(negative & (frac > 0.0), 1.0 - frac, frac)
    return frac


def functional_trajectory(
    walk: Sequence[int], f: TestFunction, alpha: IrrationalNumber
) -> np.ndarray:
    """Running centered sums sum_{j<=k} f({S_j alpha}) - mean(f) * k."""
    walk = np.asarray(walk, dtype=np.int64)
    fracs = _frac_parts(walk, alpha)
    values = np.asarray(f.evaluate(fracs), dtype=np.float64)
    return np.cumsum(values) - f.mean * np.arange(1, walk.size + 1)


def ks_to_normal(samples: np.ndarray, sigma: float) -> float:
    """Kolmogorov-Smirnov distance to Normal(0, sigma^2).

    sigma = 0 compares against the point mass at 0.
    """
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = xs.size
    if sigma == 0.0:
        below = float(np.mean(xs < 0.0))
        above = float(np.mean(xs > 0.0))
        return max(below, above)
    nd = statistics.NormalDist(0.0, sigma)
    cdf = np.array([nd.cdf(x) for x in xs])
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.max(upper - cdf), np.max(cdf - lower)))


def clt_endpoints(
    cfg: SamplerConfig, f: TestFunction, alpha: IrrationalNumber
) -> np.ndarray:
    """Normalized endpoints (sum f - mean(f) N) / sqrt(N), one per replica."""
    if not all(v > 0 for v, _ in cfg.sd.atoms):
        raise ValueError("endpoint experiments require strictly positive atoms")

    def endpoint(replica: int) -> float:
        traj = functional_trajectory(sample_walk(cfg, replica), f, alpha)
        return float(traj[-1]) / math.sqrt(cfg.N)

    return np.array(_run_replicas(endpoint, cfg.M))


def report_from_endpoints(
    endpoints: np.ndarray, cfg: SamplerConfig, sigma_theory: float
) -> CltReport:
    """Summarize normalized endpoints against Normal(0, sigma_theory^2)."""
    if np.allclose(endpoints, 0.0, atol=1e-12):
        empirical_std = 0.0
    else:
        empirical_std = float(np.std(endpoints, ddof=1))
    return CltReport(
        sigma_theory=float(sigma_theory),
        empirical_std=empirical_std,
        ks_distance=ks_to_normal(endpoints, sigma_theory),
        replicas=cfg.M,
        N=cfg.N,
        seed=cfg.seed,
    )


def clt_experiment(
    cfg: SamplerConfig,
    f: TestFunction,
    alpha: IrrationalNumber,
    sigma_theory: float,
) -> CltReport:
    """Distribution check of the normalized endpoint over M replicas.

    Each replica contributes (sum f - mean(f) N) / sqrt(N); the report
    compares their empirical law against Normal(0, sigma_theory^2).
    """
    return report_from_endpoints(clt_endpoints(cfg, f, alpha), cfg, sigma_theory)


def lil_experiment(
    cfg: SamplerConfig,
    f: TestFunction,
    alpha: IrrationalNumber,
    sigma_theory: float,
    checkpoints: Iterable[int],
) -> dict:
    """Per-replica maxima of |centered sum| / sqrt(2 N log log N).

    A finite-horizon statistic only: the output is labeled illustrative
    and no limit assertion is made beyond the reporting band.
    """
    points = sorted(int(c) for c in checkpoints)
    if not points:
        raise ValueError("needs at least one checkpoint")
    for c in points:
        if c < 4 or c & (c - 1):
            raise ValueError(f"checkpoint {c} is not a dyadic size >= 4")
        if c > cfg.N:
            raise ValueError(f"checkpoint {c} exceeds N = {cfg.N}")
    idx = np.array(points, dtype=np.int64) - 1
    scale = np.sqrt(
        2.0 * np.array(points, dtype=np.float64) * np.log(np.log(points))
    )

    def replica_max(replica: int) -> float:
        traj = functional_trajectory(sample_walk(cfg, replica), f, alpha)
        return float(np.max(np.abs(traj[idx]) / scale))

    maxima = _run_replicas(replica_max, cfg.M)
    return {
        "maxima": maxima,
        "median": float(np.median(maxima)),
        "sigma_theory": float(sigma_theory),
        "band": [0.5 * sigma_theory, 2.0 * sigma_theory],
        "checkpoints": points,
        "N": cfg.N,
        "replicas": cfg.M,
        "seed": cfg.seed,
        "illustrative": True,
    }


def empirical_psi_disc(cfg: SamplerConfig, r: Rational, k: int) -> float:
    """Anchored-interval discrepancy of the empirical law of S_k p mod q.

    Each replica contributes one k-step endpoint; the resulting count
    vector runs through the same distribution validation as exact laws.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if math.gcd(cfg.sd.D, r.q) != 1:
        raise SpanNotCoprime(f"gcd(D={cfg.sd.D}, q={r.q}) != 1")
    q = r.q
    cum = np.cumsum(cfg.sd.probs)
    values = cfg.sd.values

    def endpoint(replica: int) -> int:
        rng = _replica_rng(cfg.seed, replica)
        draws = rng.random(k)
        idx = np.minimum(np.searchsorted(cum, draws, side="right"), len(cum) - 1)
        return int(np.sum(values[idx]))

    residues = np.fromiter(
        ((endpoint(rep) * r.p) % q for rep in range(cfg.M)),
        dtype=np.int64,
        count=cfg.M,
    )
    counts = np.bincount(residues, minlength=q).astype(np.float64) / cfg.M
    return psi_disc(new_cyclic_distribution(counts))
