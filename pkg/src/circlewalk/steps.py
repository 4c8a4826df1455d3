"""Finite-support integer step laws and their characteristic functions.

A step law is the distribution of one increment X of an integer random
walk.  Everything downstream (exact walk laws on Z/q, decay-rate bounds,
variance constants) is driven by three pieces of data computed here:

* the arithmetic spans ``d`` (gcd of the atom values) and ``D`` (gcd of
  the pairwise differences of atom values),
* exact mean/variance of the atom list,
* the characteristic function ``phi(x) = sum_n p_n e^{ixn}`` together
  with a certified Gaussian envelope ``|phi(2 pi x)| <= e^{-c x^2}`` on a
  radius ``r`` where ``log|phi|`` is concave, plus a plateau bound
  ``e^{-tau}`` away from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateDistribution, EnvelopeNotFound, InvalidProbability

#: allowed drift of the total mass before normalization
MASS_TOL = 1e-9
#: slack for second-difference log-concavity checks on the envelope grid
CONCAVITY_SLACK = 1e-10
#: smallest certifiable envelope radius, in grid steps
MIN_ENVELOPE_STEPS = 10
#: coarsest permitted envelope grid
MAX_GRID_STEP = 1e-4

AtomPairs = Iterable[Tuple[int, float]]


@dataclass(frozen=True)
class StepDistribution:
    """Immutable finite-support integer step law.

    ``atoms`` is sorted by value, deduplicated, and carries strictly
    positive probabilities summing to 1.
    """

    atoms: Tuple[Tuple[int, float], ...]
    mean: float
    variance: float
    d: int
    D: int

    @property
    def values(self) -> np.ndarray:
        arr = self.__dict__.get("_values")
        if arr is None:
            arr = np.array([v for v, _ in self.atoms], dtype=np.int64)
            self.__dict__["_values"] = arr
        return arr

    @property
    def probs(self) -> np.ndarray:
        arr = self.__dict__.get("_probs")
        if arr is None:
            arr = np.array([p for _, p in self.atoms], dtype=np.float64)
            self.__dict__["_probs"] = arr
        return arr


@dataclass(frozen=True)
class EnvelopeParams:
    """Certified decay envelope of |phi(2 pi x)| on [0, 1/2].

    ``r``: radius on which log|phi| is concave (grid-certified);
    ``c``: |phi(2 pi x)| <= exp(-c x^2) for grid x in [0, r];
    ``tau``: |phi(2 pi x)| <= exp(-tau) for grid x in [r/2, 1/2].
    """

    r: float
    c: float
    tau: float


def new_step_distribution(pairs: AtomPairs) -> StepDistribution:
    """Build a validated, normalized step law from (value, prob) pairs.

    Duplicate values are merged, zero-mass atoms dropped, and the mass
    renormalized when it drifts from 1 by at most ``MASS_TOL``.
    """
    merged: dict[int, float] = {}
    for value, prob in pairs:
        v = int(value)
        if v != value:
            raise ValueError(f"atom value {value!r} is not an integer")
        p = float(prob)
        if p < 0.0 or not math.isfinite(p):
            raise InvalidProbability(f"atom probability {prob!r} is negative or non-finite")
        merged[v] = merged.get(v, 0.0) + p
    if not merged:
        raise DegenerateDistribution("empty atom list")
    total = math.fsum(merged.values())
    if abs(total - 1.0) > MASS_TOL:
        raise InvalidProbability(
            f"total mass {total!r} deviates from 1 by more than {MASS_TOL}"
        )
    atoms = tuple((v, p / total) for v, p in sorted(merged.items()) if p > 0.0)
    if len(atoms) < 2:
        raise DegenerateDistribution("fewer than 2 atoms with positive mass")
    mean = math.fsum(v * p for v, p in atoms)
    variance = math.fsum(p * (v - mean) ** 2 for v, p in atoms)
    values = [v for v, _ in atoms]
    d = math.gcd(*(abs(v) for v in values))
    D = math.gcd(*(values[i + 1] - values[i] for i in range(len(values) - 1)))
    return StepDistribution(atoms=atoms, mean=mean, variance=variance, d=d, D=D)


def moments(sd: StepDistribution) -> Tuple[float, float]:
    """Exact (mean, variance) of the atom list."""
    return (sd.mean, sd.variance)


def char_fn(
    sd: StepDistribution, x: Union[float, np.ndarray]
) -> Union[complex, np.ndarray]:
    """Characteristic function phi(x) = sum_n p_n e^{ixn}.

    Accepts a scalar or an ndarray of angles (radians) and broadcasts.
    """
    xs = np.asarray(x, dtype=np.float64)
    phases = np.exp(1j * np.multiply.outer(xs, sd.values.astype(np.float64)))
    out = phases @ sd.probs
    if xs.ndim == 0:
        return complex(out)
    return out


def envelope_params(sd: StepDistribution, grid_step: float = 1e-5) -> EnvelopeParams:
    """Scan |phi(2 pi x)| on a uniform grid over [0, 1/2] for a certified
    Gaussian envelope.

    The radius ``r`` is the largest grid prefix on which log|phi| passes a
    second-difference concavity test (which also certifies
    submultiplicativity of |phi| there, since phi(0) = 1).
    """
    if not (0.0 < grid_step <= MAX_GRID_STEP):
        raise ValueError(f"grid_step must be in (0, {MAX_GRID_STEP}]")
    if sd.D != 1:
        raise ValueError("envelope requires span D = 1; reduce the walk first")
    n = int(round(0.5 / grid_step))
    xs = np.linspace(0.0, 0.5, n + 1)
    mods = np.abs(char_fn(sd, 2.0 * math.pi * xs))
    with np.errstate(divide="ignore"):
        logs = np.log(mods)
    second = logs[:-2] - 2.0 * logs[1:-1] + logs[2:]
    with np.errstate(invalid="ignore"):
        good = second <= CONCAVITY_SLACK  # NaN compares False: treated as violation
    bad = ~good
    r_idx = int(np.argmax(bad)) + 1 if bad.any() else n
    if r_idx < MIN_ENVELOPE_STEPS:
        raise EnvelopeNotFound(
            f"log-concavity fails within {MIN_ENVELOPE_STEPS} grid steps of 0"
        )
    r = float(xs[r_idx])
    c = float(np.min(-logs[1 : r_idx + 1] / xs[1 : r_idx + 1] ** 2))
    half_idx = (r_idx + 1) // 2
    tau = float(-np.log(np.max(mods[half_idx:])))
    if c <= 0.0 or tau <= 0.0:
        raise EnvelopeNotFound(f"degenerate envelope constants c={c}, tau={tau}")
    return EnvelopeParams(r=r, c=c, tau=tau)


_FIXED_PRESETS = {
    "uniform12": ((1, 0.5), (2, 0.5)),
    "uniform01": ((0, 0.5), (1, 0.5)),
    "uniform13": ((1, 0.5), (3, 0.5)),
}


def list_step_presets() -> list[str]:
    """Names accepted by :func:`step_preset` (parametrized kinds included)."""
    return sorted(_FIXED_PRESETS) + ["biased_pair", "uniform_range"]


def step_preset(spec: Union[str, dict, Sequence]) -> StepDistribution:
    """Resolve a step-law preset.

    Accepts a preset name ("uniform12", "uniform01", "uniform13"), a
    parametrized form ({"kind": "uniform_range", "m": 6} for the uniform
    law on {1..m}, {"kind": "biased_pair", "p": 0.25} for {1: 1-p, 2: p}),
    or an explicit [[value, prob], ...] array.
    """
    if isinstance(spec, str):
        try:
            return new_step_distribution(_FIXED_PRESETS[spec])
        except KeyError:
            raise ValueError(f"unknown step preset {spec!r}") from None
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "uniform_range":
            m = int(spec["m"])
            if m < 2:
                raise ValueError("uniform_range needs m >= 2")
            return new_step_distribution([(v, 1.0 / m) for v in range(1, m + 1)])
        if kind == "biased_pair":
            p = float(spec["p"])
            return new_step_distribution([(1, 1.0 - p), (2, p)])
        raise ValueError(f"unknown step preset kind {kind!r}")
    return new_step_distribution([(int(v), float(p)) for v, p in spec])
