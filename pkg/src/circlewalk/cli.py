"""Batch front-end: JSON experiment configs in, CSV/JSON/PNG artifacts out.

All science lives in the config file; flags only pick the config path,
the output directory, and verbosity.  Exit codes: 0 success, 1 invalid
configuration, 2 numerical-integrity failure (SpectralCorruption or
PrecisionExhausted).  Summary verdict lines carry exact inequality
counts so CI logs can be grepped.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import report
from .cyclic import ScanResult, transition_scan
from .dioph import (
    IrrationalNumber,
    Rational,
    bad_approx_constant_rational,
    cf_expand,
    dioph_sum,
    norm_h_alpha,
    parse_alpha,
)
from .errors import CircleWalkError, PrecisionExhausted, SpectralCorruption
from .mc import (
    SamplerConfig,
    clt_endpoints,
    functional_trajectory,
    lil_experiment,
    report_from_endpoints,
    sample_walk,
)
from .steps import StepDistribution, step_preset
from .variance import (
    DEFAULT_TRUNCATION,
    TestFunction,
    c_alpha,
    c_convergence_experiment,
    c_rational,
    expsum_second_moment,
    parse_test_function,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

#: slack used when counting bound violations in summary verdicts
VERDICT_SLACK = 1e-12


# ------------------------------------------------------------ config access


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ValueError(f"config key {key!r} is required for this command")
    return cfg[key]


def _check_keys(cfg: dict, allowed: Sequence[str]) -> None:
    extra = sorted(set(cfg) - set(allowed) - {"command", "out"})
    if extra:
        raise ValueError(f"unknown config keys: {', '.join(extra)}")


def _parse_step(cfg: dict) -> StepDistribution:
    return step_preset(_require(cfg, "step"))


def _parse_rational(cfg: dict) -> Rational:
    spec = _require(cfg, "rotation")
    if not isinstance(spec, str):
        raise ValueError("this command needs a rational rotation, e.g. \"55/89\"")
    return Rational.from_string(spec)


def _parse_irrational(cfg: dict) -> IrrationalNumber:
    spec = _require(cfg, "rotation")
    if not isinstance(spec, dict):
        raise ValueError(
            "this command needs an irrational rotation spec, e.g. {\"kind\": \"golden\"}"
        )
    return parse_alpha(spec)


def _parse_function(cfg: dict) -> TestFunction:
    spec = _require(cfg, "function")
    if not isinstance(spec, dict):
        raise ValueError("the test function spec must be an object with a \"kind\"")
    return parse_test_function(spec)


def _parse_size(cfg: dict, key: str, default: Optional[int] = None, low: int = 1) -> int:
    raw = cfg.get(key, default)
    if raw is None:
        raise ValueError(f"config key {key!r} is required for this command")
    value = int(raw)
    if value < low:
        raise ValueError(f"config key {key!r} must be >= {low}")
    return value


def _held(good: np.ndarray, label: str) -> str:
    return f"{label} held at {int(np.count_nonzero(good))}/{good.size} grid points"


# ----------------------------------------------------------------- commands


def _cmd_transition(cfg: dict, out: str) -> List[str]:
    _check_keys(cfg, ("step", "rotation", "k_grid"))
    sd = _parse_step(cfg)
    r = _parse_rational(cfg)
    k_grid = cfg.get("k_grid")
    scan = transition_scan(sd, r, k_grid)

    report.write_scan_csv(os.path.join(out, "transition.csv"), scan)
    report.write_json(os.path.join(out, "transition.json"), scan.meta)
    report.transition_figure(scan, os.path.join(out, "transition.png"))

    psi = scan.columns["psi_disc"]
    lower = np.fmax(scan.columns["lb_spectral"], np.nan_to_num(scan.columns["lb_atom"]))
    upper = scan.columns["be_bound"]
    return [
        _held(lower <= psi + VERDICT_SLACK, "lower bound"),
        _held(psi <= upper + VERDICT_SLACK, "upper bound"),
        f"regime split at k = {scan.meta['q'] ** 2}",
    ]


def _cmd_tv(cfg: dict, out: str) -> List[str]:
    _check_keys(cfg, ("step", "rotation", "k_grid"))
    sd = _parse_step(cfg)
    r = _parse_rational(cfg)
    scan = transition_scan(sd, r, cfg.get("k_grid"))

    report.write_tv_csv(os.path.join(out, "tv.csv"), scan)
    report.write_json(os.path.join(out, "tv.json"), scan.meta)
    report.tv_figure(scan, os.path.join(out, "tv.png"))

    tv = scan.columns["psi_tv"]
    return [
        _held(scan.columns["tv_lb"] <= tv + VERDICT_SLACK, "tv lower bound"),
        _held(tv <= scan.columns["tv_ub"] + VERDICT_SLACK, "tv upper bound"),
    ]


def _cmd_variance(cfg: dict, out: str) -> List[str]:
    _check_keys(cfg, ("step", "rotation", "function", "H"))
    sd = _parse_step(cfg)
    f = _parse_function(cfg)
    spec = _require(cfg, "rotation")

    if isinstance(spec, str):
        r = Rational.from_string(spec)
        value, tail = c_rational(f, sd, r), 0.0
        partials = [[r.q, value]]
        payload = {"rotation": spec, "value": value, "tail_bound": tail}
    else:
        alpha = parse_alpha(spec)
        H = _parse_size(cfg, "H", DEFAULT_TRUNCATION, low=2)
        value, tail = c_alpha(f, sd, alpha, H)
        partials = []
        h = 2
        while h < H:
            partials.append([h, c_alpha(f, sd, alpha, h)[0]])
            h *= 2
        partials.append([H, value])
        payload = {"rotation": spec, "value": value, "tail_bound": tail, "H": H}

    report.write_json(os.path.join(out, "variance.json"), payload)
    report.variance_figure(partials, value, os.path.join(out, "variance.png"))
    return [f"variance constant {value!r} with tail bracket {tail!r}"]


def _cmd_convergence(cfg: dict, out: str) -> List[str]:
    _check_keys(cfg, ("step", "rotation", "function", "m_range", "H"))
    sd = _parse_step(cfg)
    f = _parse_function(cfg)
    alpha = _parse_irrational(cfg)
    lo, hi = (int(v) for v in _require(cfg, "m_range"))
    H = _parse_size(cfg, "H", DEFAULT_TRUNCATION, low=2)

    rows = c_convergence_experiment(f, sd, alpha, range(lo, hi + 1), H)
    _, tail = c_alpha(f, sd, alpha, H)

    report.write_csv(
        os.path.join(out, "convergence.csv"),
        ("m", "q_m", "C_rational", "C_alpha", "gap"),
        ([row["m"], row["q_m"], row["c_rational"], row["c_alpha"], row["gap"]]
         for row in rows),
    )
    report.write_json(
        os.path.join(out, "convergence.json"),
        {"rows": rows, "tail_bound": tail, "H": H},
    )
    report.convergence_figure(rows, tail, os.path.join(out, "convergence.png"))

    gaps = np.array([row["gap"] for row in rows])
    threshold = tail if tail > 0.0 else 1e-3
    below = int(np.count_nonzero(gaps < threshold))
    mono = int(np.count_nonzero(gaps[1:] <= gaps[:-1] + VERDICT_SLACK))
    return [
        f"gap below reporting threshold at {below}/{gaps.size} convergents",
        f"gap nonincreasing at {mono}/{max(gaps.size - 1, 0)} adjacent pairs",
    ]


def _sampler_config(cfg: dict, sd: StepDistribution) -> SamplerConfig:
    return SamplerConfig(
        sd=sd,
        seed=_parse_size(cfg, "seed", 0, low=0),
        N=_parse_size(cfg, "N"),
        M=_parse_size(cfg, "M"),
    )


def _sigma_theory(
    f: TestFunction, sd: StepDistribution, alpha: IrrationalNumber, cfg: dict
) -> float:
    H = _parse_size(cfg, "H", DEFAULT_TRUNCATION, low=2)
    value, _ = c_alpha(f, sd, alpha, H)
    return math.sqrt(max(value, 0.0))


def _dump_trajectory(cfg: dict, run: SamplerConfig, f, alpha, out: str) -> None:
    replica = cfg.get("dump_trajectory")
    if replica is None:
        return
    traj = functional_trajectory(sample_walk(run, int(replica)), f, alpha)
    report.write_csv(
        os.path.join(out, "trajectory.csv"),
        ("k", "value"),
        ([k + 1, float(v)] for k, v in enumerate(traj)),
    )


def _cmd_clt(cfg: dict, out: str) -> List[str]:
    _check_keys(
        cfg,
        ("step", "rotation", "function", "N", "M", "seed", "H",
         "dump_endpoints", "dump_trajectory"),
    )
    sd = _parse_step(cfg)
    f = _parse_function(cfg)
    alpha = _parse_irrational(cfg)
    run = _sampler_config(cfg, sd)
    sigma = _sigma_theory(f, sd, alpha, cfg)

    endpoints = clt_endpoints(run, f, alpha)
    rep = report_from_endpoints(endpoints, run, sigma)

    report.write_json(os.path.join(out, "clt.json"), dataclasses.asdict(rep))
    report.clt_figure(endpoints, sigma, os.path.join(out, "clt.png"))
    if cfg.get("dump_endpoints"):
        report.write_csv(
            os.path.join(out, "endpoints.csv"),
            ("replica", "endpoint"),
            ([i, float(v)] for i, v in enumerate(endpoints)),
        )
    _dump_trajectory(cfg, run, f, alpha, out)

    ratio = rep.empirical_std / sigma if sigma > 0.0 else float("nan")
    return [
        f"ks distance {rep.ks_distance!r} against sigma {sigma!r}",
        f"std ratio {ratio!r} over {run.M} replicas",
    ]


def _default_checkpoints(N: int) -> List[int]:
    points = []
    c = 4
    while c <= N:
        points.append(c)
        c *= 2
    return points


def _cmd_lil(cfg: dict, out: str) -> List[str]:
    _check_keys(
        cfg,
        ("step", "rotation", "function", "N", "M", "seed", "H",
         "checkpoints", "dump_trajectory"),
    )
    sd = _parse_step(cfg)
    f = _parse_function(cfg)
    alpha = _parse_irrational(cfg)
    run = _sampler_config(cfg, sd)
    sigma = _sigma_theory(f, sd, alpha, cfg)
    checkpoints = cfg.get("checkpoints") or _default_checkpoints(run.N)

    result = lil_experiment(run, f, alpha, sigma, checkpoints)

    report.write_json(os.path.join(out, "lil.json"), result)
    report.lil_figure(result, os.path.join(out, "lil.png"))
    _dump_trajectory(cfg, run, f, alpha, out)

    lo, hi = result["band"]
    inside = "yes" if lo <= result["median"] <= hi else "no"
    return [
        f"median normalized maximum {result['median']!r} "
        f"inside band [{lo!r}, {hi!r}]: {inside}"
    ]


def _cmd_dioph(cfg: dict, out: str) -> List[str]:
    _check_keys(cfg, ("rotation", "H"))
    spec = _require(cfg, "rotation")
    H = _parse_size(cfg, "H", 512, low=2)

    if isinstance(spec, str):
        r = Rational.from_string(spec)
        if r.q < 2:
            raise ValueError("rational rotation needs q >= 2")
        hs = list(range(1, min(H, r.q // 2) + 1))
        norms = [abs((h * r.p) % r.q) for h in hs]
        norms = [min(m, r.q - m) / r.q for m in norms]
        payload = {
            "rotation": spec,
            "partial_quotients": list(cf_expand(r).quotients),
            "approximation_floor": bad_approx_constant_rational(r),
        }
    else:
        alpha = parse_alpha(spec)
        hs = list(range(1, H + 1))
        norms = [norm_h_alpha(alpha, h) for h in hs]
        payload = {
            "rotation": spec,
            "convergents": [[c.p, c.q] for c in alpha.convergents],
            "sum_power1": dioph_sum(alpha, H, 1),
            "sum_power2": dioph_sum(alpha, H, 2),
        }
    products = [h * n for h, n in zip(hs, norms)]
    floor = min(products) if products else None
    payload.update({"H": H, "observed_floor": floor})

    report.write_csv(
        os.path.join(out, "dioph.csv"),
        ("h", "norm", "h_times_norm"),
        ([h, n, pr] for h, n, pr in zip(hs, norms, products)),
    )
    report.write_json(os.path.join(out, "dioph.json"), payload)
    report.dioph_figure(hs, products, floor, os.path.join(out, "dioph.png"))
    return [f"approximation floor {floor!r} over frequencies up to {hs[-1]}"]


def _parse_coeffs(cfg: dict) -> Dict[int, complex]:
    raw = _require(cfg, "coeffs")
    coeffs: Dict[int, complex] = {}
    for item in raw:
        if not isinstance(item, (list, tuple)) or len(item) != 3:
            raise ValueError("coeffs entries must be [h, re, im] triples")
        h = int(item[0])
        if h in coeffs:
            raise ValueError(f"duplicate frequency {h} in coeffs")
        coeffs[h] = complex(float(item[1]), float(item[2]))
    return coeffs


def _cmd_expsum(cfg: dict, out: str) -> List[str]:
    _check_keys(cfg, ("step", "rotation", "coeffs", "M", "N", "mode"))
    sd = _parse_step(cfg)
    alpha = _parse_irrational(cfg)
    coeffs = _parse_coeffs(cfg)
    M = _parse_size(cfg, "M", 0, low=0)
    N = _parse_size(cfg, "N")
    mode = cfg.get("mode", "exact")

    value = expsum_second_moment(coeffs, sd, alpha, M, N, mode)
    rows = []
    n = 1
    while n < N:
        rows.append([n, expsum_second_moment(coeffs, sd, alpha, M, n, mode)])
        n *= 2
    rows.append([N, value])

    report.write_json(
        os.path.join(out, "expsum.json"),
        {"value": value, "mode": mode, "M": M, "N": N,
         "coeffs": [[h, c.real, c.imag] for h, c in sorted(coeffs.items())]},
    )
    report.write_csv(os.path.join(out, "expsum.csv"), ("N", "second_moment"), rows)
    report.expsum_figure(rows, os.path.join(out, "expsum.png"))
    return [f"second moment {value!r} over window length {N}"]


_COMMANDS: Dict[str, Callable[[dict, str], List[str]]] = {
    "transition": _cmd_transition,
    "tv": _cmd_tv,
    "variance": _cmd_variance,
    "convergence": _cmd_convergence,
    "clt": _cmd_clt,
    "lil": _cmd_lil,
    "dioph": _cmd_dioph,
    "expsum": _cmd_expsum,
}


# ------------------------------------------------------------------- driver


def run_config(config_path: str, out_dir: Optional[str], quiet: bool) -> int:
    """Execute one experiment config; returns the process exit code."""
    try:
        with open(config_path, "r", encoding="utf-8") as handle:
            cfg = json.load(handle)
        if not isinstance(cfg, dict):
            raise ValueError("config root must be a JSON object")
        command = cfg.get("command")
        handler = _COMMANDS.get(command)
        if handler is None:
            known = ", ".join(sorted(_COMMANDS))
            raise ValueError(f"unknown command {command!r}; expected one of {known}")
        out = out_dir or cfg.get("out") or "."
        os.makedirs(out, exist_ok=True)
        lines = handler(cfg, out)
    except (SpectralCorruption, PrecisionExhausted) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (CircleWalkError, ValueError, KeyError, TypeError) as exc:
        print(f"invalid config: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot run config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if not quiet:
        print(f"command: {cfg['command']}")
        print(f"artifacts written to: {os.path.abspath(out)}")
        for line in lines:
            print(line)
    return EXIT_OK


PRESETS_TEXT = """\
step distributions (config key "step"):
  "uniform12"      uniform on {1, 2}
  "uniform01"      uniform on {0, 1}
  "uniform13"      uniform on {1, 3} (span 2)
  {"kind": "uniform_range", "m": M}   uniform on {1..M}
  {"kind": "biased_pair", "p": P}     {1: 1-P, 2: P}
  [[value, probability], ...]         explicit atoms

rotation numbers (config key "rotation"):
  "p/q"                               reduced fraction, e.g. "55/89"
  {"kind": "golden"}                  (1+sqrt(5))/2 fractional part
  {"kind": "quadratic", "preperiod": [...], "period": [...]}
  {"kind": "fixed", "bits": "<hex>"}  literal fixed-point value (>= 96 bits)

test functions (config key "function"):
  {"kind": "sawtooth"}                centered fractional part
  {"kind": "cosine", "j": J}         cos(2 pi J x)
  {"kind": "sine", "j": J}           sin(2 pi J x)
  {"kind": "indicator", "a": A, "b": B}   centered indicator of [A, B)
  {"kind": "trigpoly", "coeffs": [[aJ, bJ], ...], "a0": C}

commands (config key "command"):
  transition, tv, variance, convergence, clt, lil, dioph, expsum
"""


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with the config exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _Parser(prog="circlewalk", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    run_p = sub.add_parser("run", help="execute one experiment config")
    run_p.add_argument("config", help="path to a JSON experiment config")
    run_p.add_argument("--out", default=None, help="output directory override")
    run_p.add_argument("--quiet", action="store_true", help="suppress the summary")

    sub.add_parser("presets", help="list built-in specs accepted in configs")

    args = parser.parse_args(argv)
    if args.subcommand == "presets":
        print(PRESETS_TEXT, end="")
        return EXIT_OK
    return run_config(args.config, args.out, args.quiet)


if __name__ == "__main__":
    raise SystemExit(main())
