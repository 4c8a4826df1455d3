"""Atomic CSV/JSON/PNG artifact writers for experiment runs.

Every writer stages the full payload to a temporary file in the
destination directory and renames it into place, so an interrupted run
never leaves a partial artifact.  PNG output strips the library version
stamp; re-running the same config produces byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import Iterable, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .cyclic import SCAN_COLUMNS, ScanResult

#: resolution for all saved figures
FIGURE_DPI = 130


# ------------------------------------------------------------- file staging


def _write_bytes(path: str, payload: bytes) -> None:
    """Write payload atomically: temp file in the target dir, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".stage-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(path: str, obj) -> None:
    """Serialize obj as pretty-printed JSON, atomically."""
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    _write_bytes(path, (text + "\n").encode("utf-8"))


def _cell(value) -> str:
    """CSV cell: full-precision repr; empty for missing (None / NaN)."""
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a header plus rows, atomically, with full float precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    _write_bytes(path, buf.getvalue().encode("utf-8"))


def save_figure(path: str, fig) -> None:
    """Render a figure to PNG atomically, without a version stamp."""
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=FIGURE_DPI, metadata={"Software": None})
    plt.close(fig)
    _write_bytes(path, buf.getvalue())


# ---------------------------------------------------------- scan serializers


def scan_rows(scan: ScanResult) -> Iterable[Sequence]:
    """Rows of the transition-scan CSV: k plus the documented columns."""
    for i, k in enumerate(scan.k_values):
        yield [k] + [float(scan.columns[name][i]) for name in SCAN_COLUMNS]


def write_scan_csv(path: str, scan: ScanResult) -> None:
    write_csv(path, ("k",) + SCAN_COLUMNS, scan_rows(scan))


def write_tv_csv(path: str, scan: ScanResult) -> None:
    rows = (
        [k, float(scan.columns["psi_tv"][i]), float(scan.columns["tv_lb"][i]),
         float(scan.columns["tv_ub"][i])]
        for i, k in enumerate(scan.k_values)
    )
    write_csv(path, ("k", "psi_tv", "tv_lb", "tv_ub"), rows)


# ----------------------------------------------------------------- figures


def _loglog_axes(ax, xlabel: str, ylabel: str) -> None:
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)


def transition_figure(scan: ScanResult, path: str) -> None:
    """Two panels: the metric sandwich and the normalized decay series."""
    ks = np.asarray(scan.k_values, dtype=np.float64)
    fig, (left, right) = plt.subplots(1, 2, figsize=(11.0, 4.4))

    left.plot(ks, scan.columns["psi_disc"], label="interval discrepancy", lw=1.6)
    left.plot(ks, scan.columns["be_bound"], label="spectral upper bound", lw=1.0)
    lower = np.fmax(scan.columns["lb_spectral"], scan.columns["lb_atom"])
    left.plot(ks, lower, label="lower bound", lw=1.0)
    _loglog_axes(left, "steps k", "distance to uniform")
    left.legend(fontsize=8)

    right.plot(ks, scan.columns["norm_poly"], label="sqrt(k)-normalized", lw=1.4)
    right.plot(ks, scan.columns["norm_exp"], label="rate-normalized", lw=1.4)
    right.axvline(scan.meta["q"] ** 2, color="gray", ls="--", lw=0.8)
    _loglog_axes(right, "steps k", "normalized series")
    right.legend(fontsize=8)

    fig.tight_layout()
    save_figure(path, fig)


def tv_figure(scan: ScanResult, path: str) -> None:
    """Total-variation distance inside its two-sided spectral bounds."""
    ks = np.asarray(scan.k_values, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.plot(ks, scan.columns["psi_tv"], label="total variation", lw=1.6)
    ax.plot(ks, scan.columns["tv_ub"], label="upper bound", lw=1.0)
    ax.plot(ks, scan.columns["tv_lb"], label="lower bound", lw=1.0)
    _loglog_axes(ax, "steps k", "distance to uniform")
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(path, fig)


def convergence_figure(rows: Sequence[dict], tail: float, path: str) -> None:
    """Gap of the rational constants to the limit, against denominator."""
    qs = [row["q_m"] for row in rows]
    gaps = [row["gap"] for row in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.plot(qs, gaps, "o-", lw=1.2, label="|rational - limit|")
    if tail > 0.0:
        ax.axhline(tail, color="gray", ls="--", lw=0.9, label="truncation bracket")
    _loglog_axes(ax, "denominator of convergent", "gap")
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(path, fig)


def variance_figure(
    partials: Sequence[Sequence[float]], value: float, path: str
) -> None:
    """Truncated constant against truncation size, with the final value."""
    hs = [row[0] for row in partials]
    vals = [row[1] for row in partials]
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.semilogx(hs, vals, "o-", lw=1.2, label="truncated constant")
    ax.axhline(value, color="gray", ls="--", lw=0.9, label="reported value")
    ax.set_xlabel("truncation size")
    ax.set_ylabel("variance constant")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(path, fig)


def clt_figure(endpoints: np.ndarray, sigma: float, path: str) -> None:
    """Endpoint histogram with the limiting normal density overlaid."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.hist(endpoints, bins=60, density=True, alpha=0.6, label="replicas")
    if sigma > 0.0:
        xs = np.linspace(float(endpoints.min()), float(endpoints.max()), 400)
        pdf = np.exp(-0.5 * (xs / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
        ax.plot(xs, pdf, lw=1.4, label="limit normal")
    ax.set_xlabel("normalized endpoint")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(path, fig)


def lil_figure(result: dict, path: str) -> None:
    """Per-replica normalized maxima against the reporting band."""
    maxima = np.asarray(result["maxima"], dtype=np.float64)
    lo, hi = result["band"]
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.plot(np.arange(maxima.size), np.sort(maxima), "o", ms=3, label="replica maxima")
    ax.axhspan(lo, hi, color="tab:orange", alpha=0.2, label="reporting band")
    ax.axhline(result["median"], color="gray", ls="--", lw=0.9, label="median")
    ax.set_xlabel("replica (sorted)")
    ax.set_ylabel("normalized running maximum")
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(path, fig)


def dioph_figure(
    hs: Sequence[int], products: Sequence[float], floor: Optional[float], path: str
) -> None:
    """h times the circle distance of h*alpha, with the observed floor."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.semilogx(hs, products, "o", ms=3, label="h * ||h alpha||")
    if floor is not None:
        ax.axhline(floor, color="gray", ls="--", lw=0.9, label="observed floor")
    ax.set_xlabel("frequency h")
    ax.set_ylabel("h * distance to nearest integer")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(path, fig)


def expsum_figure(rows: Sequence[Sequence[float]], path: str) -> None:
    """Second moment of the windowed exponential sum against window size."""
    ns = [row[0] for row in rows]
    vals = [row[1] for row in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.plot(ns, vals, "o-", lw=1.2, label="second moment")
    guide = [vals[-1] * n / ns[-1] for n in ns]
    ax.plot(ns, guide, ls="--", lw=0.9, color="gray", label="linear growth guide")
    _loglog_axes(ax, "window length N", "second moment")
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(path, fig)
