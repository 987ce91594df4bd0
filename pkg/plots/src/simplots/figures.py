"""Figure rendering over the simulator's CSV logs.

The coupling boundary is the file format, nothing else: per-frame logs
(``frame_id,encode_ms,latency_ms,lost,...`` with ``#`` comment headers) and
summary rows (``stack,cc,mean_latency_ms,p95_latency_ms,accuracy,
mean_bitrate_kbps``, optionally prefixed by ``axis,value`` for sweeps).

Five figure kinds:

* ``latency_bar``    - mean latency per summary row
* ``latency_cdf``    - latency distribution per frame log
* ``accuracy_curve`` - accuracy vs. swept value, one line per stack
* ``qoe_scatter``    - accuracy vs. mean latency, one point per summary row
* ``overhead_bar``   - mean sent bitrate per summary row

Rendering is idempotent: fixed style, no timestamps, same inputs give the
same image.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("latency_bar", "latency_cdf", "accuracy_curve", "qoe_scatter", "overhead_bar")

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "svg.hashsalt": "simplots",
}


class SchemaError(ValueError):
    """Input CSV does not carry the columns the figure kind needs."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")

    def label_for(self, index: int, fallback: str) -> str:
        if index < len(self.labels):
            return self.labels[index]
        return fallback


def _read_rows(path) -> list[dict]:
    if not os.path.exists(path):
        raise SchemaError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _need(rows: list[dict], path, *columns) -> None:
    have = set(rows[0].keys())
    missing = [c for c in columns if c not in have]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}; "
                          f"found {', '.join(sorted(have))}")


def read_frame_latencies(path) -> np.ndarray:
    """Delivered-frame latencies from a per-frame log."""
    rows = _read_rows(path)
    _need(rows, path, "latency_ms", "lost")
    vals = [float(r["latency_ms"]) for r in rows
            if r["lost"] == "0" and r["latency_ms"] != ""]
    if not vals:
        raise SchemaError(f"{path}: no delivered frames to plot")
    return np.asarray(vals)


def read_summary(path, *columns) -> list[dict]:
    rows = _read_rows(path)
    _need(rows, path, *columns)
    return rows


def compute_cdf(values) -> tuple[np.ndarray, np.ndarray]:
    """Empirical CDF: nondecreasing, ends at exactly 1.0."""
    xs = np.sort(np.asarray(values, dtype=float))
    ys = np.arange(1, len(xs) + 1) / len(xs)
    return xs, ys


def _summary_label(row: dict) -> str:
    label = row.get("stack", "?")
    if row.get("value"):
        label += f" @{row['value']}"
    return label


def _float_or_none(text):
    return float(text) if text not in ("", None) else None


def _render_latency_bar(spec, ax):
    labels, values = [], []
    for i, path in enumerate(spec.inputs):
        for row in read_summary(path, "stack", "mean_latency_ms"):
            lat = _float_or_none(row["mean_latency_ms"])
            if lat is None:
                continue
            labels.append(spec.label_for(i, _summary_label(row)))
            values.append(lat)
    if not values:
        raise SchemaError("no mean_latency_ms values found in the inputs")
    ax.bar(range(len(values)), values, color="tab:blue")
    ax.set_xticks(range(len(values)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("mean frame latency (ms)")


def _render_latency_cdf(spec, ax):
    for i, path in enumerate(spec.inputs):
        xs, ys = compute_cdf(read_frame_latencies(path))
        stem = os.path.splitext(os.path.basename(path))[0]
        ax.step(xs, ys, where="post", label=spec.label_for(i, stem))
    ax.set_xlabel("frame latency (ms)")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.02)
    ax.legend()


def _render_accuracy_curve(spec, ax):
    for i, path in enumerate(spec.inputs):
        rows = read_summary(path, "stack", "accuracy", "value")
        by_stack: dict[str, list] = {}
        for row in rows:
            acc = _float_or_none(row["accuracy"])
            if acc is None:
                continue
            by_stack.setdefault(row["stack"], []).append((float(row["value"]), acc))
        if not by_stack:
            raise SchemaError(f"{path}: no accuracy values to plot")
        for stack, pts in sorted(by_stack.items()):
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=stack)
    ax.set_xlabel("bitrate (kbps)")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.02)
    ax.legend()


def _render_qoe_scatter(spec, ax):
    markers = "osd^v<>*"
    k = 0
    for i, path in enumerate(spec.inputs):
        for row in read_summary(path, "stack", "mean_latency_ms", "accuracy"):
            lat = _float_or_none(row["mean_latency_ms"])
            acc = _float_or_none(row["accuracy"])
            if lat is None or acc is None:
                continue
            ax.scatter([lat], [acc], marker=markers[k % len(markers)], s=60,
                       label=spec.label_for(i, _summary_label(row)))
            k += 1
    if k == 0:
        raise SchemaError("no (mean_latency_ms, accuracy) pairs found in the inputs")
    ax.set_xlabel("mean frame latency (ms)")
    ax.set_ylabel("accuracy")
    ax.legend(fontsize=8)


def _render_overhead_bar(spec, ax):
    labels, values = [], []
    for i, path in enumerate(spec.inputs):
        for row in read_summary(path, "stack", "mean_bitrate_kbps"):
            kbps = _float_or_none(row["mean_bitrate_kbps"])
            if kbps is None:
                continue
            labels.append(spec.label_for(i, _summary_label(row)))
            values.append(kbps)
    if not values:
        raise SchemaError("no mean_bitrate_kbps values found in the inputs")
    ax.bar(range(len(values)), values, color="tab:orange")
    ax.set_xticks(range(len(values)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("mean sent bitrate (kbps)")


_RENDERERS = {
    "latency_bar": _render_latency_bar,
    "latency_cdf": _render_latency_cdf,
    "accuracy_curve": _render_accuracy_curve,
    "qoe_scatter": _render_qoe_scatter,
    "overhead_bar": _render_overhead_bar,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; raises :class:`SchemaError` before any file is
    written when inputs do not fit the kind."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            _RENDERERS[spec.kind](spec, ax)
            fig.tight_layout()
            metadata = {"Date": None} if spec.output.endswith(".svg") else None
            fig.savefig(spec.output, metadata=metadata)
        finally:
            plt.close(fig)
    return spec.output
