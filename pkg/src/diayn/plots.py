"""Plain SVG plots from record files; no plotting library, no timestamps."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import InputError
from .records import read_records

KINDS = ("trace", "histogram", "curve", "heatmap")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf")
W, H, M = 640, 420, 56


@dataclass
class PlotSpec:
    kind: str
    input: str
    output: str
    x: str = "t"
    y: str = "value"
    group: str | None = None
    value: str = "value"  # cell colour for heatmaps
    xlabel: str | None = None
    ylabel: str | None = None
    title: str = ""
    bins: int = 20

    def validate(self):
        if self.kind not in KINDS:
            raise InputError(f"plot kind must be one of {KINDS}, got {self.kind!r}")
        if not os.path.exists(self.input):
            raise InputError(f"record file {self.input!r} does not exist")
        if self.bins < 1:
            raise InputError("bins must be >= 1")
        return self


def _range(values):
    lo, hi = float(np.min(values)), float(np.max(values))
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InputError("plotted values must be finite")
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


class _Canvas:
    def __init__(self, xr, yr, spec):
        self.xr, self.yr = xr, yr
        self.parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
                      f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>']
        self._axes(spec)

    def px(self, x):
        return M + (x - self.xr[0]) / (self.xr[1] - self.xr[0]) * (W - 2 * M)

    def py(self, y):
        return H - M - (y - self.yr[0]) / (self.yr[1] - self.yr[0]) * (H - 2 * M)

    def _axes(self, spec):
        p = self.parts
        p.append(f'<line x1="{M}" y1="{H - M}" x2="{W - M}" y2="{H - M}" stroke="black"/>')
        p.append(f'<line x1="{M}" y1="{M}" x2="{M}" y2="{H - M}" stroke="black"/>')
        for v, anchor, x, y in ((self.xr[0], "start", M, H - M + 16), (self.xr[1], "end", W - M, H - M + 16)):
            p.append(f'<text x="{x}" y="{y}" font-size="11" text-anchor="{anchor}">{v:.4g}</text>')
        for v, y in ((self.yr[0], H - M), (self.yr[1], M)):
            p.append(f'<text x="{M - 4}" y="{y}" font-size="11" text-anchor="end">{v:.4g}</text>')
        xl = escape(spec.xlabel if spec.xlabel is not None else spec.x)
        yl = escape(spec.ylabel if spec.ylabel is not None else spec.y)
        p.append(f'<text x="{W / 2:.1f}" y="{H - 12}" font-size="13" text-anchor="middle">{xl}</text>')
        p.append(f'<text x="16" y="{H / 2:.1f}" font-size="13" text-anchor="middle" '
                 f'transform="rotate(-90 16 {H / 2:.1f})">{yl}</text>')
        if spec.title:
            p.append(f'<text x="{W / 2:.1f}" y="24" font-size="15" text-anchor="middle">{escape(spec.title)}</text>')

    def polyline(self, xs, ys, colour):
        pts = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')

    def rect(self, x0, y0, x1, y1, colour, opacity=1.0):
        left, right = sorted((self.px(x0), self.px(x1)))
        top, bottom = sorted((self.py(y0), self.py(y1)))
        self.parts.append(f'<rect x="{left:.2f}" y="{top:.2f}" width="{right - left:.2f}" '
                          f'height="{bottom - top:.2f}" fill="{colour}" fill-opacity="{opacity:.2f}"/>')

    def legend(self, names):
        for i, name in enumerate(names):
            y = M + 14 * i
            self.parts.append(f'<rect x="{W - M + 6}" y="{y - 8}" width="8" height="8" '
                              f'fill="{PALETTE[i % len(PALETTE)]}"/>')
            self.parts.append(f'<text x="{W - M + 18}" y="{y}" font-size="10">{escape(str(name))}</text>')

    def svg(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _column(records, name, path):
    try:
        return np.array([float(r[name]) for r in records])
    except KeyError:
        raise InputError(f"{path}: no field {name!r}") from None
    except (TypeError, ValueError):
        raise InputError(f"{path}: field {name!r} is not numeric") from None


def _groups(records, spec):
    if spec.group is None:
        return [("all", records)]
    keys = []
    for r in records:
        if spec.group not in r:
            raise InputError(f"{spec.input}: no field {spec.group!r}")
        if r[spec.group] not in keys:
            keys.append(r[spec.group])
    return [(k, [r for r in records if r[spec.group] == k]) for k in sorted(keys, key=str)]


def render(spec):
    """SVG text for ``spec``."""
    spec.validate()
    records = read_records(spec.input)
    if not records:
        raise InputError(f"{spec.input}: no records to plot")
    groups = _groups(records, spec)
    if spec.kind in ("trace", "curve"):
        xs = _column(records, spec.x, spec.input)
        ys = _column(records, spec.y, spec.input)
        c = _Canvas(_range(xs), _range(ys), spec)
        for i, (_, rows) in enumerate(groups):
            c.polyline(_column(rows, spec.x, spec.input), _column(rows, spec.y, spec.input),
                       PALETTE[i % len(PALETTE)])
    elif spec.kind == "histogram":
        vals = _column(records, spec.y, spec.input)
        edges = np.linspace(*_range(vals), spec.bins + 1)
        counts = [np.histogram(_column(rows, spec.y, spec.input), edges)[0] for _, rows in groups]
        c = _Canvas((edges[0], edges[-1]), (0.0, float(max(1, max(h.max() for h in counts)))),
                    PlotSpec(**{**spec.__dict__, "x": spec.y, "y": "count",
                                "xlabel": spec.xlabel, "ylabel": spec.ylabel or "count"}))
        for i, h in enumerate(counts):
            for j, n in enumerate(h):
                if n:
                    c.rect(edges[j], 0.0, edges[j + 1], float(n), PALETTE[i % len(PALETTE)], 0.5)
    else:
        xs = _column(records, spec.x, spec.input)
        ys = _column(records, spec.y, spec.input)
        vs = _column(records, spec.value, spec.input)
        ux, uy = np.unique(xs), np.unique(ys)
        dx = float(np.min(np.diff(ux))) if len(ux) > 1 else 1.0
        dy = float(np.min(np.diff(uy))) if len(uy) > 1 else 1.0
        c = _Canvas((ux[0] - dx / 2, ux[-1] + dx / 2), (uy[0] - dy / 2, uy[-1] + dy / 2), spec)
        lo, hi = _range(vs)
        for x, y, v in zip(xs, ys, vs):
            level = int(round(255 * (1.0 - (v - lo) / (hi - lo))))
            c.rect(x - dx / 2, y - dy / 2, x + dx / 2, y + dy / 2, f"#{level:02x}{level:02x}ff")
    if spec.group is not None and spec.kind != "heatmap":
        c.legend([k for k, _ in groups])
    return c.svg()


def export_plot(spec):
    """Write the SVG for ``spec`` to ``spec.output`` and return the path."""
    text = render(spec)
    os.makedirs(os.path.dirname(os.path.abspath(spec.output)), exist_ok=True)
    with open(spec.output, "w", encoding="utf-8") as fh:
        fh.write(text)
    return spec.output
