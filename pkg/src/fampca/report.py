"""Static SVG plots: score scatters, per-individual scree curves, heatmaps.

Everything renders into a fixed 800x600 viewBox with deterministic output:
no timestamps, fixed element ordering, coordinates formatted to two decimal
places, so identical inputs give byte-identical documents. The categorical
palette has ten colors (PALETTE); scree curves use the family-size colors
black (singletons), red (pairs), green (trios), blue (quads), falling back
to the palette for larger families.
"""

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import ParseError, UnknownId
from .io import read_family_groups, read_matrix_csv, read_scores_csv, read_strata

WIDTH = 800
HEIGHT = 600
PLOT_LEFT = 70.0
PLOT_RIGHT = 775.0
PLOT_TOP = 45.0
PLOT_BOTTOM = 540.0

PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)
SIZE_CLASS_COLORS = {1: "black", 2: "red", 3: "green", 4: "blue"}

KINDS = ("scatter", "scree", "heatmap")


@dataclass(frozen=True)
class PlotSpec:
    """What to draw and from which files.

    scores is the data CSV (score columns for scatter, per-individual
    curves for scree); table is the labeled matrix CSV for heatmaps.
    highlight is either "size-class" (needs families) or a family id to
    single out in red. x and y are 1-based component indices.
    """

    kind: str
    scores: str = None
    strata: str = None
    families: str = None
    table: str = None
    x: int = 1
    y: int = 2
    highlight: str = None
    title: str = None
    xlabel: str = None
    ylabel: str = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParseError(f"unknown plot kind {self.kind!r}")
        if self.kind in ("scatter", "scree") and self.scores is None:
            raise ParseError(f"{self.kind} plot needs a scores file")
        if self.kind == "heatmap" and self.table is None:
            raise ParseError("heatmap plot needs a table file")
        if self.highlight is not None and self.families is None:
            raise ParseError("highlight coloring needs a families file")


def render(spec):
    """PlotSpec -> complete SVG document (str)."""
    if spec.kind == "scatter":
        return _render_scatter(spec)
    if spec.kind == "scree":
        return _render_scree(spec)
    return _render_heatmap(spec)


def _num(v):
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _pad_range(lo, hi):
    if lo == hi:
        lo -= 0.5
        hi += 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _x_scale(lo, hi):
    span = hi - lo
    return lambda v: PLOT_LEFT + (v - lo) * (PLOT_RIGHT - PLOT_LEFT) / span


def _y_scale(lo, hi):
    span = hi - lo
    return lambda v: PLOT_BOTTOM - (v - lo) * (PLOT_BOTTOM - PLOT_TOP) / span


def _open_svg(title):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH // 2}" y="28" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{escape(title)}</text>'
        )
    return parts


def _axes(parts, xlo, xhi, ylo, yhi, xlabel, ylabel):
    sx = _x_scale(xlo, xhi)
    sy = _y_scale(ylo, yhi)
    parts.append(
        f'<rect x="{_num(PLOT_LEFT)}" y="{_num(PLOT_TOP)}" '
        f'width="{_num(PLOT_RIGHT - PLOT_LEFT)}" '
        f'height="{_num(PLOT_BOTTOM - PLOT_TOP)}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    for v in np.linspace(xlo, xhi, 5):
        px = sx(v)
        parts.append(
            f'<line x1="{_num(px)}" y1="{_num(PLOT_BOTTOM)}" '
            f'x2="{_num(px)}" y2="{_num(PLOT_BOTTOM + 5)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_num(px)}" y="{_num(PLOT_BOTTOM + 18)}" '
            'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"{escape(f'{v:.4g}')}</text>"
        )
    for v in np.linspace(ylo, yhi, 5):
        py = sy(v)
        parts.append(
            f'<line x1="{_num(PLOT_LEFT - 5)}" y1="{_num(py)}" '
            f'x2="{_num(PLOT_LEFT)}" y2="{_num(py)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_num(PLOT_LEFT - 8)}" y="{_num(py + 4)}" '
            'text-anchor="end" font-family="sans-serif" font-size="11">'
            f"{escape(f'{v:.4g}')}</text>"
        )
    if xlabel:
        parts.append(
            f'<text x="{_num((PLOT_LEFT + PLOT_RIGHT) / 2)}" '
            f'y="{_num(PLOT_BOTTOM + 40)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{escape(xlabel)}</text>'
        )
    if ylabel:
        cx = _num(22.0)
        cy = _num((PLOT_TOP + PLOT_BOTTOM) / 2)
        parts.append(
            f'<text x="{cx}" y="{cy}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 {cx} {cy})">{escape(ylabel)}</text>'
        )
    return sx, sy


def _legend(parts, entries):
    """entries: list of (label, color), drawn top-right inside the box."""
    x = PLOT_RIGHT - 130.0
    y = PLOT_TOP + 12.0
    for label, color in entries:
        parts.append(
            f'<rect x="{_num(x)}" y="{_num(y - 8)}" width="10" height="10" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_num(x + 15)}" y="{_num(y + 1)}" '
            f'font-family="sans-serif" font-size="11">{escape(label)}</text>'
        )
        y += 16.0


def _size_class_color(size):
    if size in SIZE_CLASS_COLORS:
        return SIZE_CLASS_COLORS[size]
    return PALETTE[size % len(PALETTE)]


def _point_colors(spec, ids):
    """Per-point colors plus legend entries, honoring spec.highlight."""
    n = len(ids)
    if spec.highlight is not None:
        fam, groups = read_family_groups(spec.families, ids)
        if spec.highlight == "size-class":
            size_of = fam.size_class()
            colors = [
                _size_class_color(int(s) if s else 1) for s in size_of
            ]
            sizes = sorted({len(m) for m in fam.families})
            legend = [("singleton", "black")]
            legend += [(f"family of {s}", _size_class_color(s)) for s in sizes]
            return colors, legend
        if spec.highlight not in groups:
            raise UnknownId(f"family id {spec.highlight!r} not in {spec.families}")
        members = set(groups[spec.highlight])
        colors = ["red" if j in members else "black" for j in range(n)]
        return colors, [(spec.highlight, "red"), ("other", "black")]
    if spec.strata is not None:
        labels = read_strata(spec.strata, ids)
        order = {lab: i for i, lab in enumerate(sorted(set(labels)))}
        colors = [PALETTE[order[lab] % len(PALETTE)] for lab in labels]
        legend = [(lab, PALETTE[i % len(PALETTE)]) for lab, i in sorted(order.items())]
        return colors, legend
    return ["black"] * n, []


def _render_scatter(spec):
    ids, scores = read_scores_csv(spec.scores)
    k = scores.shape[1]
    for axis in (spec.x, spec.y):
        if not 1 <= axis <= max(k, 1):
            raise ParseError(f"component {axis} out of range 1..{k}")
    title = spec.title or f"Scores: component {spec.x} vs {spec.y}"
    parts = _open_svg(title)
    if scores.shape[0]:
        xs = scores[:, spec.x - 1]
        ys = scores[:, spec.y - 1]
        xlo, xhi = _pad_range(float(xs.min()), float(xs.max()))
        ylo, yhi = _pad_range(float(ys.min()), float(ys.max()))
    else:
        xs = ys = np.empty(0)
        xlo, xhi = _pad_range(0.0, 1.0)
        ylo, yhi = _pad_range(0.0, 1.0)
    sx, sy = _axes(
        parts,
        xlo,
        xhi,
        ylo,
        yhi,
        spec.xlabel or f"component {spec.x}",
        spec.ylabel or f"component {spec.y}",
    )
    colors, legend = _point_colors(spec, ids)
    for j in range(xs.size):
        parts.append(
            f'<circle cx="{_num(sx(xs[j]))}" cy="{_num(sy(ys[j]))}" r="3" '
            f'fill="{colors[j]}" fill-opacity="0.75"/>'
        )
    _legend(parts, legend)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _render_scree(spec):
    ids, curves = read_scores_csv(spec.scores)
    n, k = curves.shape
    title = spec.title or "Individual scree curves"
    parts = _open_svg(title)
    if n and k:
        xlo, xhi = _pad_range(1.0, float(k))
        ylo, yhi = _pad_range(float(curves.min()), float(curves.max()))
    else:
        xlo, xhi = _pad_range(1.0, 2.0)
        ylo, yhi = _pad_range(0.0, 1.0)
    sx, sy = _axes(
        parts,
        xlo,
        xhi,
        ylo,
        yhi,
        spec.xlabel or "component",
        spec.ylabel or "log10 squared projection",
    )
    if spec.families is not None:
        fam, _ = read_family_groups(spec.families, ids)
        sizes = [int(s) if s else 1 for s in fam.size_class()]
    else:
        sizes = [1] * n
    legend_sizes = sorted(set(sizes))
    legend = [
        ("singleton", "black") if s == 1 else (f"family of {s}", _size_class_color(s))
        for s in legend_sizes
    ]
    # singletons first so family curves draw on top of the black mass
    order = sorted(range(n), key=lambda j: (sizes[j], j))
    xs = np.arange(1, k + 1, dtype=np.float64)
    for j in order:
        pts = " ".join(
            f"{_num(sx(xs[c]))},{_num(sy(curves[j, c]))}" for c in range(k)
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" '
            f'stroke="{_size_class_color(sizes[j])}" stroke-width="1" '
            'stroke-opacity="0.8"/>'
        )
    _legend(parts, legend)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _heat_color(t):
    """Two-segment blue -> near-white -> red map, t in [0, 1]."""
    lo = (0x21, 0x66, 0xAC)
    mid = (0xF7, 0xF7, 0xF7)
    hi = (0xB2, 0x18, 0x2B)
    if t <= 0.5:
        a, b, u = lo, mid, t * 2.0
    else:
        a, b, u = mid, hi, (t - 0.5) * 2.0
    rgb = tuple(round(x + (y - x) * u) for x, y in zip(a, b))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _render_heatmap(spec):
    row_labels, col_labels, values = read_matrix_csv(spec.table)
    title = spec.title or "Metric heatmap"
    parts = _open_svg(title)
    parts.append(
        f'<rect x="{_num(PLOT_LEFT)}" y="{_num(PLOT_TOP)}" '
        f'width="{_num(PLOT_RIGHT - PLOT_LEFT)}" '
        f'height="{_num(PLOT_BOTTOM - PLOT_TOP)}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    n_r, n_c = len(row_labels), len(col_labels)
    if n_r and n_c:
        finite = values[np.isfinite(values)]
        vlo = float(finite.min()) if finite.size else 0.0
        vhi = float(finite.max()) if finite.size else 1.0
        span = vhi - vlo
        cw = (PLOT_RIGHT - PLOT_LEFT) / n_c
        ch = (PLOT_BOTTOM - PLOT_TOP) / n_r
        for r in range(n_r):
            for c in range(n_c):
                v = values[r, c]
                if np.isfinite(v):
                    t = 0.5 if span == 0.0 else (v - vlo) / span
                    fill = _heat_color(t)
                else:
                    fill = "#cccccc"
                x0 = PLOT_LEFT + c * cw
                y0 = PLOT_TOP + r * ch
                parts.append(
                    f'<rect x="{_num(x0)}" y="{_num(y0)}" width="{_num(cw)}" '
                    f'height="{_num(ch)}" fill="{fill}" stroke="white" '
                    'stroke-width="0.5"/>'
                )
                if np.isfinite(v):
                    parts.append(
                        f'<text x="{_num(x0 + cw / 2)}" y="{_num(y0 + ch / 2 + 3)}" '
                        'text-anchor="middle" font-family="sans-serif" '
                        f'font-size="10">{escape(f"{v:.3g}")}</text>'
                    )
        for r, label in enumerate(row_labels):
            parts.append(
                f'<text x="{_num(PLOT_LEFT - 8)}" '
                f'y="{_num(PLOT_TOP + r * ch + ch / 2 + 4)}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11">{escape(label)}</text>'
            )
        for c, label in enumerate(col_labels):
            cx = _num(PLOT_LEFT + c * cw + cw / 2)
            cy = _num(PLOT_BOTTOM + 14)
            parts.append(
                f'<text x="{cx}" y="{cy}" text-anchor="end" '
                f'font-family="sans-serif" font-size="10" '
                f'transform="rotate(-30 {cx} {cy})">{escape(label)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
