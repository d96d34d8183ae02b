"""Deterministic SVG views of agreement structure.

Four renderers cover the evaluation workflow: embedding scatters colored
by per-item agreement, item-by-k heatmaps, loess-smoothed agreement
surfaces, and lift plots of a profile against its chance baseline.  All
output is plain SVG 1.1 text built with fixed float formatting and
insertion-ordered attributes, so a given input always yields the same
bytes.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .agreement import AgreementProfile, psi
from .geometry import Configuration, _readonly

SVG_NS = "http://www.w3.org/2000/svg"

# diverging anchors: negative, neutral midpoint, positive
NEGATIVE_RGB = (255, 59, 48)
NEUTRAL_RGB = (255, 255, 255)
POSITIVE_RGB = (0, 122, 255)

# cycled per-technique colors for curves and categorical points
TECHNIQUE_RGB = (
    (0, 122, 255),
    (255, 149, 0),
    (52, 199, 89),
    (175, 82, 222),
    (255, 45, 85),
    (90, 200, 250),
)

FILL_OPACITY = 0.45

COLOR_MODES = ("absolute", "relative_to_random", "comparative")
CONFIG_SIDES = ("A", "B", "both")
COMPARISONS = ("simple", "compare")
EVAL_MODES = ("hard", "soft", "both")
AGGREGATIONS = ("all", "item")
PARAM_COUNTS = ("single", "multiple")


def _f(v) -> str:
    return "%.3f" % float(v)


def _hex(rgb) -> str:
    return "#%02x%02x%02x" % tuple(int(c) for c in rgb)


@dataclass(frozen=True)
class PlotStyle:
    """Canvas geometry and styling knobs shared by all renderers."""

    width: float = 480.0
    height: float = 360.0
    margin: float = 40.0
    point_radius: float = 3.0
    grid_resolution: int = 60
    loess_span: float = 0.75
    azimuth: float = 30.0
    elevation: float = 20.0

    def __post_init__(self):
        if self.width <= 2 * self.margin or self.height <= 2 * self.margin:
            raise ValueError("canvas too small for its margin")
        if self.grid_resolution < 2:
            raise ValueError("grid_resolution must be at least 2")
        if not 0 < self.loess_span <= 1:
            raise ValueError("loess_span must be in (0, 1]")


@dataclass(frozen=True)
class RenderSpec:
    """What to draw: sides, comparison mode, k range, and styling.

    ``eval_mode`` tags plots that show hard/soft rank movements; only the
    heatmap consumes it, and the other renderers reject a non-None value.
    """

    config_side: str = "both"
    comparison: str = "simple"
    eval_mode: str | None = None
    adjusted: bool = False
    range_k: tuple[int, ...] | None = None
    aggregation: str = "all"
    param: str = "single"
    style: PlotStyle = field(default_factory=PlotStyle)

    def __post_init__(self):
        if self.config_side not in CONFIG_SIDES:
            raise ValueError(f"config_side must be one of {CONFIG_SIDES}")
        if self.comparison not in COMPARISONS:
            raise ValueError(f"comparison must be one of {COMPARISONS}")
        if self.eval_mode is not None and self.eval_mode not in EVAL_MODES:
            raise ValueError(f"eval_mode must be one of {EVAL_MODES}")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        if self.param not in PARAM_COUNTS:
            raise ValueError(f"param must be one of {PARAM_COUNTS}")
        if self.range_k is not None:
            ks = tuple(int(k) for k in self.range_k)
            if not ks:
                raise ValueError("range_k must not be empty")
            if any(k < 1 for k in ks) or list(ks) != sorted(set(ks)):
                raise ValueError("range_k must be strictly increasing and >= 1")
            object.__setattr__(self, "range_k", ks)

    def resolved_range(self, n: int) -> tuple[int, ...]:
        """The k values to show, defaulting to all of 1..n-1."""
        if self.range_k is None:
            return tuple(range(1, n))
        if self.range_k[-1] > n - 1:
            raise ValueError(f"range_k exceeds n-1 = {n - 1}")
        return self.range_k


def _forbid_eval(spec: RenderSpec, plot: str) -> None:
    if spec.eval_mode is not None:
        raise ValueError(
            f"eval_mode applies to rank-movement heatmaps, not {plot} plots"
        )


class ColorScale:
    """Maps values to colors for one of the three coloring modes.

    ``absolute`` ramps from the neutral color to the positive anchor over
    the domain.  The two diverging modes pin 0 at the neutral midpoint,
    negative values toward the red anchor and positive toward the blue
    one.  Values outside the domain are clipped.
    """

    def __init__(self, mode: str, domain: tuple[float, float]):
        if mode not in COLOR_MODES:
            raise ValueError(f"mode must be one of {COLOR_MODES}")
        lo, hi = float(domain[0]), float(domain[1])
        if not np.isfinite([lo, hi]).all() or lo >= hi:
            raise ValueError("domain must be a finite increasing interval")
        if mode != "absolute" and (lo > 0 or hi < 0):
            raise ValueError("diverging domain must contain 0")
        self.mode = mode
        self.domain = (lo, hi)

    @classmethod
    def for_values(cls, mode: str, values) -> "ColorScale":
        """Pick a domain for the given values.

        Absolute agreement lives on [0, 1].  Diverging modes use a
        symmetric domain at the 98th percentile of the magnitudes so a
        stray outlier cannot wash out the palette; an all-zero field
        degenerates to a token interval that renders everything neutral.
        """
        if mode == "absolute":
            return cls(mode, (0.0, 1.0))
        v = np.asarray(values, dtype=float)
        span = float(np.percentile(np.abs(v), 98)) if v.size else 0.0
        if span <= 0:
            span = 1.0
        return cls(mode, (-span, span))

    def rgb(self, value: float) -> tuple[int, int, int]:
        lo, hi = self.domain
        v = min(max(float(value), lo), hi)
        if self.mode == "absolute":
            t = (v - lo) / (hi - lo)
            a, b = NEUTRAL_RGB, POSITIVE_RGB
        elif v < 0:
            t = 1.0 - v / lo
            a, b = NEGATIVE_RGB, NEUTRAL_RGB
        else:
            t = v / hi if hi > 0 else 0.0
            a, b = NEUTRAL_RGB, POSITIVE_RGB
        return tuple(int(round(a[i] + t * (b[i] - a[i]))) for i in range(3))

    def css(self, value: float) -> str:
        return _hex(self.rgb(value))


def _scale_for(spec: RenderSpec, values, binary: bool = False) -> ColorScale:
    if binary or spec.comparison == "compare":
        mode = "comparative"
    elif spec.adjusted:
        mode = "relative_to_random"
    else:
        mode = "absolute"
    if binary:
        return ColorScale("comparative", (-1.0, 1.0))
    return ColorScale.for_values(mode, values)


# ---------------------------------------------------------------------------
# SVG plumbing


def _svg_root(width: float, height: float) -> ET.Element:
    return ET.Element("svg", {
        "xmlns": SVG_NS,
        "version": "1.1",
        "width": _f(width),
        "height": _f(height),
        "viewBox": f"0 0 {_f(width)} {_f(height)}",
    })


def _rect(parent, x, y, w, h, fill, cls, extra=None):
    attrs = {"class": cls, "x": _f(x), "y": _f(y),
             "width": _f(w), "height": _f(h), "fill": fill}
    if extra:
        attrs.update(extra)
    return ET.SubElement(parent, "rect", attrs)


def _circle(parent, x, y, r, fill, cls, extra=None):
    attrs = {"class": cls, "cx": _f(x), "cy": _f(y), "r": _f(r), "fill": fill}
    if extra:
        attrs.update(extra)
    return ET.SubElement(parent, "circle", attrs)


def _text(parent, x, y, content, cls, anchor="start", size=12.0):
    el = ET.SubElement(parent, "text", {
        "class": cls, "x": _f(x), "y": _f(y),
        "font-family": "sans-serif", "font-size": _f(size),
        "text-anchor": anchor, "fill": "#333333",
    })
    el.text = content
    return el


def _points_attr(xy) -> str:
    return " ".join(f"{_f(x)},{_f(y)}" for x, y in xy)


def _to_svg(root: ET.Element) -> str:
    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"


def _strip_ns(el: ET.Element) -> None:
    for node in el.iter():
        if "}" in node.tag:
            node.tag = node.tag.split("}", 1)[1]


def _data_transform(points, rect, equal_axes=True):
    """Affine map from data coordinates into a screen rectangle.

    Screen y runs downward, so the data y axis is flipped.  With
    ``equal_axes`` both axes share one scale, preserving shape.
    """
    x0, y0, w, h = rect
    pts = np.asarray(points, dtype=float)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = hi - lo
    span[span <= 0] = 1.0
    if equal_axes:
        s = min(w / span[0], h / span[1])
        sx = sy = s
    else:
        sx, sy = w / span[0], h / span[1]
    cx, cy = (lo + hi) / 2.0
    mx, my = x0 + w / 2.0, y0 + h / 2.0

    def to_screen(p):
        p = np.asarray(p, dtype=float)
        return np.column_stack([
            mx + (p[:, 0] - cx) * sx,
            my - (p[:, 1] - cy) * sy,
        ])

    return to_screen


def _project_3d(points, azimuth_deg: float, elevation_deg: float):
    """Orthographic projection onto a screen plane.

    Azimuth rotates the viewpoint around the third axis; elevation tilts
    it above the first-two-axes plane.
    """
    az = np.deg2rad(azimuth_deg)
    el = np.deg2rad(elevation_deg)
    p = np.asarray(points, dtype=float)
    u = -np.sin(az) * p[:, 0] + np.cos(az) * p[:, 1]
    v = (-np.cos(az) * np.sin(el) * p[:, 0]
         - np.sin(az) * np.sin(el) * p[:, 1]
         + np.cos(el) * p[:, 2])
    return np.column_stack([u, v])


def _as_planar(config: Configuration, style: PlotStyle):
    if config.m == 2:
        return config.items
    if config.m == 3:
        return _project_3d(config.items, style.azimuth, style.elevation)
    raise ValueError(
        f"embeddings must have 2 or 3 dimensions, got {config.m}"
    )


def _check_values(values, n: int):
    v = np.asarray(values, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"expected {n} item values, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError("item values must be finite")
    return v


# ---------------------------------------------------------------------------
# Scatter


def render_scatter(embeddings, item_values, spec: RenderSpec | None = None) -> str:
    """One or two embedding panels with items colored by a value field.

    In ``compare`` mode the values are read as technique-1-minus-
    technique-2 differences on a diverging scale, so blue marks items
    where the first technique agrees more.  A caption under each panel
    carries the aggregate of the plotted values.
    """
    spec = spec or RenderSpec()
    _forbid_eval(spec, "scatter")
    if isinstance(embeddings, Configuration):
        panels = [embeddings]
    else:
        panels = list(embeddings)
        if not 1 <= len(panels) <= 2:
            raise ValueError("expected one or two embeddings")
    if len(panels) == 2:
        if spec.config_side == "A":
            panels = panels[:1]
        elif spec.config_side == "B":
            panels = panels[1:]
    n = panels[0].n
    for p in panels:
        if p.n != n:
            raise ValueError("embeddings must have the same item count")
    vals = _check_values(item_values, n)
    scale = _scale_for(spec, vals)

    st = spec.style
    caption_h = 24.0
    root = _svg_root(st.width * len(panels), st.height + caption_h)
    label = "mean difference" if spec.comparison == "compare" else "mean agreement"
    for idx, config in enumerate(panels):
        planar = _as_planar(config, st)
        ox = idx * st.width
        rect = (ox + st.margin, st.margin,
                st.width - 2 * st.margin, st.height - 2 * st.margin)
        to_screen = _data_transform(planar, rect)
        xy = to_screen(planar)
        group = ET.SubElement(root, "g", {"class": "panel"})
        for i in range(n):
            _circle(group, xy[i, 0], xy[i, 1], st.point_radius,
                    scale.css(vals[i]), "pt")
        _text(group, ox + st.width / 2.0, st.height + caption_h / 2.0,
              f"{label} = {_f(vals.mean())}", "caption", anchor="middle")
    return _to_svg(root)


# ---------------------------------------------------------------------------
# Heatmap


def order_by_first_coordinate(config: Configuration) -> tuple[int, ...]:
    """Default heatmap row order: ascending first embedding coordinate."""
    return tuple(int(i) for i in np.argsort(config.items[:, 0], kind="stable"))


def render_heatmap(per_item_by_k, item_order=None,
                   spec: RenderSpec | None = None, binary: bool = False) -> str:
    """Item-by-k agreement map, one cell per (item, k) pair.

    ``binary`` replaces each cell by the sign of its value before
    coloring: blue when the first technique wins, red when the second
    does, neutral on ties.
    """
    spec = spec or RenderSpec()
    vals = np.asarray(per_item_by_k, dtype=float)
    if vals.ndim != 2 or vals.size == 0:
        raise ValueError("per_item_by_k must be a non-empty 2D array")
    if not np.isfinite(vals).all():
        raise ValueError("per_item_by_k must be finite")
    n, n_cols = vals.shape
    if spec.range_k is None:
        ks = tuple(range(1, n_cols + 1))
    else:
        ks = spec.range_k
    if len(ks) != n_cols:
        raise ValueError(
            f"range_k has {len(ks)} entries but the matrix has {n_cols} columns"
        )
    if item_order is None:
        order = np.arange(n)
    else:
        order = np.asarray(item_order, dtype=int)
        if sorted(order.tolist()) != list(range(n)):
            raise ValueError("item_order must be a permutation of all items")
    if binary:
        vals = np.sign(vals)
    scale = _scale_for(spec, vals, binary=binary)

    st = spec.style
    root = _svg_root(st.width, st.height)
    plot_w = st.width - 2 * st.margin
    plot_h = st.height - 2 * st.margin
    cw = plot_w / n_cols
    ch = plot_h / n
    grid = ET.SubElement(root, "g", {"class": "cells"})
    for row, item in enumerate(order):
        for col in range(n_cols):
            _rect(grid, st.margin + col * cw, st.margin + row * ch,
                  cw, ch, scale.css(vals[item, col]), "cell")
    legend = ET.SubElement(root, "g", {"class": "legend"})
    k_label = f"k = {ks[0]}..{ks[-1]}"
    if spec.eval_mode is not None:
        k_label += f" ({spec.eval_mode} movements)"
    _text(legend, st.margin + plot_w / 2.0, st.height - st.margin / 4.0,
          k_label, "axis", anchor="middle")
    _text(legend, st.margin + plot_w / 2.0, st.margin * 0.6,
          f"mean = {_f(vals.mean())}", "caption", anchor="middle")
    return _to_svg(root)


# ---------------------------------------------------------------------------
# Loess


@dataclass(frozen=True)
class LoessSurface:
    """Fitted values on a regular grid over the point cloud's bounding box.

    ``values[row, col]`` is the fit at ``(xs[col], ys[row])``; ``fallback``
    flags nodes where a degenerate local design forced a weighted mean.
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    fallback: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xs", _readonly(self.xs, float))
        object.__setattr__(self, "ys", _readonly(self.ys, float))
        object.__setattr__(self, "values", _readonly(self.values, float))
        object.__setattr__(self, "fallback", _readonly(self.fallback, bool))
        g = (self.ys.size, self.xs.size)
        if self.values.shape != g or self.fallback.shape != g:
            raise ValueError("grid shapes are inconsistent")


def loess_surface(points, values, span: float = 0.75,
                  grid: int = 60) -> LoessSurface:
    """Locally weighted linear fit of a value field over 2D positions.

    Each grid node is fit from its ceil(span*n) nearest points under
    tri-cube weights, so the furthest support point carries weight zero;
    a zero support radius degenerates to uniform weights.  Nodes whose
    local design is rank-deficient (collinear support) fall back to the
    weighted mean and are flagged.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an n x 2 array")
    n = pts.shape[0]
    if n < 10:
        raise ValueError("loess needs at least 10 points")
    if not 0 < span <= 1:
        raise ValueError("span must be in (0, 1]")
    if grid < 2:
        raise ValueError("grid must be at least 2")
    vals = _check_values(values, n)
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")

    q = int(np.ceil(span * n))
    xs = np.linspace(pts[:, 0].min(), pts[:, 0].max(), grid)
    ys = np.linspace(pts[:, 1].min(), pts[:, 1].max(), grid)
    out = np.empty((grid, grid))
    fell_back = np.zeros((grid, grid), dtype=bool)
    for row, gy in enumerate(ys):
        for col, gx in enumerate(xs):
            dx = pts[:, 0] - gx
            dy = pts[:, 1] - gy
            d = np.hypot(dx, dy)
            sel = np.argsort(d, kind="stable")[:q]
            d_max = d[sel[-1]]
            if d_max > 0:
                w = np.clip(1.0 - (d[sel] / d_max) ** 3, 0.0, None) ** 3
            else:
                w = np.ones(q)
            sw = np.sqrt(w)
            design = np.column_stack([np.ones(q), dx[sel], dy[sel]])
            coef, _, rank, _ = np.linalg.lstsq(
                design * sw[:, None], vals[sel] * sw, rcond=None
            )
            if rank == 3:
                out[row, col] = coef[0]
            else:
                out[row, col] = np.average(vals[sel], weights=w) \
                    if w.sum() > 0 else vals[sel].mean()
                fell_back[row, col] = True
    return LoessSurface(xs, ys, out, fell_back)


def render_loess_overlay(embedding: Configuration, item_values,
                         spec: RenderSpec | None = None,
                         categories=None) -> str:
    """Smoothed agreement surface with the items drawn on top.

    Every point gets a black outline so it reads against the surface.
    When ``categories`` is given, points take categorical colors instead
    of the agreement scale; the surface always shows the value field.
    """
    spec = spec or RenderSpec()
    _forbid_eval(spec, "loess")
    if embedding.m != 2:
        raise ValueError("loess overlay requires a 2D embedding")
    n = embedding.n
    vals = _check_values(item_values, n)
    st = spec.style
    surface = loess_surface(embedding.items, vals,
                            span=st.loess_span, grid=st.grid_resolution)
    scale = _scale_for(spec, vals)

    root = _svg_root(st.width, st.height)
    rect = (st.margin, st.margin, st.width - 2 * st.margin,
            st.height - 2 * st.margin)
    to_screen = _data_transform(embedding.items, rect)
    g = surface.xs.size
    nodes = np.array([[surface.xs[c], surface.ys[r]]
                      for r in range(g) for c in range(g)])
    centers = to_screen(nodes)
    # cell size from the first grid step, clamped for degenerate clouds
    if g > 1:
        step = centers.reshape(g, g, 2)
        cw = abs(float(step[0, 1, 0] - step[0, 0, 0])) or 1.0
        ch = abs(float(step[1, 0, 1] - step[0, 0, 1])) or 1.0
    else:
        cw = ch = 1.0
    surf = ET.SubElement(root, "g", {"class": "surface"})
    flat = surface.values.reshape(-1)
    for i in range(g * g):
        _rect(surf, centers[i, 0] - cw / 2.0, centers[i, 1] - ch / 2.0,
              cw, ch, scale.css(flat[i]), "surf")

    if categories is not None:
        cats = list(categories)
        if len(cats) != n:
            raise ValueError(f"expected {n} categories, got {len(cats)}")
        seen: dict = {}
        for c in cats:
            if c not in seen:
                seen[c] = TECHNIQUE_RGB[len(seen) % len(TECHNIQUE_RGB)]
        fills = [_hex(seen[c]) for c in cats]
    else:
        fills = [scale.css(v) for v in vals]
    xy = to_screen(embedding.items)
    marks = ET.SubElement(root, "g", {"class": "points"})
    for i in range(n):
        _circle(marks, xy[i, 0], xy[i, 1], st.point_radius, fills[i], "pt",
                extra={"stroke": "#000000", "stroke-width": _f(0.75)})
    _text(root, st.width / 2.0, st.height - st.margin / 4.0,
          f"mean agreement = {_f(vals.mean())}", "caption", anchor="middle")
    return _to_svg(root)


# ---------------------------------------------------------------------------
# Lift


def lift_area(profile: AgreementProfile) -> float:
    """Trapezoid area between a profile's curve and its chance baseline.

    Only the part of the curve above the baseline counts, matching the
    positive terms of the adjusted-agreement sum.
    """
    gain = np.maximum(profile.ar_adjusted, 0.0)
    return float((gain[:-1] + gain[1:]).sum() / 2.0)


def full_lift_area(n: int) -> float:
    """Lift area of a perfect profile, the ceiling for any technique."""
    k = np.arange(1, n)
    gain = 1.0 - k / (n - 1)
    return float((gain[:-1] + gain[1:]).sum() / 2.0)


def render_lift(profiles, spec: RenderSpec | None = None) -> str:
    """Agreement-vs-k curves with the region above chance filled in.

    ``profiles`` maps technique names to profiles sharing one n.  Each
    curve's gap over the dashed baseline k/(n-1) is shaded in that
    technique's color at fixed opacity; where several curves cover the
    same region the shade is their blended color.  The legend reports
    each technique's all-k agreement summary.
    """
    spec = spec or RenderSpec()
    _forbid_eval(spec, "lift")
    if isinstance(profiles, Mapping):
        named = list(profiles.items())
    elif isinstance(profiles, AgreementProfile):
        named = [("technique 1", profiles)]
    else:
        named = list(profiles)
    if not named:
        raise ValueError("at least one profile is required")
    n = named[0][1].n
    for name, prof in named:
        if prof.n != n:
            raise ValueError(
                f"profile {name!r} has n = {prof.n}, expected {n}"
            )
    if n < 3:
        raise ValueError("lift plots need n >= 3")

    st = spec.style
    caption_h = 20.0 * len(named)
    root = _svg_root(st.width, st.height + caption_h)
    x0, y0 = st.margin, st.margin
    plot_w = st.width - 2 * st.margin
    plot_h = st.height - 2 * st.margin

    ks = np.arange(1, n)
    base = ks / (n - 1)

    def sx(k):
        return x0 + (k - 1) / (n - 2) * plot_w

    def sy(v):
        return y0 + (1.0 - v) * plot_h

    colors = [TECHNIQUE_RGB[i % len(TECHNIQUE_RGB)] for i in range(len(named))]
    gains = np.stack([np.maximum(p.ar_adjusted, 0.0) for _, p in named])

    bands = ET.SubElement(root, "g", {"class": "bands"})
    t_count = len(named)
    for i in range(n - 2):
        left = gains[:, i]
        right = gains[:, i + 1]
        # stack techniques by their height on the left edge
        order = sorted(range(t_count), key=lambda t: (-left[t], t))
        l_sorted = [left[t] for t in order] + [0.0]
        r_sorted = sorted(right, reverse=True) + [0.0]
        for depth in range(t_count):
            l_hi, l_lo = l_sorted[depth], l_sorted[depth + 1]
            r_hi, r_lo = r_sorted[depth], r_sorted[depth + 1]
            if l_hi - l_lo <= 0 and r_hi - r_lo <= 0:
                continue
            covering = [colors[t] for t in order[:depth + 1]]
            blend = np.mean(covering, axis=0)
            pts = [
                (sx(ks[i]), sy(base[i] + l_hi)),
                (sx(ks[i + 1]), sy(base[i + 1] + r_hi)),
                (sx(ks[i + 1]), sy(base[i + 1] + r_lo)),
                (sx(ks[i]), sy(base[i] + l_lo)),
            ]
            ET.SubElement(bands, "polygon", {
                "class": "band",
                "points": _points_attr(pts),
                "fill": _hex(blend),
                "fill-opacity": _f(FILL_OPACITY),
            })

    ET.SubElement(root, "polyline", {
        "class": "baseline",
        "points": _points_attr((sx(k), sy(b)) for k, b in zip(ks, base)),
        "fill": "none",
        "stroke": "#777777",
        "stroke-dasharray": "4 3",
    })
    for (name, prof), rgb in zip(named, colors):
        ET.SubElement(root, "polyline", {
            "class": "curve",
            "points": _points_attr((sx(k), sy(v)) for k, v in zip(ks, prof.ar)),
            "fill": "none",
            "stroke": _hex(rgb),
            "stroke-width": _f(1.5),
        })
    legend = ET.SubElement(root, "g", {"class": "legend"})
    for idx, ((name, prof), rgb) in enumerate(zip(named, colors)):
        y = st.height + 14.0 + 20.0 * idx
        _rect(legend, x0, y - 9.0, 12.0, 12.0, _hex(rgb), "swatch")
        _text(legend, x0 + 18.0, y + 1.0,
              f"{name}: all-k agreement = {_f(psi(prof))}", "caption")
    _text(root, x0 + plot_w / 2.0, st.height - st.margin / 4.0,
          "k", "axis", anchor="middle")
    return _to_svg(root)


# ---------------------------------------------------------------------------
# Composition


def compose_panels(panels: Sequence[str], columns: int | None = None) -> str:
    """Lay out finished SVG documents side by side in a grid."""
    if not panels:
        raise ValueError("no panels to compose")
    roots = []
    for text in panels:
        el = ET.fromstring(text)
        _strip_ns(el)
        el.attrib.pop("xmlns", None)
        roots.append(el)
    cols = columns or len(roots)
    if cols < 1:
        raise ValueError("columns must be positive")
    widths = [float(r.get("width")) for r in roots]
    heights = [float(r.get("height")) for r in roots]
    rows = -(-len(roots) // cols)
    col_w = max(widths)
    row_h = max(heights)
    outer = _svg_root(col_w * min(cols, len(roots)), row_h * rows)
    for idx, el in enumerate(roots):
        el.set("x", _f((idx % cols) * col_w))
        el.set("y", _f((idx // cols) * row_h))
        outer.append(el)
    return _to_svg(outer)
