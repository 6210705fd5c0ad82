"""Deterministic SVG charts: scent heatmaps, trajectory panels, success curves.

Everything is emitted as plain SVG text so output bytes depend only on the
input data.  No plotting library is used.
"""

import warnings
from pathlib import Path

import numpy as np

from .geometry import Arena
from .scent import ScentField

MAX_HEATMAP_CELLS = 40_000
PANEL_PX = 320
MARGIN_PX = 36

# Color anchors for the heatmap ramp, chosen so r+g+b increases strictly
# with intensity (the brightest pixel is always the largest value).
RAMP = ((68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37))
SOLID_COLOR = "#222222"
HEAT_STRETCH = 0.3  # power applied to normalized values so dim regions show

PARTICLE_COLOR = "#1f77b4"
FOOD_COLOR = "#d62728"


def _num(v) -> str:
    """Fixed-precision pixel coordinate, stable across runs."""
    s = f"{float(v):.2f}"
    return "0.00" if s == "-0.00" else s


def ramp_color(t: float) -> str:
    """Hex color for t in [0, 1] along the intensity ramp."""
    t = min(max(float(t), 0.0), 1.0)
    pos = t * (len(RAMP) - 1)
    k = min(int(pos), len(RAMP) - 2)
    frac = pos - k
    rgb = [round(a + (b - a) * frac) for a, b in zip(RAMP[k], RAMP[k + 1])]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


class WorldTransform:
    """Maps world (x, y) to SVG pixels; y is flipped so up stays up."""

    def __init__(self, bounds, px_width=640, margin=MARGIN_PX):
        self.margin = margin
        self.scale = (px_width - 2 * margin) / bounds.width
        self.width = px_width
        self.height = 2 * margin + bounds.height * self.scale
        self._x0 = bounds.lo.x
        self._y1 = bounds.hi.y

    def to_px(self, x, y):
        return (self.margin + (x - self._x0) * self.scale,
                self.margin + (self._y1 - y) * self.scale)


def _svg_open(width, height, parts):
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" '
        f'height="{_num(height)}" viewBox="0 0 {_num(width)} {_num(height)}">')
    parts.append(f'<rect width="{_num(width)}" height="{_num(height)}" fill="#ffffff"/>')


def _rect_el(x, y, w, h, fill, extra=""):
    return (f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(w)}" '
            f'height="{_num(h)}" fill="{fill}"{extra}/>')


def _frame(tf, parts, arena: Arena | None):
    # frame around the world bounds
    w = tf.width - 2 * tf.margin
    h = tf.height - 2 * tf.margin
    parts.append(f'<rect x="{_num(tf.margin)}" y="{_num(tf.margin)}" width="{_num(w)}" '
                 f'height="{_num(h)}" fill="none" stroke="#000000" stroke-width="1"/>')
    if arena is not None:
        for ob in arena.obstacles:
            px, py = tf.to_px(ob.lo.x, ob.hi.y)
            parts.append(_rect_el(px, py, ob.width * tf.scale, ob.height * tf.scale,
                                  SOLID_COLOR, ' class="obstacle"'))


def render_heatmap(field: ScentField, px_width=840) -> str:
    """SVG heatmap of a scent field; solid cells are drawn dark."""
    nx, ny = field.nx, field.ny
    # coarsen so at most MAX_HEATMAP_CELLS blocks are emitted
    factor = 1
    while (-(-nx // factor)) * (-(-ny // factor)) > MAX_HEATMAP_CELLS:
        factor += 1
    bx = -(-nx // factor)
    by = -(-ny // factor)

    vals = np.where(field.fluid, field.values, 0.0)
    vmax = float(vals.max())
    scale_px = (px_width - 2 * MARGIN_PX) / (nx * field.spacing)
    height = 2 * MARGIN_PX + ny * field.spacing * scale_px

    parts = []
    _svg_open(px_width, height, parts)
    for bi in range(bx):
        i0, i1 = bi * factor, min((bi + 1) * factor, nx)
        for bj in range(by):
            j0, j1 = bj * factor, min((bj + 1) * factor, ny)
            flu = field.fluid[i0:i1, j0:j1]
            if flu.any():
                mean = float(vals[i0:i1, j0:j1][flu].mean())
                t = (mean / vmax) ** HEAT_STRETCH if vmax > 0 else 0.0
                fill = ramp_color(t)
                cls = ' class="hm"'
            else:
                fill = SOLID_COLOR
                cls = ' class="solid"'
            px = MARGIN_PX + i0 * field.spacing * scale_px
            py = MARGIN_PX + (ny - j1) * field.spacing * scale_px
            w = (i1 - i0) * field.spacing * scale_px
            h = (j1 - j0) * field.spacing * scale_px
            parts.append(_rect_el(px, py, w, h, fill, cls))

    # outline any obstacles and mark the source region
    ox, oy = field.origin
    if field.arena is not None:
        for ob in field.arena.obstacles:
            px = MARGIN_PX + (ob.lo.x - ox) * scale_px
            py = MARGIN_PX + ((oy + ny * field.spacing) - ob.hi.y) * scale_px
            parts.append(f'<rect x="{_num(px)}" y="{_num(py)}" '
                         f'width="{_num(ob.width * scale_px)}" '
                         f'height="{_num(ob.height * scale_px)}" fill="none" '
                         f'stroke="#ffffff" stroke-width="1" class="obstacle"/>')
    if field.source is not None and field.source.any():
        xs, ys = field.cell_centers()
        xg, yg = np.meshgrid(xs, ys, indexing="ij")
        mask = field.source > 0
        cx = float(xg[mask].mean())
        cy = float(yg[mask].mean())
        px = MARGIN_PX + (cx - ox) * scale_px
        py = MARGIN_PX + ((oy + ny * field.spacing) - cy) * scale_px
        parts.append(f'<circle cx="{_num(px)}" cy="{_num(py)}" r="5" fill="none" '
                     f'stroke="#ffffff" stroke-width="1.5" class="food"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def pick_instants(times, requested=None, count=4):
    """Times to draw: the requested instants, or `count` evenly spaced ones."""
    times = list(times)
    if requested is None:
        lo, hi = times[0], times[-1]
        requested = [lo + (hi - lo) * k / (count - 1) for k in range(count)]
    picked = []
    for t in requested:
        idx = min(range(len(times)), key=lambda k: (abs(times[k] - t), k))
        picked.append(idx)
    return picked


def render_trajectories(samples, instants=None, arena: Arena | None = None,
                        food_center=None) -> str:
    """Panel-per-instant snapshots of school positions.

    `samples` is a list of states as produced by `advance`; each panel shows
    one sampled time with a dot per fish (class="particle").
    """
    if not samples:
        raise ValueError("no states to draw")
    if arena is None:
        # fall back to the tight bounding box of everything drawn
        allpos = np.concatenate([s.positions for s in samples])
        lo = allpos.min(axis=0) - 0.2
        hi = allpos.max(axis=0) + 0.2
        from .geometry import AxisRect, Vec2
        bounds = AxisRect(Vec2(lo[0], lo[1]), Vec2(hi[0], hi[1]))
        obstacles_arena = None
    else:
        bounds = arena.bounds
        obstacles_arena = arena

    idxs = pick_instants([s.time for s in samples], instants)
    cols = 2 if len(idxs) > 1 else 1
    rows = -(-len(idxs) // cols)
    tf = WorldTransform(bounds, px_width=PANEL_PX + 2 * MARGIN_PX)
    total_w = cols * tf.width
    total_h = rows * tf.height

    parts = []
    _svg_open(total_w, total_h, parts)
    for slot, idx in enumerate(idxs):
        state = samples[idx]
        dx = (slot % cols) * tf.width
        dy = (slot // cols) * tf.height
        parts.append(f'<g transform="translate({_num(dx)},{_num(dy)})" class="panel">')
        _frame(tf, parts, obstacles_arena)
        if food_center is not None:
            fx, fy = tf.to_px(food_center.x, food_center.y)
            parts.append(f'<circle cx="{_num(fx)}" cy="{_num(fy)}" r="4" fill="none" '
                         f'stroke="{FOOD_COLOR}" stroke-width="1.5" class="food"/>')
        for pos in state.positions:
            px, py = tf.to_px(pos[0], pos[1])
            parts.append(f'<circle cx="{_num(px)}" cy="{_num(py)}" r="3" '
                         f'fill="{PARTICLE_COLOR}" class="particle"/>')
        label_y = tf.height - MARGIN_PX / 3
        parts.append(f'<text x="{_num(tf.width / 2)}" y="{_num(label_y)}" '
                     f'font-family="sans-serif" font-size="12" text-anchor="middle">'
                     f't = {state.time:g}</text>')
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_success_curve(points, px_width=560, px_height=400) -> str | None:
    """Success probability against school size; None if there are no points."""
    points = sorted(points, key=lambda p: p.n_fish)
    if not points:
        warnings.warn("sweep result is empty, no success curve to draw")
        return None
    m = MARGIN_PX + 8
    plot_w = px_width - 2 * m
    plot_h = px_height - 2 * m
    ns = [p.n_fish for p in points]
    n_lo, n_hi = min(ns), max(ns)
    span = max(n_hi - n_lo, 1)

    def to_px(n, prob):
        return (m + (n - n_lo) / span * plot_w, m + (1.0 - prob) * plot_h)

    parts = []
    _svg_open(px_width, px_height, parts)
    parts.append(f'<rect x="{_num(m)}" y="{_num(m)}" width="{_num(plot_w)}" '
                 f'height="{_num(plot_h)}" fill="none" stroke="#000000" stroke-width="1"/>')
    for frac in (0.25, 0.5, 0.75):
        gy = m + (1.0 - frac) * plot_h
        parts.append(f'<line x1="{_num(m)}" y1="{_num(gy)}" x2="{_num(m + plot_w)}" '
                     f'y2="{_num(gy)}" stroke="#cccccc" stroke-width="0.5"/>')
        parts.append(f'<text x="{_num(m - 6)}" y="{_num(gy + 4)}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="end">{frac:g}</text>')
    for label, frac in (("0", 0.0), ("1", 1.0)):
        gy = m + (1.0 - frac) * plot_h
        parts.append(f'<text x="{_num(m - 6)}" y="{_num(gy + 4)}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="end">{label}</text>')
    if len(points) > 1:
        coords = " ".join("{},{}".format(_num(px), _num(py))
                          for px, py in (to_px(p.n_fish, p.success_probability)
                                         for p in points))
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{PARTICLE_COLOR}" stroke-width="1.5" class="curve"/>')
    for p in points:
        px, py = to_px(p.n_fish, p.success_probability)
        parts.append(f'<circle cx="{_num(px)}" cy="{_num(py)}" r="3.5" '
                     f'fill="{PARTICLE_COLOR}" class="prob-point"/>')
        parts.append(f'<text x="{_num(px)}" y="{_num(m + plot_h + 16)}" '
                     f'font-family="sans-serif" font-size="11" '
                     f'text-anchor="middle">{p.n_fish}</text>')
    parts.append(f'<text x="{_num(px_width / 2)}" y="{_num(px_height - 6)}" '
                 f'font-family="sans-serif" font-size="12" text-anchor="middle">'
                 f'school size</text>')
    parts.append(f'<text x="14" y="{_num(px_height / 2)}" font-family="sans-serif" '
                 f'font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 14 {_num(px_height / 2)})">success probability</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(text: str, path, force=False):
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; pass force to overwrite")
    path.write_text(text)
    return path
