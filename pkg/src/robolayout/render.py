"""SVG drawings of layouts and trajectory storyboards."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .core import ARM, BELT, Scene
from .motion import Trajectories
from .netmodel import Layout

ARM_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728")  # blue, orange, ...
BELT_COLOR = "#9467bd"  # purple
JUNCTION_COLOR = "#555555"
SCALE = 60.0  # pixels per meter
PAD = 0.6


class _Canvas:
    def __init__(self, lo, hi, scale=SCALE, pad=PAD, x_offset=0.0):
        self.lo = (lo[0] - pad, lo[1] - pad)
        self.hi = (hi[0] + pad, hi[1] + pad)
        self.scale = scale
        self.x_offset = x_offset

    @property
    def width(self):
        return (self.hi[0] - self.lo[0]) * self.scale

    @property
    def height(self):
        return (self.hi[1] - self.lo[1]) * self.scale

    def xy(self, p):
        x = (p[0] - self.lo[0]) * self.scale + self.x_offset
        y = (self.hi[1] - p[1]) * self.scale
        return f"{x:.2f}", f"{y:.2f}"


def _bounds(scene: Scene, layout: Layout | None = None):
    pts = [scene.floor_min, scene.floor_max, scene.input] + [o.pos for o in scene.outputs]
    xs, ys = zip(*pts)
    return (min(xs), min(ys)), (max(xs), max(ys))


def _floor(cv: _Canvas, scene: Scene) -> list[str]:
    x0, y1 = cv.xy(scene.floor_min)
    x1, y0 = cv.xy(scene.floor_max)
    w = float(x1) - float(x0)
    h = float(y1) - float(y0)
    out = [f'<rect class="floor" x="{x0}" y="{y0}" width="{w:.2f}" height="{h:.2f}" '
           'fill="#f7f7f7" stroke="#cccccc"/>']
    x, y = cv.xy(scene.input)
    out.append(f'<rect class="io" x="{float(x) - 6:.2f}" y="{float(y) - 6:.2f}" width="12" '
               'height="12" fill="#222222"><title>in</title></rect>')
    for i, o in enumerate(scene.outputs):
        x, y = cv.xy(o.pos)
        out.append(f'<rect class="io" x="{float(x) - 6:.2f}" y="{float(y) - 6:.2f}" width="12" '
                   f'height="12" fill="none" stroke="#222222" stroke-width="2">'
                   f'<title>out{i + 1}</title></rect>')
    return out


def render_layout(scene: Scene, layout: Layout, show_paths: bool = True) -> str:
    """One ``class="element"`` glyph per selected element, plus floor, io and paths."""
    lo, hi = _bounds(scene, layout)
    cv = _Canvas(lo, hi)
    arm_types = [t.id for t in scene.catalog if t.kind == ARM]
    parts = _floor(cv, scene)
    centers = {"in": scene.input}
    centers.update({f"out{i + 1}": o.pos for i, o in enumerate(scene.outputs)})
    glyphs = []
    for label, el in layout.elements.items():
        title = f"<title>{escape(label)}</title>"
        if el.kind == ARM:
            k = arm_types.index(el.type) if el.type in arm_types else 0
            color = ARM_COLORS[k % len(ARM_COLORS)]
            x, y = cv.xy(el.point)
            glyphs.append(f'<circle class="element" data-kind="arm" cx="{x}" cy="{y}" r="9" '
                          f'fill="{color}">{title}</circle>')
            centers[label] = el.point
        elif el.kind == BELT:
            x1, y1 = cv.xy(el.point)
            x2, y2 = cv.xy(el.end)
            glyphs.append(f'<line class="element" data-kind="belt" x1="{x1}" y1="{y1}" x2="{x2}" '
                          f'y2="{y2}" stroke="{BELT_COLOR}" stroke-width="7" '
                          f'stroke-linecap="round">{title}</line>')
            centers[label] = tuple((np.asarray(el.point) + el.end) / 2)
        else:
            x, y = cv.xy(el.point)
            glyphs.append(f'<rect class="element" data-kind="{el.kind}" x="{float(x) - 5:.2f}" '
                          f'y="{float(y) - 5:.2f}" width="10" height="10" '
                          f'fill="{JUNCTION_COLOR}">{title}</rect>')
            centers[label] = el.point
    if show_paths:
        for i, path in enumerate(layout.paths):
            pts = [centers[v] for v in path if v in centers]
            coords = " ".join(",".join(cv.xy(p)) for p in pts)
            parts.append(f'<polyline class="path" data-box="{i + 1}" points="{coords}" fill="none" '
                         'stroke="#444444" stroke-dasharray="4 3" stroke-width="1"/>')
    parts += glyphs
    return _svg(cv.width, cv.height, parts)


def render_storyboard(scene: Scene, layout: Layout, traj: Trajectories, every: int = 10) -> str:
    """Side-by-side frames of the arm chains, one every ``every`` time steps."""
    lo, hi = _bounds(scene, layout)
    p = traj.problem
    steps = list(range(0, p.n + 1, max(1, every)))
    if steps[-1] != p.n:
        steps.append(p.n)
    frame_w = (hi[0] - lo[0] + 2 * PAD) * SCALE
    parts = []
    for k, t in enumerate(steps):
        cv = _Canvas(lo, hi, x_offset=k * frame_w)
        parts.append(f'<g class="frame" data-step="{t}">')
        parts += _floor(cv, scene)
        for b in p.belts:
            x1, y1 = cv.xy(b.start)
            x2, y2 = cv.xy(b.end)
            parts.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{BELT_COLOR}" '
                         'stroke-width="5"/>')
        for arm in p.arms:
            q = traj.joints(arm.name)[t]
            pts = [arm.base] + [tuple(arm.chain_point(q[None, :], j, 1.0)[0][0]) for j in range(3)]
            coords = " ".join(",".join(cv.xy(pt)) for pt in pts)
            parts.append(f'<polyline class="arm" points="{coords}" fill="none" '
                         f'stroke="{ARM_COLORS[0]}" stroke-width="3"/>')
        x, y = cv.xy((lo[0], hi[1]))
        parts.append(f'<text x="{x}" y="{float(y) - 8:.2f}" font-size="12">t={t}</text>')
        parts.append("</g>")
    return _svg(frame_w * len(steps), (hi[1] - lo[1] + 2 * PAD) * SCALE, parts)


def _svg(width, height, parts) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
            f'viewBox="0 0 {width:.2f} {height:.2f}">')
    return "\n".join([head, *parts, "</svg>"]) + "\n"


def count_elements(svg: str) -> int:
    return svg.count('class="element"')
