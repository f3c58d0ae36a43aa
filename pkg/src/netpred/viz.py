"""Network drawings with predictability rings: layout, SVG and DOT output."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from netpred.rng import make_rng

RING_BLUE = "#90B4D4"
MARGINAL_ORANGE = "#ffa500"
EXTRA_RED = "#ff4300"
POSITIVE = "#1a9641"
NEGATIVE = "#d7191c"
UNSIGNED = "#9e9e9e"
RING_TRACK = "#eeeeee"


class Edge(NamedTuple):
    source: int
    target: int
    weight: float
    sign: int = 0
    directed: bool = False
    self_loop: bool = False


@dataclass
class RenderedGraph:
    coordinates: np.ndarray
    edges: list
    rings: list
    labels: list
    directed: bool = False

    def __post_init__(self):
        self.coordinates = np.asarray(self.coordinates, dtype=float).reshape(-1, 2)
        p = len(self.labels)
        if len(self.coordinates) != p or len(self.rings) != p:
            raise ValueError("coordinates, rings and labels must have one entry per node")
        for i, segs in enumerate(self.rings):
            fr = [f for f, _ in segs]
            if any(f < 0 or f > 1 for f in fr) or sum(fr) > 1 + 1e-12:
                raise ValueError(f"ring fractions of node {i} must lie in [0, 1] and sum to at most 1")
        for e in self.edges:
            if e.self_loop and not self.directed:
                raise ValueError("self-loops are only drawn for directed graphs")
            if e.weight < 0:
                raise ValueError("edge weights are non-negative; the sign is separate")


def spring_layout(wadj, iterations: int = 500, seed: int = 0) -> np.ndarray:
    """Fruchterman-Reingold layout inside the unit frame.

    Nodes repel with ``k^2/d`` and edges attract with ``w d^2/k`` (weights
    scaled to a maximum of 1, ``k = sqrt(1/p)``). Moves are capped by a
    temperature that cools linearly from 0.1 to 0 and positions are kept in
    the frame, which is finally mapped onto ``[0.1, 0.9]^2``.
    """
    W = np.abs(np.asarray(wadj, dtype=float))
    W = np.maximum(W, W.T)
    np.fill_diagonal(W, 0.0)
    p = W.shape[0]
    if p == 0:
        return np.empty((0, 2))
    if p == 1:
        return np.array([[0.5, 0.5]])
    if W.max() > 0:
        W = W / W.max()
    pos = make_rng(seed).random((p, 2))
    k = math.sqrt(1.0 / p)
    temp = 0.1
    dt = temp / (iterations + 1)
    for _ in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta ** 2).sum(axis=-1))
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, 1e-6)
        force = k * k / dist ** 2 - W * dist / k
        np.fill_diagonal(force, 0.0)
        disp = (delta * force[:, :, None]).sum(axis=1)
        length = np.sqrt((disp ** 2).sum(axis=1))
        scale = np.where(length > 0, np.minimum(length, temp) / np.where(length > 0, length, 1.0), 0.0)
        pos = np.clip(pos + disp * scale[:, None], 0.0, 1.0)
        temp -= dt
    return 0.1 + 0.8 * pos


def build_rings(report, colors: Optional[dict] = None) -> list:
    """Ring segments per node from a predictability report.

    Continuous nodes get one blue segment of size R2. Categorical nodes get
    the intercept-model accuracy in orange followed by the additional
    accuracy ``CC - CCmarg`` in red, so red over red-plus-blank is the
    normalized accuracy.
    """
    colors = {"r2": RING_BLUE, "marginal": MARGINAL_ORANGE, "extra": EXTRA_RED, **(colors or {})}
    rings = []
    for name, m in zip(report.names, report.measures):
        if "R2" in m:
            rings.append([(float(np.clip(m["R2"], 0.0, 1.0)), colors["r2"])])
        elif "CC" in m and "CCmarg" in m:
            base = float(np.clip(m["CCmarg"], 0.0, 1.0))
            extra = float(np.clip(m["CC"] - m["CCmarg"], 0.0, 1.0 - base))
            rings.append([(base, colors["marginal"]), (extra, colors["extra"])])
        else:
            raise ValueError(f"no predictability measure for node {name!r}")
    return rings


def graph_from_model(model, report=None, *, lag_index: int = 0, iterations: int = 500,
                     seed: int = 0, colors: Optional[dict] = None) -> RenderedGraph:
    """Drawable graph for a fitted :class:`PairwiseMGM` or :class:`VARModel`."""
    labels = [v.name for v in model.spec]
    p = len(labels)
    rings = build_rings(report, colors) if report is not None else [[] for _ in range(p)]
    edges = []
    if model.model_kind == "var":
        W = np.abs(model.coefficients[:, :, lag_index])
        S = model.signs[:, :, lag_index]
        # W[i, j]: effect of j on i, drawn as j -> i
        for j in range(p):
            for i in range(p):
                if W[i, j] > 0:
                    edges.append(Edge(j, i, float(W[i, j]), int(S[i, j]), True, i == j))
        coords = spring_layout(np.maximum(W, W.T), iterations, seed)
        return RenderedGraph(coords, edges, rings, labels, directed=True)
    for i in range(p):
        for j in range(i + 1, p):
            if model.wadj[i, j] > 0:
                edges.append(Edge(i, j, float(model.wadj[i, j]), int(model.signs[i, j])))
    return RenderedGraph(spring_layout(model.wadj, iterations, seed), edges, rings, labels)


# ---------------------------------------------------------------------- svg


def _fmt(x: float) -> str:
    return f"{x:.6f}".rstrip("0").rstrip(".") if x != 0 else "0"


def _polar(cx, cy, r, angle):
    """Point at ``angle`` radians clockwise from 12 o'clock."""
    return cx + r * math.sin(angle), cy - r * math.cos(angle)


def arc_path(cx, cy, r, start, sweep) -> str:
    """Clockwise circular arc path; sweeps of a full turn are split in two."""
    x0, y0 = _polar(cx, cy, r, start)
    if sweep >= 2 * math.pi - 1e-12:
        xm, ym = _polar(cx, cy, r, start + math.pi)
        return (f"M {_fmt(x0)} {_fmt(y0)} A {_fmt(r)} {_fmt(r)} 0 0 1 {_fmt(xm)} {_fmt(ym)} "
                f"A {_fmt(r)} {_fmt(r)} 0 0 1 {_fmt(x0)} {_fmt(y0)}")
    x1, y1 = _polar(cx, cy, r, start + sweep)
    large = 1 if sweep > math.pi else 0
    return f"M {_fmt(x0)} {_fmt(y0)} A {_fmt(r)} {_fmt(r)} 0 {large} 1 {_fmt(x1)} {_fmt(y1)}"


DEFAULT_OPTIONS = {
    "size": 600,
    "node_radius": 22.0,
    "ring_width": 6.0,
    "min_edge_width": 0.8,
    "max_edge_width": 8.0,
    "font_size": 10,
    "positive": POSITIVE,
    "negative": NEGATIVE,
    "unsigned": UNSIGNED,
    "track": RING_TRACK,
    "metadata": None,
}


def edge_width(weight: float, max_weight: float, opts: dict) -> float:
    """Stroke width, linear and strictly increasing in ``|weight|``."""
    frac = abs(weight) / max_weight if max_weight > 0 else 0.0
    return opts["min_edge_width"] + (opts["max_edge_width"] - opts["min_edge_width"]) * frac


def render_svg(graph: RenderedGraph, options: Optional[dict] = None) -> str:
    """SVG 1.1 document for ``graph``.

    Ring segments are stroked arcs starting at 12 o'clock and running
    clockwise, each spanning ``2*pi*fraction``. Edge color follows the sign,
    width grows linearly with weight; directed edges carry arrowheads and
    self-loops are small circles attached to their node.
    """
    o = {**DEFAULT_OPTIONS, **(options or {})}
    size = float(o["size"])
    r = o["node_radius"]
    ring_r = r + o["ring_width"] / 2 + 1.0
    color = {1: o["positive"], -1: o["negative"], 0: o["unsigned"]}
    marker_id = {1: "arrow-pos", -1: "arrow-neg", 0: "arrow-unsigned"}
    xy = graph.coordinates * size
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_fmt(size)}" '
        f'height="{_fmt(size)}" viewBox="0 0 {_fmt(size)} {_fmt(size)}">',
    ]
    if o["metadata"] is not None:
        out.append(f"<metadata>{escape(json.dumps(o['metadata'], sort_keys=True))}</metadata>")
    if graph.directed:
        out.append("<defs>")
        for key, name in marker_id.items():
            out.append(
                f'<marker id="{name}" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="4" '
                f'markerHeight="4" orient="auto" markerUnits="strokeWidth">'
                f'<path d="M 0 0 L 10 5 L 0 10 z" fill="{color[key]}"/></marker>'
            )
        out.append("</defs>")
    out.append('<g class="edges">')
    wmax = max((e.weight for e in graph.edges), default=0.0)
    pairs = {(e.source, e.target) for e in graph.edges}
    centroid = xy.mean(axis=0) if len(xy) else np.zeros(2)
    for e in graph.edges:
        w = edge_width(e.weight, wmax, o)
        c = color[int(np.sign(e.sign))]
        attrs = (f'stroke="{c}" stroke-width="{_fmt(w)}" fill="none" data-source="{e.source}" '
                 f'data-target="{e.target}" data-weight="{e.weight:.9g}"')
        if e.self_loop:
            d = xy[e.source] - centroid
            norm = np.hypot(*d)
            u = d / norm if norm > 1e-9 else np.array([0.0, -1.0])
            loop_r = 0.6 * r
            cx, cy = xy[e.source] + u * (ring_r + loop_r * 0.6)
            out.append(f'<circle class="self-loop" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(loop_r)}" {attrs}/>')
            continue
        a, b = xy[e.source], xy[e.target]
        d = b - a
        L = np.hypot(*d)
        if L < 1e-9:
            continue
        u = d / L
        if graph.directed and (e.target, e.source) in pairs:
            shift = np.array([-u[1], u[0]]) * 0.25 * r
            a, b = a + shift, b + shift
        start = a + u * ring_r if graph.directed else a
        end = b - u * (ring_r + o["ring_width"] / 2) if graph.directed else b
        marker = f' marker-end="url(#{marker_id[int(np.sign(e.sign))]})"' if e.directed else ""
        out.append(f'<line class="edge" x1="{_fmt(start[0])}" y1="{_fmt(start[1])}" x2="{_fmt(end[0])}" '
                   f'y2="{_fmt(end[1])}" {attrs}{marker}/>')
    out.append("</g>")
    out.append('<g class="nodes">')
    for i, label in enumerate(graph.labels):
        cx, cy = xy[i]
        out.append(f'<g class="node" data-node="{i}">')
        out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="white" stroke="#555555" stroke-width="1"/>')
        out.append(f'<circle class="ring-track" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(ring_r)}" fill="none" '
                   f'stroke="{o["track"]}" stroke-width="{_fmt(o["ring_width"])}"/>')
        start = 0.0
        for frac, col in graph.rings[i]:
            sweep = 2 * math.pi * frac
            if sweep * ring_r < 1e-5:
                # shorter than the coordinate resolution; nothing to draw
                start += sweep
                continue
            out.append(f'<path class="ring-segment" data-node="{i}" d="{arc_path(cx, cy, ring_r, start, sweep)}" '
                       f'fill="none" stroke="{col}" stroke-width="{_fmt(o["ring_width"])}"/>')
            start += sweep
        out.append(f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" text-anchor="middle" dominant-baseline="central" '
                   f'font-family="sans-serif" font-size="{o["font_size"]}">{escape(str(label))}</text>')
        out.append("</g>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------- dot


def _dot_id(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(graph: RenderedGraph, comments: Sequence[str] = ()) -> str:
    """Graphviz DOT text; ``graph``/``--`` for undirected, ``digraph``/``->`` for directed."""
    kind, op = ("digraph", "->") if graph.directed else ("graph", "--")
    lines = [f"// {c}" for c in comments]
    lines.append(f"{kind} G {{")
    for i, label in enumerate(graph.labels):
        total = sum(f for f, _ in graph.rings[i])
        segs = ";".join(f"{f:.9g}:{c}" for f, c in graph.rings[i])
        x, y = graph.coordinates[i]
        lines.append(f'  {_dot_id(label)} [predictability="{total:.9g}", ring="{segs}", '
                     f'pos="{x:.6f},{1 - y:.6f}!"];')
    sign_text = {1: "+", -1: "-", 0: "0"}
    colors = {1: POSITIVE, -1: NEGATIVE, 0: UNSIGNED}
    for e in graph.edges:
        s = int(np.sign(e.sign))
        lines.append(f"  {_dot_id(graph.labels[e.source])} {op} {_dot_id(graph.labels[e.target])} "
                     f'[weight="{e.weight:.12g}", sign="{sign_text[s]}", color="{colors[s]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
