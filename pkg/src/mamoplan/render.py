"""Static SVG pictures of scenes and executed plans."""

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np

from .kinematics import fk_points

SVG_NS = "http://www.w3.org/2000/svg"


@dataclass(frozen=True)
class RenderSpec:
    scene: object
    trace: tuple = None  # WorldState per plan state
    out: str = None
    movable_color: str = "#2e9e44"
    immovable_color: str = "#c0392b"
    arm_color: str = "#34495e"
    stride: int = 1
    scale: float = 800.0  # pixels per metre

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride >= 1")
        if self.scale <= 0:
            raise ValueError("scale > 0")


def ghost_indices(n, stride):
    """Trace states drawn as arm ghosts: every ``stride``-th one plus the last."""
    if n <= 0:
        return []
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx


def _fmt(v):
    return f"{v:.2f}"


def render_svg(spec):
    """The SVG document as a string."""
    scene = spec.scene
    xmin, ymin, xmax, ymax = scene.workspace.bounds
    pad = 0.02
    k = spec.scale

    def px(x, y):
        return (x - xmin + pad) * k, (ymax - y + pad) * k

    w, h = (xmax - xmin + 2 * pad) * k, (ymax - ymin + 2 * pad) * k
    ET.register_namespace("", SVG_NS)
    root = ET.Element(f"{{{SVG_NS}}}svg", {"width": _fmt(w), "height": _fmt(h),
                                           "viewBox": f"0 0 {_fmt(w)} {_fmt(h)}"})
    defs = ET.SubElement(root, f"{{{SVG_NS}}}defs")
    marker = ET.SubElement(defs, f"{{{SVG_NS}}}marker", {"id": "arrow", "markerWidth": "8", "markerHeight": "8",
                                                      "refX": "6", "refY": "4", "orient": "auto"})
    ET.SubElement(marker, f"{{{SVG_NS}}}path", {"d": "M0,0 L8,4 L0,8 z", "fill": "#333"})

    x0, y0 = px(xmin, ymax)
    ET.SubElement(root, f"{{{SVG_NS}}}rect", {"class": "workspace", "x": _fmt(x0), "y": _fmt(y0),
                                             "width": _fmt((xmax - xmin) * k), "height": _fmt((ymax - ymin) * k),
                                             "fill": "#fafafa", "stroke": "#555"})
    trace = list(spec.trace) if spec.trace else []
    final = trace[-1].objects if trace else scene.start.objects
    for o in sorted(scene.objects, key=lambda o: o.id):
        p = final[o.id]
        cx, cy = px(p.x, p.y)
        kind = "movable" if o.movable else "immovable"
        ET.SubElement(root, f"{{{SVG_NS}}}circle", {
            "class": f"object {kind}", "data-id": str(o.id), "cx": _fmt(cx), "cy": _fmt(cy),
            "r": _fmt(o.radius * k), "fill": spec.movable_color if o.movable else spec.immovable_color,
            "fill-opacity": "0.8"})
    if trace:
        start = scene.start.objects
        for o in sorted(scene.objects, key=lambda o: o.id):
            a, b = start[o.id], final[o.id]
            if (a.x, a.y) == (b.x, b.y):
                continue
            (ax, ay), (bx, by) = px(a.x, a.y), px(b.x, b.y)
            ET.SubElement(root, f"{{{SVG_NS}}}line", {
                "class": "displacement", "data-id": str(o.id), "x1": _fmt(ax), "y1": _fmt(ay),
                "x2": _fmt(bx), "y2": _fmt(by), "stroke": "#333", "stroke-width": "1.5",
                "marker-end": "url(#arrow)"})
        idx = ghost_indices(len(trace), spec.stride)
        for n, i in enumerate(idx):
            pts, _ = fk_points(scene.robot, np.asarray(trace[i].robot, dtype=float))
            coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (px(x, y) for x, y in pts))
            opacity = 0.25 + 0.75 * (n + 1) / len(idx)
            ET.SubElement(root, f"{{{SVG_NS}}}polyline", {
                "class": "arm", "data-state": str(i), "points": coords, "fill": "none",
                "stroke": spec.arm_color, "stroke-opacity": f"{opacity:.2f}",
                "stroke-width": _fmt(2 * max(scene.robot.link_thickness) * k), "stroke-linecap": "round"})
    gx, gy, gyaw = scene.goal.pose
    cx, cy = px(gx, gy)
    tip = px(gx + 0.03 * math.cos(gyaw), gy + 0.03 * math.sin(gyaw))
    goal = ET.SubElement(root, f"{{{SVG_NS}}}g", {"class": "goal"})
    ET.SubElement(goal, f"{{{SVG_NS}}}circle", {"cx": _fmt(cx), "cy": _fmt(cy), "r": "4", "fill": "none",
                                               "stroke": "#1f4e9c", "stroke-width": "2"})
    ET.SubElement(goal, f"{{{SVG_NS}}}line", {"x1": _fmt(cx), "y1": _fmt(cy), "x2": _fmt(tip[0]),
                                             "y2": _fmt(tip[1]), "stroke": "#1f4e9c", "stroke-width": "2"})
    return ET.tostring(root, encoding="unicode", xml_declaration=False) + "\n"


def write_svg(spec):
    text = render_svg(spec)
    if spec.out is None:
        raise ValueError("RenderSpec.out is not set")
    with open(spec.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text
