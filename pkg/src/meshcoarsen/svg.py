"""SVG rendering of meshes."""
from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .mesh import MixedMesh, QuadMesh, TriMesh

SVG_NS = "http://www.w3.org/2000/svg"
COLORS = {"red": "#ffffff", "green": "#b7e4b0", "blue": "#a9c8f0"}


def element_blocks(mesh):
    """Yield ``(elements, block)`` with block in ``red``, ``green``, ``blue``."""
    if isinstance(mesh, MixedMesh):
        q = mesh.elements4
        k = len(q) - mesh.n_green4
        yield q[:k], "red"
        yield q[k:], "green"
        yield mesh.elements3, "green"
    elif isinstance(mesh, QuadMesh):
        k = mesh.n_elements - mesh.n_blue
        yield mesh.elements4[:k], "red"
        yield mesh.elements4[k:], "blue"
    elif isinstance(mesh, TriMesh):
        k = mesh.n_elements - mesh.n_green
        yield mesh.elements3[:k], "red"
        yield mesh.elements3[k:], "green"
    else:
        raise TypeError(f"not a mesh: {type(mesh).__name__}")


def hanging_nodes(mesh) -> np.ndarray:
    return np.unique(mesh.irregular[:, 2])


def svg_tree(mesh, show_hanging: bool = True, fill_blocks: bool = True, width: float = 600.0) -> ET.ElementTree:
    c = mesh.coordinates
    lo, hi = c.min(axis=0), c.max(axis=0)
    span = float(max((hi - lo).max(), 1e-300))
    scale = width / span
    pad = 10.0
    w = (hi[0] - lo[0]) * scale + 2 * pad
    h = (hi[1] - lo[1]) * scale + 2 * pad
    # flip y so that the mesh is drawn with the usual orientation
    px = (c[:, 0] - lo[0]) * scale + pad
    py = (hi[1] - c[:, 1]) * scale + pad
    root = ET.Element("svg", xmlns=SVG_NS, width=f"{w:.2f}", height=f"{h:.2f}",
                      viewBox=f"0 0 {w:.2f} {h:.2f}")
    stroke = max(0.2, min(1.0, 200.0 / np.sqrt(max(mesh.n_elements, 1))))
    g = ET.SubElement(root, "g", id="elements", stroke="black", **{"stroke-width": f"{stroke:.3f}"})
    for elements, block in element_blocks(mesh):
        fill = COLORS[block] if fill_blocks else "none"
        for row in elements.tolist():
            pts = " ".join(f"{px[i]:.3f},{py[i]:.3f}" for i in row)
            ET.SubElement(g, "polygon", points=pts, fill=fill, **{"class": block})
    if show_hanging:
        hn = ET.SubElement(root, "g", id="hanging", fill="red")
        r = 2.0 * stroke + 0.5
        for i in hanging_nodes(mesh).tolist():
            ET.SubElement(hn, "circle", cx=f"{px[i]:.3f}", cy=f"{py[i]:.3f}", r=f"{r:.3f}")
    return ET.ElementTree(root)


def export_svg(mesh, path, show_hanging: bool = True, fill_blocks: bool = True, width: float = 600.0) -> None:
    """Write ``mesh`` as SVG: one polygon per element, hanging nodes as
    dots, green and blue closure blocks filled in color."""
    tree = svg_tree(mesh, show_hanging, fill_blocks, width)
    ET.indent(tree)
    Path(path).write_bytes(ET.tostring(tree.getroot(), encoding="utf-8", xml_declaration=True))


__all__ = ["export_svg", "svg_tree", "element_blocks", "hanging_nodes"]
