"""Plain-text mesh files.

The format has sections introduced by a keyword on its own line::

    META
    kind quad
    strategy q-r
    n0 4
    n_blue 0
    COORDINATES
    0.0 0.0
    ...
    ELEMENTS4
    1 2 3 4
    IRREGULAR
    BOUNDARY
    1 2
    ...

Indices in the file are 1-based. ``#`` starts a comment. Floats are
written with ``repr`` so that save followed by load is exact.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import MeshError, MixedMesh, QuadMesh, TriMesh, validate

SECTIONS = ("META", "COORDINATES", "ELEMENTS3", "ELEMENTS4", "IRREGULAR", "BOUNDARY")
_WIDTH = {"COORDINATES": 2, "ELEMENTS3": 3, "ELEMENTS4": 4, "IRREGULAR": 3, "BOUNDARY": 2}
_COUNTERS = ("n_green", "n_blue", "n_green4")


class MeshFileError(MeshError):
    """Malformed mesh file; the message names the offending line."""

    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


def mesh_kind(mesh) -> str:
    if isinstance(mesh, MixedMesh):
        return "mixed"
    if isinstance(mesh, QuadMesh):
        return "quad"
    if isinstance(mesh, TriMesh):
        return "tri"
    raise TypeError(f"not a mesh: {type(mesh).__name__}")


def save_mesh(mesh, path, strategy: str = None) -> None:
    """Write ``mesh`` to ``path``."""
    kind = mesh_kind(mesh)
    out = ["# meshcoarsen mesh file", "META", f"kind {kind}"]
    if strategy:
        out.append(f"strategy {strategy}")
    out.append(f"n0 {mesh.n0}")
    for name in _COUNTERS:
        if hasattr(mesh, name):
            out.append(f"{name} {getattr(mesh, name)}")
    out.append("COORDINATES")
    out += [f"{x!r} {y!r}" for x, y in mesh.coordinates.tolist()]

    def block(name, arr):
        out.append(name)
        out.extend(" ".join(str(i + 1) for i in row) for row in arr.tolist())

    if kind in ("tri", "mixed"):
        block("ELEMENTS3", mesh.elements3)
    if kind in ("quad", "mixed"):
        block("ELEMENTS4", mesh.elements4)
    if kind != "mixed":
        block("IRREGULAR", mesh.irregular)
    if mesh.boundary is not None:
        block("BOUNDARY", mesh.boundary)
    Path(path).write_text("\n".join(out) + "\n")


def _parse(path, text):
    meta, data, lines = {}, {}, {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.upper() in SECTIONS:
            section = line.upper()
            if section in data or (section == "META" and meta):
                raise MeshFileError(path, no, f"duplicate section {section}")
            if section != "META":
                data[section], lines[section] = [], []
            continue
        if section is None:
            raise MeshFileError(path, no, "data before the first section header")
        tok = line.split()
        if section == "META":
            if len(tok) != 2:
                raise MeshFileError(path, no, "META lines must be 'key value'")
            meta[tok[0]] = (tok[1], no)
            continue
        if len(tok) != _WIDTH[section]:
            raise MeshFileError(path, no, f"{section} rows need {_WIDTH[section]} values, got {len(tok)}")
        try:
            row = [float(t) for t in tok] if section == "COORDINATES" else [int(t) for t in tok]
        except ValueError:
            raise MeshFileError(path, no, f"cannot parse {line!r}") from None
        data[section].append(row)
        lines[section].append(no)
    return meta, data, lines


def load_mesh(path):
    """Read a mesh written by :func:`save_mesh` (or by hand).

    Raises
    ------
    MeshFileError
        Syntax errors and out-of-range indices, with the line number.
    MeshError
        The parsed arrays violate a mesh invariant.
    """
    meta, data, lines = _parse(path, Path(path).read_text())
    if "COORDINATES" not in data:
        raise MeshFileError(path, 0, "missing COORDINATES section")
    coords = np.array(data["COORDINATES"], float).reshape(-1, 2)
    n = len(coords)
    arrays = {}
    for name in ("ELEMENTS3", "ELEMENTS4", "IRREGULAR", "BOUNDARY"):
        if name not in data:
            continue
        arr = np.array(data[name], np.int64).reshape(-1, _WIDTH[name]) - 1
        bad = np.nonzero(((arr < 0) | (arr >= n)).any(axis=1))[0]
        if bad.size:
            raise MeshFileError(path, lines[name][bad[0]], f"{name} index outside 1..{n}")
        arrays[name] = arr

    def meta_int(key, default):
        if key not in meta:
            return default
        value, no = meta[key]
        try:
            return int(value)
        except ValueError:
            raise MeshFileError(path, no, f"{key} must be an integer") from None

    if "kind" in meta:
        kind = meta["kind"][0]
    else:
        kind = "mixed" if {"ELEMENTS3", "ELEMENTS4"} <= arrays.keys() else (
            "quad" if "ELEMENTS4" in arrays else "tri")
    n0 = meta_int("n0", None)
    bnd = arrays.get("BOUNDARY")
    if kind == "tri":
        mesh = TriMesh(coords, arrays.get("ELEMENTS3"), arrays.get("IRREGULAR"), bnd, n0,
                       meta_int("n_green", 0))
    elif kind == "quad":
        mesh = QuadMesh(coords, arrays.get("ELEMENTS4"), arrays.get("IRREGULAR"), bnd, n0,
                        meta_int("n_blue", 0))
    elif kind == "mixed":
        mesh = MixedMesh(coords, arrays.get("ELEMENTS3"), arrays.get("ELEMENTS4"), bnd, n0,
                         meta_int("n_green4", 0))
    else:
        raise MeshFileError(path, meta["kind"][1], f"unknown kind {kind!r}")
    validate(mesh)
    return mesh


def read_strategy(path) -> str | None:
    """Strategy tag stored in the META section, if any."""
    meta, _, _ = _parse(path, Path(path).read_text())
    return meta["strategy"][0] if "strategy" in meta else None


__all__ = ["MeshFileError", "save_mesh", "load_mesh", "read_strategy", "mesh_kind"]
