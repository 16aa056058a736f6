"""File formats: the .mescher JSON document, Wavefront OBJ, and sidecars.

Floating-point values are written with 17 significant digits so every
double survives a save/load round trip bit-for-bit, and writers emit fields
in a fixed order so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import warnings

import numpy as np

from .decops import EPS_INT, integrability_scale
from .errors import IntegrabilityViolation, ParseError
from .model import CutMesh, DepthOrdering, Mescher, find_ordering_cycle
from .topology import build_topology

__all__ = [
    "save_mescher", "load_mescher", "load_obj", "save_obj",
    "load_merge_pairs", "load_cut_mesh", "load_edge_list", "save_edge_list",
    "load_values", "save_values",
]


def _f17(v: float) -> str:
    return format(float(v), ".17g")


def _float_rows(arr) -> str:
    return ", ".join("[" + ", ".join(_f17(v) for v in row) + "]"
                     for row in arr)


def _float_list(arr) -> str:
    return ", ".join(_f17(v) for v in arr)


def _int_rows(arr) -> str:
    return ", ".join("[" + ", ".join(str(int(v)) for v in row) + "]"
                     for row in arr)


def save_mescher(path, m: Mescher) -> None:
    """Write a mescher as a version-1 JSON document."""
    t = m.topology
    verts = np.column_stack([m.x, m.y])
    parts = [
        '{"version": 1,',
        ' "vertices": [%s],' % _float_rows(verts),
        ' "edges": [%s],' % _int_rows(t.edges),
        ' "zeta": [%s],' % _float_list(m.zeta),
        ' "faces": [%s],' % _int_rows(t.faces),
        ' "ordering": [%s]}' % _int_rows(m.ordering.constraints),
    ]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(parts) + "\n")


def _require(doc, key, kind):
    if key not in doc:
        raise ParseError("missing field %r" % key)
    value = doc[key]
    if not isinstance(value, kind):
        raise ParseError("field %r must be a %s" % (key, kind.__name__))
    return value


def load_mescher(path, validate_zeta: bool = True) -> Mescher:
    """Load a version-1 .mescher document.

    Refuses structurally broken files with ParseError and, unless
    ``validate_zeta`` is off (the repair path used by ``mescher project``
    and ``mescher info``), files whose depth changes are not locally
    integrable with IntegrabilityViolation.  A cyclic ordering loads with a
    warning so a stored-but-unsatisfiable constraint set can still be
    amended.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise ParseError("invalid JSON at line %d column %d: %s"
                         % (err.lineno, err.colno, err.msg)) from err
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    if doc.get("version") != 1:
        raise ParseError("unsupported version %r" % (doc.get("version"),))

    verts = _require(doc, "vertices", list)
    edges = _require(doc, "edges", list)
    zeta = _require(doc, "zeta", list)
    faces = _require(doc, "faces", list)
    ordering = _require(doc, "ordering", list)

    try:
        verts = np.array(verts, dtype=float).reshape(-1, 2)
    except (TypeError, ValueError) as err:
        raise ParseError("vertices: expected rows of [x, y]") from err
    if verts.size and not np.isfinite(verts).all():
        raise ParseError("vertices: non-finite coordinate")
    nv = len(verts)

    try:
        face_arr = np.array(faces, dtype=np.int64).reshape(-1, 3)
    except (TypeError, ValueError) as err:
        raise ParseError("faces: expected rows of three vertex ids") from err
    try:
        topo = build_topology(face_arr, nv)
    except Exception as err:
        raise ParseError("faces: %s" % err) from err

    try:
        edge_arr = np.array(edges, dtype=np.int64).reshape(-1, 2)
    except (TypeError, ValueError) as err:
        raise ParseError("edges: expected rows of [tail, head]") from err
    seen = set()
    for t, h in edge_arr:
        key = (int(t), int(h))
        if key in seen:
            raise ParseError("edges: pair %s listed twice" % (key,))
        seen.add(key)
    if edge_arr.shape != topo.edges.shape or (edge_arr != topo.edges).any():
        raise ParseError(
            "edges: list must equal the canonical (tail < head, ascending) "
            "enumeration induced by the faces")

    try:
        zeta_arr = np.array(zeta, dtype=float).reshape(-1)
    except (TypeError, ValueError) as err:
        raise ParseError("zeta: expected a flat list of numbers") from err
    if len(zeta_arr) != topo.edge_count:
        raise ParseError("zeta: %d values for %d edges"
                         % (len(zeta_arr), topo.edge_count))
    if zeta_arr.size and not np.isfinite(zeta_arr).all():
        raise ParseError("zeta: non-finite value")

    pairs = []
    for row in ordering:
        if (not isinstance(row, list) or len(row) != 2
                or not all(isinstance(v, int) for v in row)):
            raise ParseError("ordering: expected rows of [behind, front]")
        b, f = row
        if not (0 <= b < topo.face_count and 0 <= f < topo.face_count):
            raise ParseError("ordering: face id outside 0..%d in %s"
                             % (topo.face_count - 1, row))
        pairs.append((b, f))

    if validate_zeta and topo.face_count:
        residual = float(np.max(np.abs(topo.d12.astype(float) @ zeta_arr)))
        tol = EPS_INT * integrability_scale(zeta_arr)
        if residual > tol:
            raise IntegrabilityViolation(
                "zeta is not locally integrable: residual %.3e exceeds %.3e"
                " (run `mescher project` to repair)" % (residual, tol))

    cycle = find_ordering_cycle(pairs, topo.face_count)
    if cycle is not None:
        warnings.warn("ordering constraints contain a cycle: %s; stored "
                      "as-is so they can be amended" % (cycle,))

    return Mescher(topology=topo, x=verts[:, 0], y=verts[:, 1],
                   zeta=zeta_arr, ordering=DepthOrdering(tuple(pairs)))


# ---------------------------------------------------------------------------
# Wavefront OBJ (v/f records only) and plain-text sidecars

def load_obj(path):
    """Read vertices and triangular faces from a Wavefront OBJ file."""
    verts = []
    faces = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            tag = fields[0]
            if tag == "v":
                if len(fields) < 4:
                    raise ParseError("%s:%d: vertex needs 3 coordinates"
                                     % (path, lineno))
                try:
                    verts.append([float(v) for v in fields[1:4]])
                except ValueError as err:
                    raise ParseError("%s:%d: bad coordinate" % (path, lineno)) \
                        from err
            elif tag == "f":
                if len(fields) != 4:
                    raise ParseError("%s:%d: only triangular faces are "
                                     "supported" % (path, lineno))
                idx = []
                for part in fields[1:]:
                    head = part.split("/", 1)[0]
                    try:
                        value = int(head)
                    except ValueError as err:
                        raise ParseError("%s:%d: bad face index %r"
                                         % (path, lineno, part)) from err
                    if value <= 0:
                        raise ParseError("%s:%d: face indices must be "
                                         "positive" % (path, lineno))
                    idx.append(value - 1)
                faces.append(idx)
            # all other record types are ignored
    verts = np.array(verts, dtype=float).reshape(-1, 3)
    faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
    if faces.size and faces.max() >= len(verts):
        raise ParseError("%s: face references vertex %d but only %d are "
                         "defined" % (path, faces.max() + 1, len(verts)))
    return verts, faces


def save_obj(path, vertices, faces) -> None:
    """Write vertices and triangles as a minimal OBJ file."""
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    with open(path, "w", encoding="ascii") as fh:
        for vx, vy, vz in vertices:
            fh.write("v %s %s %s\n" % (_f17(vx), _f17(vy), _f17(vz)))
        for a, b, c in faces:
            fh.write("f %d %d %d\n" % (a + 1, b + 1, c + 1))


def load_merge_pairs(path):
    """Read "keep remove" vertex-id pairs, one per line, '#' comments."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2:
                raise ParseError("%s:%d: expected 'keep remove'"
                                 % (path, lineno))
            try:
                pairs.append((int(fields[0]), int(fields[1])))
            except ValueError as err:
                raise ParseError("%s:%d: ids must be integers"
                                 % (path, lineno)) from err
    return tuple(pairs)


def load_cut_mesh(obj_path, merge_path=None) -> CutMesh:
    """Read an OBJ plus optional merge-map sidecar as a CutMesh."""
    verts, faces = load_obj(obj_path)
    pairs = load_merge_pairs(merge_path) if merge_path else ()
    return CutMesh(vertices=verts, faces=faces, merge_pairs=pairs)


def load_edge_list(path):
    """Read edge ids, one per line, '#' comments allowed."""
    ids = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                ids.append(int(line))
            except ValueError as err:
                raise ParseError("%s:%d: expected one edge id"
                                 % (path, lineno)) from err
    return ids


def save_edge_list(path, edge_ids, comment: str | None = None) -> None:
    with open(path, "w", encoding="ascii") as fh:
        if comment:
            fh.write("# %s\n" % comment)
        for e in edge_ids:
            fh.write("%d\n" % int(e))


def load_values(path) -> np.ndarray:
    """Read a scalar field, one value per line, '#' comments allowed."""
    vals = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                vals.append(float(line))
            except ValueError as err:
                raise ParseError("%s:%d: expected one value"
                                 % (path, lineno)) from err
    return np.array(vals, dtype=float)


def save_values(path, values, comment: str | None = None) -> None:
    """Write a scalar field, one 17-digit value per line."""
    with open(path, "w", encoding="ascii") as fh:
        if comment:
            fh.write("# %s\n" % comment)
        for v in np.asarray(values, dtype=float):
            fh.write(_f17(v) + "\n")
