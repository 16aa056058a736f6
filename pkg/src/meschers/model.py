"""The mescher type: screen positions, per-edge depth changes, orderings.

A mescher never stores absolute depths.  Each edge carries the signed depth
change from its tail to its head, and an optional set of (behind, front)
face pairs resolves screen-space overlaps that the depth changes alone
cannot order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from . import decops
from .errors import CyclicOrdering, MergePositionMismatch
from .topology import MeshTopology, build_topology

__all__ = [
    "DepthOrdering", "Mescher", "CutMesh", "ConversionInfo",
    "from_cut_mesh", "convert_cut_mesh", "derive_ordering_from_cut",
    "add_order_constraint", "topological_order", "find_ordering_cycle",
]

MERGE_POSITION_TOL = 1e-6
OVERLAP_AREA_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# depth ordering

@dataclass(frozen=True)
class DepthOrdering:
    """Partial order on faces as (behind, front) pairs."""

    constraints: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "constraints",
            tuple((int(b), int(f)) for b, f in self.constraints))


def find_ordering_cycle(constraints, face_count: int):
    """Return a face-id cycle [f0, ..., f0] if one exists, else None."""
    succ = [[] for _ in range(face_count)]
    for b, f in constraints:
        succ[b].append(f)
    color = np.zeros(face_count, dtype=np.int8)   # 0 new, 1 active, 2 done
    parent = {}
    for root in range(face_count):
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 0:
                    color[nxt] = 1
                    parent[nxt] = node
                    stack.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
                if color[nxt] == 1:
                    cycle = [nxt]
                    cur = node
                    while cur != nxt:
                        cycle.append(cur)
                        cur = parent[cur]
                    cycle.append(nxt)
                    cycle.reverse()
                    return cycle
            if not advanced:
                color[node] = 2
                stack.pop()
    return None


def topological_order(o: DepthOrdering, face_count: int) -> list:
    """Linear extension of the ordering over all face ids.

    Kahn's algorithm with a min-heap over ready face ids, so ties always
    break toward the smallest id and the result is the lexicographically
    smallest valid extension.  Raises CyclicOrdering with a cycle witness
    when no extension exists.
    """
    indeg = np.zeros(face_count, dtype=np.int64)
    succ = [[] for _ in range(face_count)]
    for b, f in o.constraints:
        if not (0 <= b < face_count and 0 <= f < face_count):
            raise ValueError("constraint (%d, %d) outside 0..%d"
                             % (b, f, face_count - 1))
        succ[b].append(f)
        indeg[f] += 1
    ready = [i for i in range(face_count) if indeg[i] == 0]
    heapq.heapify(ready)
    out = []
    while ready:
        node = heapq.heappop(ready)
        out.append(node)
        for nxt in succ[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(out) != face_count:
        cycle = find_ordering_cycle(o.constraints, face_count)
        raise CyclicOrdering("ordering constraints contain a cycle: %s"
                             % (cycle,), cycle=cycle)
    return out


# ---------------------------------------------------------------------------
# the mescher itself

@dataclass(frozen=True, eq=False)
class Mescher:
    """Screen-space triangle mesh with per-edge relative depth.

    ``zeta[e]`` is the depth change from edge e's tail to its head (tail is
    the smaller vertex id; positive means the head is nearer the viewer).
    Operations never mutate; they return new instances.
    """

    topology: MeshTopology
    x: np.ndarray
    y: np.ndarray
    zeta: np.ndarray
    ordering: DepthOrdering = field(default_factory=DepthOrdering)

    def __post_init__(self):
        t = self.topology
        for name, n in (("x", t.vertex_count), ("y", t.vertex_count),
                        ("zeta", t.edge_count)):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError("%s must have shape (%d,), got %s"
                                 % (name, n, arr.shape))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def replace(self, **kw) -> "Mescher":
        return replace(self, **kw)

    def integrability_residual(self) -> float:
        """max |d12 zeta| over faces (0 for an empty mesh)."""
        if self.topology.face_count == 0:
            return 0.0
        return float(np.max(np.abs(self.topology.d12.astype(float)
                                   @ self.zeta)))


def add_order_constraint(m: Mescher, behind: Iterable[int],
                         front: Iterable[int]) -> Mescher:
    """Order every face in ``behind`` behind every face in ``front``.

    Pairs already present are not duplicated.  If the enlarged constraint
    set has a directed cycle, CyclicOrdering is raised with the cycle as
    witness; the exception still carries the updated mescher in its
    ``mescher`` attribute so the constraints can be amended rather than
    retyped.
    """
    fc = m.topology.face_count
    behind = sorted({int(v) for v in behind})
    front = sorted({int(v) for v in front})
    if not behind or not front:
        raise ValueError("behind and front must both be non-empty")
    for v in behind + front:
        if not 0 <= v < fc:
            raise ValueError("face id %d outside 0..%d" % (v, fc - 1))
    if set(behind) & set(front):
        raise ValueError("behind and front groups overlap")
    have = set(m.ordering.constraints)
    added = [(b, f) for b in behind for f in front if (b, f) not in have]
    new = m.replace(ordering=DepthOrdering(m.ordering.constraints
                                           + tuple(added)))
    cycle = find_ordering_cycle(new.ordering.constraints, fc)
    if cycle is not None:
        raise CyclicOrdering(
            "adding the constraint closes a cycle: %s" % (cycle,),
            cycle=cycle, mescher=new)
    return new


# ---------------------------------------------------------------------------
# conversion from cut meshes

@dataclass(frozen=True)
class CutMesh:
    """A plain embedded triangle mesh plus vertex merge instructions.

    ``vertices`` are (N, 3) camera-space positions (x right, y up, z toward
    the viewer; orthographic).  ``merge_pairs`` lists (keep, remove) vertex
    ids to be identified; merged vertices must coincide in x and y.
    """

    vertices: np.ndarray
    faces: np.ndarray
    merge_pairs: tuple = ()

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.ascontiguousarray(self.faces, dtype=np.int32).reshape(-1, 3)
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "merge_pairs",
                           tuple((int(a), int(b))
                                 for a, b in self.merge_pairs))


@dataclass(frozen=True)
class ConversionInfo:
    """Bookkeeping from convert_cut_mesh, mostly for diagnostics and tests.

    ``vertex_map[i]`` is the mescher vertex id of input vertex i (after
    merging).  ``seam_edges`` are mescher edge ids backed by two or more
    coincident input edges; ``conflicts`` maps those of them whose depth
    changes disagreed to the tuple of contributing values (the stored
    pre-projection value is their arithmetic mean).  ``zeta_raw`` is the
    full pre-projection edge vector.
    """

    vertex_map: np.ndarray
    seam_edges: tuple
    conflicts: dict
    zeta_raw: np.ndarray


def _resolve_merges(merge_pairs, n: int) -> np.ndarray:
    """Representative input-vertex id per input vertex, following chains."""
    target = {}
    for keep, remove in merge_pairs:
        for v in (keep, remove):
            if not 0 <= v < n:
                raise ValueError("merge pair references vertex %d outside "
                                 "0..%d" % (v, n - 1))
        if keep == remove:
            raise ValueError("merge pair (%d, %d) is not distinct"
                             % (keep, remove))
        if remove in target:
            raise ValueError("vertex %d is removed twice" % remove)
        target[remove] = keep
    rep = np.arange(n)
    for v in target:
        seen = {v}
        cur = v
        while cur in target:
            cur = target[cur]
            if cur in seen:
                raise ValueError("merge pairs form a cycle through vertex %d"
                                 % cur)
            seen.add(cur)
        rep[v] = cur
    return rep


def convert_cut_mesh(c: CutMesh):
    """Convert an embedded cut mesh into a mescher, with bookkeeping.

    Depth changes are taken from the input depths edge by edge, coincident
    merged edges are averaged, and the result is projected onto the locally
    integrable set.  Returns ``(mescher, info)``; ``from_cut_mesh`` is the
    plain variant.  The mescher's ordering starts empty; see
    derive_ordering_from_cut.
    """
    n = len(c.vertices)
    rep = _resolve_merges(c.merge_pairs, n)
    removed = {r for _, r in c.merge_pairs}
    for v in sorted(removed):
        r = int(rep[v])
        if (abs(c.vertices[v, 0] - c.vertices[r, 0]) > MERGE_POSITION_TOL
                or abs(c.vertices[v, 1] - c.vertices[r, 1])
                > MERGE_POSITION_TOL):
            raise MergePositionMismatch(
                "vertices %d and %d merge but differ in screen position by "
                "(%g, %g)" % (v, r,
                              abs(c.vertices[v, 0] - c.vertices[r, 0]),
                              abs(c.vertices[v, 1] - c.vertices[r, 1])))

    kept = np.array([v for v in range(n) if v not in removed],
                    dtype=np.int64)
    new_id = np.full(n, -1, dtype=np.int64)
    new_id[kept] = np.arange(len(kept))
    vmap = new_id[rep]                      # input vertex -> mescher vertex

    faces = vmap[c.faces]
    topo = build_topology(faces, len(kept))

    # One contribution per distinct input edge, oriented along the merged
    # edge's canonical direction.
    z = c.vertices[:, 2]
    contributions = {}
    seen_input_edges = set()
    for tri in c.faces:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (int(min(a, b)), int(max(a, b)))
            if key in seen_input_edges:
                continue
            seen_input_edges.add(key)
            u, v = key
            p, q = int(vmap[u]), int(vmap[v])
            if p == q:
                continue    # edge collapsed by a merge; its faces failed above
            tail, head = (p, q) if p < q else (q, p)
            value = (z[v] - z[u]) if vmap[u] == tail else (z[u] - z[v])
            contributions.setdefault((tail, head), []).append(float(value))

    zeta_raw = np.zeros(topo.edge_count)
    seam = []
    conflicts = {}
    for (tail, head), values in contributions.items():
        e = topo.edge_index[(tail, head)]
        zeta_raw[e] = float(np.mean(values))
        if len(values) > 1:
            seam.append(e)
            spread = max(values) - min(values)
            if spread > 1e-9 * (1.0 + max(abs(v) for v in values)):
                conflicts[e] = tuple(values)
    seam.sort()

    zeta = decops.project_integrable(zeta_raw, topo)
    m = Mescher(topology=topo, x=c.vertices[kept, 0], y=c.vertices[kept, 1],
                zeta=zeta)
    info = ConversionInfo(vertex_map=vmap, seam_edges=tuple(seam),
                          conflicts=conflicts, zeta_raw=zeta_raw)
    return m, info


def from_cut_mesh(c: CutMesh) -> Mescher:
    """Convert an embedded cut mesh into a mescher."""
    return convert_cut_mesh(c)[0]


# ---------------------------------------------------------------------------
# screen-space overlap ordering

def _clip_polygon(poly, a, b):
    """Keep the part of ``poly`` left of the directed line a->b."""
    ax, ay = a
    bx, by = b
    out = []
    n = len(poly)
    for i in range(n):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % n]
        sp = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        sq = (bx - ax) * (qy - ay) - (by - ay) * (qx - ax)
        if sp >= 0.0:
            out.append((px, py))
        if (sp > 0.0 > sq) or (sp < 0.0 < sq):
            t = sp / (sp - sq)
            out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def _polygon_area_centroid(poly):
    area2 = 0.0
    cx = cy = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        w = x0 * y1 - x1 * y0
        area2 += w
        cx += (x0 + x1) * w
        cy += (y0 + y1) * w
    if area2 == 0.0:
        return 0.0, (0.0, 0.0)
    return 0.5 * area2, (cx / (3.0 * area2), cy / (3.0 * area2))


def _face_depth(verts3, tri, px, py):
    """Depth of a face's supporting plane at a screen point, or None.

    Uses barycentric coordinates of the face's screen triangle; degenerate
    screen triangles carry no usable plane.
    """
    x0, y0, z0 = verts3[tri[0]]
    x1, y1, z1 = verts3[tri[1]]
    x2, y2, z2 = verts3[tri[2]]
    det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
    if det == 0.0:
        return None
    l1 = ((px - x0) * (y2 - y0) - (x2 - x0) * (py - y0)) / det
    l2 = ((x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)) / det
    return z0 + l1 * (z1 - z0) + l2 * (z2 - z0)


def derive_ordering_from_cut(c: CutMesh, m: Mescher) -> DepthOrdering:
    """Order screen-overlapping face pairs by their depths in the cut mesh.

    For every pair of faces that overlap with positive screen area, do not
    share a mescher vertex, and occupy disjoint depth ranges over the
    overlap, a (behind, front) pair is emitted by comparing depths at the
    overlap centroid.  Face ids and order of emission are deterministic.
    """
    t = m.topology
    if len(c.faces) != t.face_count:
        raise ValueError("cut mesh and mescher disagree on face count")
    fc = t.face_count
    tris = t.faces
    xs = m.x[tris]
    ys = m.y[tris]
    minx, maxx = xs.min(axis=1), xs.max(axis=1)
    miny, maxy = ys.min(axis=1), ys.max(axis=1)
    fverts = [set(map(int, tris[i])) for i in range(fc)]

    pairs = []
    for i in range(fc):
        # bounding-box prefilter, then exact clipping
        cand = np.nonzero((minx[i] <= maxx) & (maxx[i] >= minx)
                          & (miny[i] <= maxy) & (maxy[i] >= miny))[0]
        for j in cand[cand > i]:
            j = int(j)
            if fverts[i] & fverts[j]:
                continue
            poly = [(xs[i, k], ys[i, k]) for k in range(3)]
            a2, _ = _polygon_area_centroid(poly)
            if a2 < 0.0:
                poly.reverse()
            clip = [(xs[j, k], ys[j, k]) for k in range(3)]
            a2, _ = _polygon_area_centroid(clip)
            if a2 < 0.0:
                clip.reverse()
            for k in range(3):
                poly = _clip_polygon(poly, clip[k], clip[(k + 1) % 3])
                if len(poly) < 3:
                    break
            if len(poly) < 3:
                continue
            area, (cx, cy) = _polygon_area_centroid(poly)
            if area <= OVERLAP_AREA_FLOOR:
                continue
            zi = [_face_depth(c.vertices, c.faces[i], px, py)
                  for px, py in poly]
            zj = [_face_depth(c.vertices, c.faces[j], px, py)
                  for px, py in poly]
            if any(v is None for v in zi + zj):
                continue
            if min(zi) > max(zj) or min(zj) > max(zi):
                ci = _face_depth(c.vertices, c.faces[i], cx, cy)
                cj = _face_depth(c.vertices, c.faces[j], cx, cy)
                pairs.append((i, j) if ci < cj else (j, i))

    ordering = DepthOrdering(tuple(pairs))
    cycle = find_ordering_cycle(ordering.constraints, fc)
    if cycle is not None:
        raise CyclicOrdering("derived ordering contains a cycle: %s"
                             % (cycle,), cycle=cycle)
    return ordering
