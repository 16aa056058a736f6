"""Mescher processing: refinement, smoothing, diffusion, distances, embeddings."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .decops import (build_dec, build_fem, hodge_decompose, mean_edge_length,
                     _pin_component_means)
from .errors import DisconnectedAfterCut, InconsistentCut, SolverDivergence
from .model import DepthOrdering, Mescher
from .solver import solve_spsd
from .topology import build_topology

__all__ = [
    "subdivide", "smooth", "heat_diffuse", "HeatParams", "geodesic_distance",
    "EmbeddedMesh", "embed_cut", "embed_bent",
]

CUT_CONSISTENCY_TOL = 1e-8


# ---------------------------------------------------------------------------
# midpoint subdivision

def subdivide(m: Mescher) -> Mescher:
    """One level of 1-to-4 midpoint refinement.

    Midpoints take averaged screen coordinates; each half of a split edge
    carries half the parent's depth change, and the three midlines of a
    face carry half of the parallel parent edge's signed change, so the
    refined depth changes stay locally integrable by construction and every
    parent edge's change equals the sum over its two halves exactly.
    Ordering constraints are inherited by all child-face pairs.
    """
    t = m.topology
    nv, ne, nf = t.vertex_count, t.edge_count, t.face_count
    mids = nv + t.face_edge_ids          # (F, 3) midpoint vertex ids
    children = np.empty((4 * nf, 3), dtype=np.int64)
    v0, v1, v2 = t.faces[:, 0], t.faces[:, 1], t.faces[:, 2]
    m01, m12, m20 = mids[:, 0], mids[:, 1], mids[:, 2]
    children[0::4] = np.column_stack([v0, m01, m20])
    children[1::4] = np.column_stack([v1, m12, m01])
    children[2::4] = np.column_stack([v2, m20, m12])
    children[3::4] = np.column_stack([m01, m12, m20])
    topo = build_topology(children, nv + ne)

    x = np.concatenate([m.x, 0.5 * (m.x[t.edges[:, 0]] + m.x[t.edges[:, 1]])])
    y = np.concatenate([m.y, 0.5 * (m.y[t.edges[:, 0]] + m.y[t.edges[:, 1]])])

    zeta = np.zeros(topo.edge_count)
    index = topo.edge_index
    half = 0.5 * m.zeta
    for e in range(ne):
        tail, head = int(t.edges[e, 0]), int(t.edges[e, 1])
        zeta[index[(tail, nv + e)]] = half[e]
        zeta[index[(head, nv + e)]] = -half[e]
    signed = t.face_edge_signs * m.zeta[t.face_edge_ids]
    for f in range(nf):
        d0 = 0.0
        d1 = signed[f, 0]
        d2 = signed[f, 0] + signed[f, 1]
        depth = {int(mids[f, 0]): 0.5 * (d0 + d1),
                 int(mids[f, 1]): 0.5 * (d1 + d2),
                 int(mids[f, 2]): 0.5 * (d2 + d0)}
        ids = sorted(depth)
        for a, b in ((ids[0], ids[1]), (ids[0], ids[2]), (ids[1], ids[2])):
            zeta[index[(a, b)]] = depth[b] - depth[a]

    pairs = tuple((4 * b + i, 4 * f + j)
                  for b, f in m.ordering.constraints
                  for i in range(4) for j in range(4))
    return Mescher(topology=topo, x=x, y=y, zeta=zeta,
                   ordering=DepthOrdering(pairs))


# ---------------------------------------------------------------------------
# implicit-Euler smoothing and diffusion

def _implicit_step(dec, t: float, values: np.ndarray) -> np.ndarray:
    system = (sp.diags(dec.star0) + t * dec.L0_weak).tocsr()
    b = dec.star0 * values
    atol = 1e-13 * (1.0 + float(np.max(np.abs(b), initial=0.0)))
    return solve_spsd(system, b, tol=1e-12, atol=atol,
                      max_iter=max(200, 50 * len(values)))


def smooth(m: Mescher, t: float, smooth_screen: bool = True,
           smooth_depth: bool = True) -> Mescher:
    """Implicit Laplacian smoothing of screen coordinates and/or depth.

    Both passes use the operators of the input geometry (one linearized
    step).  Screen smoothing solves (star0 + t L) x' = star0 x for x and y.
    Depth smoothing splits zeta = d01 z + omega geometrically, smooths only
    the potential z the same way, and reassembles zeta' = omega + d01 z',
    leaving the harmonic component untouched.  ``t = 0`` is the identity.
    """
    if t < 0.0:
        raise ValueError("t must be non-negative")
    if t == 0.0 or not (smooth_screen or smooth_depth):
        return m
    dec = build_dec(m)
    x, y, zeta = m.x, m.y, m.zeta
    if smooth_depth:
        split = hodge_decompose(m, weighting="geometric")
        zhat = _implicit_step(dec, t, split.z)
        zeta = split.omega + m.topology.d01.astype(float) @ zhat
    if smooth_screen:
        x = _implicit_step(dec, t, m.x)
        y = _implicit_step(dec, t, m.y)
    return m.replace(x=x, y=y, zeta=zeta)


def heat_diffuse(m: Mescher, u0, t: float) -> np.ndarray:
    """One implicit heat step: solve (star0 + t L_weak) u = star0 u0."""
    u0 = np.asarray(u0, dtype=float).ravel()
    if u0.shape != (m.topology.vertex_count,):
        raise ValueError("u0 must hold one value per vertex")
    if t < 0.0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return u0.copy()
    return _implicit_step(build_dec(m), t, u0)


# ---------------------------------------------------------------------------
# geodesic distance by heat diffusion

@dataclass(frozen=True)
class HeatParams:
    """Sources and diffusion time for geodesic_distance.

    ``t`` of None asks for the default, the squared mean lifted edge
    length; an explicit t must be positive.
    """

    source: tuple
    t: float | None = None

    def __post_init__(self):
        src = tuple(sorted({int(v) for v in self.source}))
        if not src:
            raise ValueError("at least one source vertex is required")
        if self.t is not None and not self.t > 0.0:
            raise ValueError("t must be positive")
        object.__setattr__(self, "source", src)


def geodesic_distance(m: Mescher, p: HeatParams) -> np.ndarray:
    """Approximate geodesic distance from the source set via heat flow.

    Diffuses a source indicator for a short time, normalizes the per-face
    gradient of the result, and re-integrates the reversed field through
    the FEM Poisson problem G^T A G d = -G^T A g.  The result is shifted so
    the minimum over the sources is zero.  Components not containing a
    source get no meaningful values (the field is constant there).
    """
    nv = m.topology.vertex_count
    for v in p.source:
        if not 0 <= v < nv:
            raise ValueError("source vertex %d outside 0..%d" % (v, nv - 1))
    t = p.t if p.t is not None else mean_edge_length(m) ** 2
    if not t > 0.0:
        raise ValueError("diffusion time came out non-positive")
    u0 = np.zeros(nv)
    u0[list(p.source)] = 1.0
    u = heat_diffuse(m, u0, t)

    fem = build_fem(m)
    grad = fem.gradient(u)
    norms = np.linalg.norm(grad, axis=1)
    safe = norms > 1e-14
    g = np.zeros_like(grad)
    g[safe] = grad[safe] / norms[safe, None]
    rhs = -fem.divergence_rhs(g)
    area = sp.diags(fem.area)
    system = (fem.Gx.T @ area @ fem.Gx + fem.Gy.T @ area @ fem.Gy
              + fem.Gz.T @ area @ fem.Gz).tocsr()
    bnorm = float(np.linalg.norm(rhs))
    try:
        d = solve_spsd(system, rhs, tol=1e-10,
                       atol=1e-12 * (1.0 + bnorm),
                       max_iter=max(200, 50 * nv))
    except SolverDivergence as err:
        if err.residual is not None and err.residual <= 1e-8 * (1.0 + bnorm):
            d = err.x
        else:
            raise
    d = _pin_component_means(d, m.topology.component_labels)
    return d - d[list(p.source)].min()


# ---------------------------------------------------------------------------
# embeddings

@dataclass(frozen=True)
class EmbeddedMesh:
    """A mescher realized in 3D, possibly after cutting.

    ``cut_map[i]`` gives the originating mescher vertex of embedded vertex
    i (identity for uncut vertices); None when no cutting happened.
    """

    vertices: np.ndarray
    faces: np.ndarray
    cut_map: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    def merge_pairs(self) -> tuple:
        """(keep, remove) pairs undoing the duplication, for re-conversion."""
        if self.cut_map is None:
            return ()
        return tuple((int(self.cut_map[i]), i)
                     for i in range(len(self.vertices))
                     if int(self.cut_map[i]) != i)


def _face_components(t, edge_faces, allowed) -> int:
    rows, cols = [], []
    for e, fs in enumerate(edge_faces):
        if len(fs) == 2 and allowed[e]:
            rows.append(fs[0])
            cols.append(fs[1])
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)),
                        shape=(t.face_count, t.face_count))
    n, _ = connected_components(adj, directed=False)
    return n


def embed_cut(m: Mescher, cut_edges) -> EmbeddedMesh:
    """Integrate depths into absolute z after cutting along ``cut_edges``.

    Vertices incident to cut edges are split into one copy per fan of faces
    still connected around them; depth is then propagated breadth first
    along non-cut edges (smallest vertex id first, per-component start at
    z = 0).  Disagreeing assignments beyond 1e-8 raise InconsistentCut,
    which is exactly what happens when the cut fails to kill a loop with
    nonzero harmonic circulation.
    """
    t = m.topology
    cut = {int(e) for e in cut_edges}
    for e in cut:
        if not 0 <= e < t.edge_count:
            raise ValueError("cut edge id %d outside 0..%d"
                             % (e, t.edge_count - 1))

    edge_faces = [[] for _ in range(t.edge_count)]
    for f in range(t.face_count):
        for e in t.face_edge_ids[f]:
            edge_faces[e].append(f)

    allowed = np.ones(t.edge_count, dtype=bool)
    before = _face_components(t, edge_faces, allowed)
    allowed[list(cut)] = False
    after = _face_components(t, edge_faces, allowed)
    if after > before:
        raise DisconnectedAfterCut(
            "cutting %d edges splits the face graph into %d parts (%d before)"
            % (len(cut), after, before))

    # Per-vertex fans: faces around a vertex stay in one fan when they share
    # a non-cut edge incident to that vertex.
    vertex_edges = [[] for _ in range(t.vertex_count)]
    for e, (a, b) in enumerate(t.edges):
        vertex_edges[a].append(e)
        vertex_edges[b].append(e)

    copy_of = {}            # (vertex, face) -> embedded vertex id
    orig = list(range(t.vertex_count))
    next_id = t.vertex_count
    for v in range(t.vertex_count):
        faces_v = t.vertex_face_lists[v]
        if len(faces_v) == 0:
            continue
        parent = {int(f): int(f) for f in faces_v}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in vertex_edges[v]:
            if e in cut or len(edge_faces[e]) != 2:
                continue
            f1, f2 = edge_faces[e]
            parent[find(f1)] = find(f2)
        fans = {}
        for f in faces_v:
            fans.setdefault(find(int(f)), []).append(int(f))
        groups = sorted(fans.values(), key=min)
        for gi, group in enumerate(groups):
            if gi == 0:
                vid = v
            else:
                vid = next_id
                next_id += 1
                orig.append(v)
            for f in group:
                copy_of[(v, f)] = vid

    orig = np.array(orig, dtype=np.int64)
    faces = np.empty_like(t.faces, dtype=np.int64)
    for f in range(t.face_count):
        for k in range(3):
            faces[f, k] = copy_of[(int(t.faces[f, k]), f)]

    # Adjacency of the cut surface along traversable (non-cut) edges.
    adj = [[] for _ in range(len(orig))]
    seen = set()
    for f in range(t.face_count):
        for k in range(3):
            e = int(t.face_edge_ids[f, k])
            if e in cut:
                continue
            a, b = int(faces[f, k]), int(faces[f, (k + 1) % 3])
            key = (min(a, b), max(a, b))
            if key in seen:
                continue
            seen.add(key)
            value = float(m.zeta[e])
            if (int(orig[a]), int(orig[b])) != (int(t.edges[e, 0]),
                                                int(t.edges[e, 1])):
                value = -value
            adj[a].append((b, value))
            adj[b].append((a, -value))
    for lst in adj:
        lst.sort()

    z = np.full(len(orig), np.nan)
    for seed in range(len(orig)):
        if not np.isnan(z[seed]):
            continue
        z[seed] = 0.0
        heap = [seed]
        while heap:
            v = heapq.heappop(heap)
            for w, dz in adj[v]:
                zw = z[v] + dz
                if np.isnan(z[w]):
                    z[w] = zw
                    heapq.heappush(heap, w)
                elif abs(zw - z[w]) > CUT_CONSISTENCY_TOL:
                    raise InconsistentCut(
                        "depth disagrees by %.3e along edge (%d, %d); the cut"
                        " leaves a loop with nonzero circulation"
                        % (abs(zw - z[w]), v, w))

    vertices = np.column_stack([m.x[orig], m.y[orig], z])
    cut_map = orig if next_id > t.vertex_count else None
    return EmbeddedMesh(vertices=vertices, faces=faces, cut_map=cut_map)


def embed_bent(m: Mescher) -> EmbeddedMesh:
    """Best-possible uncut embedding: z is the exact part of the Hodge split.

    The per-edge residual zeta - d01 z equals the harmonic component, so the
    embedding is exact precisely when the mescher is possible.
    """
    split = hodge_decompose(m, weighting="geometric")
    vertices = np.column_stack([m.x, m.y, split.z])
    return EmbeddedMesh(vertices=vertices,
                        faces=np.array(m.topology.faces, dtype=np.int64),
                        cut_map=None)
