"""Oriented manifold triangle connectivity and its exterior derivatives.

Connectivity is purely combinatorial here: no coordinates, no depths.  Edges
are stored once per undirected vertex pair in a canonical orientation
(tail = smaller vertex id) and enumerated in ascending ``(tail, head)``
order, so rebuilding from the same face list is bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateFace, InconsistentOrientation, NonManifoldEdge

__all__ = ["MeshTopology", "build_topology", "exterior_derivatives"]


@dataclass(frozen=True, eq=False)
class MeshTopology:
    """Immutable triangle-mesh connectivity.

    ``face_edge_ids[f, k]`` is the edge under the k-th boundary half-edge of
    face ``f`` (half-edges in order v0->v1, v1->v2, v2->v0) and
    ``face_edge_signs[f, k]`` is +1 when that half-edge runs with the stored
    edge direction, -1 against it.
    """

    vertex_count: int
    faces: np.ndarray           # (F, 3) int32
    edges: np.ndarray           # (E, 2) int32, tail < head per row
    face_edge_ids: np.ndarray   # (F, 3) int32
    face_edge_signs: np.ndarray  # (F, 3) int8

    def __post_init__(self):
        for name in ("faces", "edges", "face_edge_ids", "face_edge_signs"):
            getattr(self, name).setflags(write=False)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    @cached_property
    def edge_index(self) -> dict:
        """Map from (tail, head) with tail < head to edge id."""
        return {(int(t), int(h)): i for i, (t, h) in enumerate(self.edges)}

    @cached_property
    def d01(self) -> sp.csr_matrix:
        """Vertex-to-edge incidence, (E, V): -1 at the tail, +1 at the head."""
        e = self.edge_count
        rows = np.repeat(np.arange(e), 2)
        cols = self.edges.ravel()
        data = np.tile(np.array([-1, 1], dtype=np.int8), e)
        return sp.csr_matrix((data, (rows, cols)),
                             shape=(e, self.vertex_count))

    @cached_property
    def d12(self) -> sp.csr_matrix:
        """Edge-to-face incidence, (F, E): three signed entries per face."""
        f = self.face_count
        rows = np.repeat(np.arange(f), 3)
        cols = self.face_edge_ids.ravel()
        data = self.face_edge_signs.ravel()
        return sp.csr_matrix((data, (rows, cols)),
                             shape=(f, self.edge_count))

    @cached_property
    def component_labels(self) -> np.ndarray:
        """Connected-component label per vertex (vertices joined by edges)."""
        adj = sp.csr_matrix(
            (np.ones(self.edge_count), (self.edges[:, 0], self.edges[:, 1])),
            shape=(self.vertex_count, self.vertex_count))
        _, labels = connected_components(adj, directed=False)
        return labels

    @cached_property
    def vertex_face_lists(self) -> list:
        """Per vertex, the ids of incident faces in ascending order."""
        lists = [[] for _ in range(self.vertex_count)]
        for f, tri in enumerate(self.faces):
            for v in tri:
                lists[v].append(f)
        return [np.array(l, dtype=np.int32) for l in lists]


def build_topology(faces, vertex_count: int) -> MeshTopology:
    """Build validated connectivity from a triangle list.

    Raises DegenerateFace for repeated vertices within a face,
    NonManifoldEdge when an edge is used by more than two faces, and
    InconsistentOrientation when two faces traverse a shared edge the same
    way.  Construction is deterministic: identical input gives identical
    edge enumeration.
    """
    faces = np.ascontiguousarray(faces, dtype=np.int32).reshape(-1, 3)
    if faces.size and (faces.min() < 0 or faces.max() >= vertex_count):
        raise ValueError("face references a vertex id outside 0..%d"
                         % (vertex_count - 1))
    same = ((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2])
            | (faces[:, 2] == faces[:, 0]))
    if same.any():
        f = int(np.nonzero(same)[0][0])
        raise DegenerateFace("face %d repeats a vertex: %s"
                             % (f, faces[f].tolist()))

    tails = faces
    heads = np.roll(faces, -1, axis=1)
    und = np.stack([np.minimum(tails, heads), np.maximum(tails, heads)],
                   axis=-1).reshape(-1, 2)        # (3F, 2)
    edges = np.unique(und, axis=0)                # lexicographic (tail, head)
    index = {(int(t), int(h)): i for i, (t, h) in enumerate(edges)}

    flat_ids = np.fromiter((index[(t, h)] for t, h in und),
                           dtype=np.int32, count=len(und))
    face_edge_ids = flat_ids.reshape(-1, 3)
    face_edge_signs = np.where(tails < heads, 1, -1).astype(np.int8)

    counts = np.zeros(len(edges), dtype=np.int64)
    np.add.at(counts, face_edge_ids.ravel(), 1)
    if (counts > 2).any():
        e = int(np.nonzero(counts > 2)[0][0])
        raise NonManifoldEdge("edge %s is used by %d faces"
                              % (edges[e].tolist(), counts[e]))
    sign_sums = np.zeros(len(edges), dtype=np.int64)
    np.add.at(sign_sums, face_edge_ids.ravel(),
              face_edge_signs.ravel().astype(np.int64))
    bad = (counts == 2) & (sign_sums != 0)
    if bad.any():
        e = int(np.nonzero(bad)[0][0])
        raise InconsistentOrientation(
            "edge %s is traversed twice in the same direction"
            % edges[e].tolist())

    return MeshTopology(vertex_count=int(vertex_count), faces=faces,
                        edges=edges, face_edge_ids=face_edge_ids,
                        face_edge_signs=face_edge_signs)


def exterior_derivatives(t: MeshTopology):
    """Return (d01, d12) as sparse integer matrices.

    d12 @ d01 vanishes identically in integer arithmetic; see the invariant
    tests.
    """
    return t.d01, t.d12
