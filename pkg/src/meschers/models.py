"""Procedural meschers and cut meshes: grids, tori, tubes, two classics.

Everything here is deterministic and parametric; the impossible-triangle
and crossing-bars builders double as the canonical demo assets and as test
fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CutMesh, Mescher, derive_ordering_from_cut, from_cut_mesh
from .topology import MeshTopology, build_topology

__all__ = [
    "embedded_mescher", "grid_mescher", "tetrahedron_mescher",
    "torus_mescher", "cylinder_mescher", "cylinder_loop", "loop_edge_ids",
    "loop_sum", "PenroseInfo", "penrose_cut_mesh", "penrose_mescher",
    "WindowInfo", "window_cut_mesh", "window_mescher",
]


def embedded_mescher(vertices, faces) -> Mescher:
    """Mescher of an embedded mesh: zeta is the per-edge depth difference."""
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    topo = build_topology(faces, len(vertices))
    z = vertices[:, 2]
    zeta = z[topo.edges[:, 1]] - z[topo.edges[:, 0]]
    return Mescher(topology=topo, x=vertices[:, 0], y=vertices[:, 1],
                   zeta=zeta)


def _grid_faces(ns: int, nk: int, vid) -> np.ndarray:
    """Consistently oriented triangles over an (ns x nk)-sample grid."""
    faces = []
    for s in range(ns - 1):
        for k in range(nk - 1):
            a, b = vid(s, k), vid(s + 1, k)
            c, d = vid(s + 1, k + 1), vid(s, k + 1)
            faces.append((a, b, c))
            faces.append((a, c, d))
    return np.array(faces, dtype=np.int64)


def grid_mescher(n: int, width: float = 1.0, depth=None) -> Mescher:
    """Regular n-x-n-vertex grid over a ``width`` square, split one way.

    ``depth`` may be a callable z(x, y) applied vertexwise; default flat.
    """
    if n < 2:
        raise ValueError("need at least 2 vertices per side")
    coords = np.linspace(0.0, width, n)
    xs, ys = np.meshgrid(coords, coords, indexing="xy")
    x = xs.ravel()
    y = ys.ravel()
    z = depth(x, y) if depth is not None else np.zeros_like(x)
    faces = _grid_faces(n, n, lambda r, c: r * n + c)
    return embedded_mescher(np.column_stack([x, y, z]), faces)


def tetrahedron_mescher(apex=(0.3, 0.25, 0.9)) -> Mescher:
    """Closed tetrahedron boundary with one vertex lifted off the screen."""
    vertices = np.array([[0.0, 0.0, 0.0],
                         [1.0, 0.0, 0.0],
                         [0.0, 1.0, 0.0],
                         list(apex)])
    faces = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]])
    return embedded_mescher(vertices, faces)


def torus_mescher(nu: int = 24, nv: int = 12, big: float = 1.0,
                  small: float = 0.45) -> Mescher:
    """Closed torus of revolution about the view axis, seen face on."""
    if nu < 3 or nv < 3:
        raise ValueError("need at least 3 samples around each loop")
    verts = np.empty((nu * nv, 3))
    for i in range(nu):
        theta = 2.0 * np.pi * i / nu
        for j in range(nv):
            phi = 2.0 * np.pi * j / nv
            rad = big + small * np.cos(phi)
            verts[i * nv + j] = (rad * np.cos(theta), rad * np.sin(theta),
                                 small * np.sin(phi))
    faces = []
    for i in range(nu):
        for j in range(nv):
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            c = ((i + 1) % nu) * nv + (j + 1) % nv
            d = i * nv + (j + 1) % nv
            faces.append((a, b, c))
            faces.append((a, c, d))
    return embedded_mescher(verts, np.array(faces, dtype=np.int64))


def cylinder_mescher(nu: int = 24, nv: int = 8, radius: float = 1.0,
                     height: float = 2.0,
                     circulation: float = 0.0) -> Mescher:
    """Open tube around the y axis, optionally with angular circulation.

    ``circulation`` adds c / nu to every edge step in the angular
    direction, so the depth change around any angular loop sums to c while
    every face stays exactly integrable (the added steps cancel around
    triangles).  c = 0 gives a plain embedded tube.
    """
    if nu < 3 or nv < 1:
        raise ValueError("tube needs nu >= 3 and nv >= 1")
    rings = nv + 1

    def vid(i, j):
        return (i % nu) * rings + j

    verts = np.empty((nu * rings, 3))
    angular_index = np.empty(nu * rings, dtype=np.int64)
    for i in range(nu):
        theta = 2.0 * np.pi * i / nu
        for j in range(rings):
            verts[vid(i, j)] = (radius * np.cos(theta),
                                height * j / nv - height / 2.0,
                                radius * np.sin(theta))
            angular_index[vid(i, j)] = i
    faces = []
    for i in range(nu):
        for j in range(nv):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            faces.append((a, b, c))
            faces.append((a, c, d))
    topo = build_topology(np.array(faces, dtype=np.int64), nu * rings)
    z = verts[:, 2]
    zeta = z[topo.edges[:, 1]] - z[topo.edges[:, 0]]
    if circulation != 0.0:
        di = angular_index[topo.edges[:, 1]] - angular_index[topo.edges[:, 0]]
        di = (di + nu // 2) % nu - nu // 2    # wrap to the short way around
        zeta = zeta + di * (circulation / nu)
    return Mescher(topology=topo, x=verts[:, 0], y=verts[:, 1], zeta=zeta)


def cylinder_loop(nu: int, nv: int) -> tuple:
    """Vertex ids of the angular loop along a tube's first ring."""
    rings = nv + 1
    return tuple(i * rings for i in range(nu))


def loop_edge_ids(t: MeshTopology, loop_vertices) -> list:
    """Closed vertex loop as [(edge id, sign), ...] along the traversal."""
    loop = [int(v) for v in loop_vertices]
    out = []
    for a, b in zip(loop, loop[1:] + loop[:1]):
        tail, head = (a, b) if a < b else (b, a)
        e = t.edge_index.get((tail, head))
        if e is None:
            raise ValueError("no edge between %d and %d" % (a, b))
        out.append((e, 1 if a < b else -1))
    return out


def loop_sum(m: Mescher, loop_vertices, values=None) -> float:
    """Sum of signed edge values (default zeta) around a closed loop."""
    values = m.zeta if values is None else values
    return float(sum(s * values[e]
                     for e, s in loop_edge_ids(m.topology, loop_vertices)))


# ---------------------------------------------------------------------------
# the impossible triangle

@dataclass(frozen=True)
class PenroseInfo:
    """Bookkeeping for the impossible-triangle model.

    Vertex ids survive conversion unchanged (the duplicated seam ring holds
    the highest ids and is merged away).  ``ridge_loop`` runs once around
    the object along the ridge line; ``symmetry[v]`` is the image of vertex
    v under the 120-degree rotation; ``delta`` is the depth gained per lap,
    i.e. the circulation of the harmonic component.
    """

    samples: int
    per_side: int
    delta: float
    ridge_loop: tuple
    symmetry: np.ndarray

    def cross_section_pairs(self, s: int) -> tuple:
        """Vertex pairs of the cross-section polyline at sample s."""
        base = 3 * (s % self.samples)
        return ((base, base + 1), (base + 1, base + 2))


def penrose_cut_mesh(per_side: int = 8, radius: float = 2.2,
                     inner: float = 0.45, outer: float = 0.55,
                     rise: float = 0.15, drop: float = 1.6,
                     delta: float = 0.9):
    """Impossible triangle as a cut mesh: a helical band with a seam.

    The band follows an equilateral triangle in screen space and shows two
    quad strips per arm: a gently tilted top strip (inner boundary to
    ridge) and a steeply receding outer strip (ridge to outer boundary).
    Depth climbs by ``delta`` per lap, and the end cross-section is
    duplicated and merged back onto the start, which is what makes the
    merged object impossible.  Returns (CutMesh, PenroseInfo).
    """
    if per_side < 2:
        raise ValueError("per_side must be at least 2")
    n = 3 * per_side
    corners = np.array([[radius * np.cos(np.radians(90 + 120 * k)),
                         radius * np.sin(np.radians(90 + 120 * k))]
                        for k in range(3)])
    side_dirs = np.array([corners[(k + 1) % 3] - corners[k]
                          for k in range(3)])
    side_dirs /= np.linalg.norm(side_dirs, axis=1)[:, None]
    side_normals = np.column_stack([side_dirs[:, 1], -side_dirs[:, 0]])

    points = np.empty((n, 2))
    offsets = np.empty((n, 2))
    for s in range(n):
        side, frac = divmod(s, per_side)
        f = frac / per_side
        points[s] = (1.0 - f) * corners[side] + f * corners[(side + 1) % 3]
        if frac == 0:
            prev = side_normals[(side + 2) % 3]
            cur = side_normals[side]
            miter = prev + cur
            miter /= np.linalg.norm(miter)
            offsets[s] = miter / (miter @ cur)   # keeps side lines straight
        else:
            offsets[s] = side_normals[side]

    profile_off = (-inner, 0.0, outer)
    profile_z = (0.0, rise, rise - drop)
    verts = np.empty((3 * n + 3, 3))
    for s in range(n):
        zs = delta * s / n
        for k in range(3):
            xy = points[s] + profile_off[k] * offsets[s]
            verts[3 * s + k] = (xy[0], xy[1], zs + profile_z[k])
    for k in range(3):   # duplicated start ring, one lap deeper
        xy = points[0] + profile_off[k] * offsets[0]
        verts[3 * n + k] = (xy[0], xy[1], delta + profile_z[k])

    def ring(s):
        return 3 * n if s == n else 3 * s

    faces = []
    for s in range(n):
        a, b = ring(s), ring(s + 1)
        for k in range(2):
            faces.append((a + k, b + k, b + k + 1))
            faces.append((a + k, b + k + 1, a + k + 1))
    cut = CutMesh(vertices=verts, faces=np.array(faces, dtype=np.int64),
                  merge_pairs=tuple((k, 3 * n + k) for k in range(3)))

    symmetry = np.empty(3 * n, dtype=np.int64)
    for s in range(n):
        for k in range(3):
            symmetry[3 * s + k] = 3 * ((s + per_side) % n) + k
    info = PenroseInfo(samples=n, per_side=per_side, delta=delta,
                       ridge_loop=tuple(3 * s + 1 for s in range(n)),
                       symmetry=symmetry)
    return cut, info


def penrose_mescher(**kw):
    """Impossible-triangle mescher with its derived ordering applied."""
    cut, info = penrose_cut_mesh(**kw)
    m = from_cut_mesh(cut)
    m = m.replace(ordering=derive_ordering_from_cut(cut, m))
    return m, info


# ---------------------------------------------------------------------------
# crossing bars

@dataclass(frozen=True)
class WindowInfo:
    """Face-id ranges of the two bars: [lo, hi) per bar."""

    vertical_faces: tuple
    horizontal_faces: tuple


def window_cut_mesh(length: float = 1.6, half_width: float = 0.28,
                    bevel: float = 0.1, rise: float = 0.12,
                    separation: float = 0.5, samples: int = 9):
    """Two beveled bars crossing at their middles, the front bar raised.

    Each bar is an embedded height field (flat outer bands, raised middle
    band), so the merged object is globally integrable; only the derived
    screen-overlap ordering knows the horizontal bar passes in front.
    Returns (CutMesh, WindowInfo).
    """
    profile_off = (-half_width, -half_width + bevel,
                   half_width - bevel, half_width)
    profile_z = (0.0, rise, rise, 0.0)
    longs = np.linspace(-length, length, samples)

    verts = []
    faces = []

    def add_bar(position):
        base = len(verts)
        for s in range(samples):
            for k in range(4):
                verts.append(position(longs[s], profile_off[k],
                                      profile_z[k]))
        lo = len(faces)
        bar = _grid_faces(samples, 4, lambda s, k: base + 4 * s + k)
        faces.extend(bar.tolist())
        return lo, len(faces)

    v_range = add_bar(lambda t, off, z: (off, t, z))
    h_range = add_bar(lambda t, off, z: (t, off, z + separation))
    cut = CutMesh(vertices=np.array(verts, dtype=float),
                  faces=np.array(faces, dtype=np.int64))
    return cut, WindowInfo(vertical_faces=v_range, horizontal_faces=h_range)


def window_mescher(**kw):
    """Crossing-bars mescher with its derived ordering applied."""
    cut, info = window_cut_mesh(**kw)
    m = from_cut_mesh(cut)
    m = m.replace(ordering=derive_ordering_from_cut(cut, m))
    return m, info
