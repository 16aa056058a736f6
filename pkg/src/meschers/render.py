"""Deterministic software rendering of meschers.

Faces are painted back to front in a linear extension of the depth
ordering; coverage is decided at pixel centers with a top-left tie rule, so
shared edges are painted exactly once and repeated runs are bit-identical.
Shading is Blinn-Phong under directional lights with the viewer at
+z (orthographic).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .decops import lift_faces
from .errors import ParseError, ZeroNormal
from .model import Mescher, topological_order

__all__ = [
    "Light", "Scene", "ImageBuffer", "scene_from_file", "fit_view",
    "face_normals", "vertex_normals", "render", "write_image",
]


def _vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError("%s must have 3 components" % name)
    return arr


@dataclass(frozen=True)
class Light:
    """Directional light; ``direction`` points toward the surface."""

    direction: np.ndarray
    intensity: np.ndarray = (1.0, 1.0, 1.0)

    def __post_init__(self):
        d = _vec3(self.direction, "light direction")
        n = np.linalg.norm(d)
        if n == 0.0:
            raise ValueError("light direction must be non-zero")
        object.__setattr__(self, "direction", d / n)
        object.__setattr__(self, "intensity",
                           _vec3(self.intensity, "light intensity"))


DEFAULT_LIGHTS = (Light(direction=(-0.35, -0.45, -0.82)),)


@dataclass(frozen=True)
class Scene:
    """Render settings.

    ``scale``/``offset`` map mescher coordinates to pixels: a point (x, y)
    lands at ``scale * x + offset[0]`` pixels from the left edge and
    ``scale * y + offset[1]`` pixels up from the bottom edge.  Leaving them
    None fits the mescher into the image with a margin.  ``supersample``
    renders at double resolution and box-filters down (off on the exact
    comparison paths).
    """

    width: int = 512
    height: int = 512
    scale: float | None = None
    offset: tuple | None = None
    lights: tuple = DEFAULT_LIGHTS
    ambient: np.ndarray = (0.12, 0.12, 0.12)
    diffuse: np.ndarray = (0.85, 0.85, 0.85)
    specular: np.ndarray = (0.25, 0.25, 0.25)
    shininess: float = 32.0
    shading: str = "flat"
    background: np.ndarray = (1.0, 1.0, 1.0)
    supersample: bool = False

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.shading not in ("flat", "smooth"):
            raise ValueError("shading must be 'flat' or 'smooth'")
        if self.shininess <= 0.0:
            raise ValueError("shininess must be positive")
        for name in ("ambient", "diffuse", "specular", "background"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))
        object.__setattr__(self, "lights", tuple(self.lights))
        if self.offset is not None:
            off = np.asarray(self.offset, dtype=float).reshape(-1)
            if off.shape != (2,):
                raise ValueError("offset must have 2 components")
            object.__setattr__(self, "offset", (float(off[0]),
                                                float(off[1])))
        if self.scale is not None and not self.scale > 0.0:
            raise ValueError("scale must be positive")


_SCENE_KEYS = {"width", "height", "scale", "offset", "lights", "ambient",
               "diffuse", "specular", "shininess", "shading", "background",
               "supersample"}


def scene_from_file(path, **overrides) -> Scene:
    """Load render settings from JSON; keyword overrides win."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ParseError("%s: invalid JSON at line %d: %s"
                             % (path, err.lineno, err.msg)) from err
    if not isinstance(doc, dict):
        raise ParseError("%s: top level must be an object" % path)
    unknown = set(doc) - _SCENE_KEYS
    if unknown:
        raise ParseError("%s: unknown scene fields %s"
                         % (path, sorted(unknown)))
    if "lights" in doc:
        doc["lights"] = tuple(Light(**entry) for entry in doc["lights"])
    doc.update(overrides)
    try:
        return Scene(**doc)
    except (TypeError, ValueError) as err:
        raise ParseError("%s: %s" % (path, err)) from err


def fit_view(m: Mescher, width: int, height: int, fill: float = 0.9):
    """Scale and offset centering the mescher in a width-x-height image."""
    if len(m.x) == 0:
        return 1.0, (width / 2.0, height / 2.0)
    bw = float(m.x.max() - m.x.min())
    bh = float(m.y.max() - m.y.min())
    cx = 0.5 * float(m.x.max() + m.x.min())
    cy = 0.5 * float(m.y.max() + m.y.min())
    spans = [width / bw if bw > 0 else np.inf,
             height / bh if bh > 0 else np.inf]
    scale = fill * min(spans)
    if not np.isfinite(scale):
        scale = 1.0
    return scale, (width / 2.0 - scale * cx, height / 2.0 - scale * cy)


# ---------------------------------------------------------------------------
# normals

def face_normals(m: Mescher) -> np.ndarray:
    """Unit face normals of the lifted faces, flipped to face the viewer."""
    return lift_faces(m).normal


def vertex_normals(m: Mescher) -> np.ndarray:
    """Area-weighted average of incident face normals, renormalized.

    Vertices whose average cancels are reported with a ZeroNormal warning
    and fall back to the normal of their smallest-id incident face;
    isolated vertices get +z.
    """
    t = m.topology
    geo = lift_faces(m)
    vn = np.zeros((t.vertex_count, 3))
    weights = np.zeros(t.vertex_count)
    contrib = geo.area[:, None] * geo.normal
    for k in range(3):
        np.add.at(vn, t.faces[:, k], contrib)
        np.add.at(weights, t.faces[:, k], geo.area)
    norms = np.linalg.norm(vn, axis=1)
    degenerate = norms <= 1e-12 * np.maximum(weights, 1e-300)
    if degenerate.any():
        ids = np.nonzero(degenerate)[0]
        warnings.warn(ZeroNormal(
            "averaged normal vanished at vertices %s; using a fallback"
            % ids.tolist()))
        for v in ids:
            faces_v = t.vertex_face_lists[v]
            vn[v] = geo.normal[faces_v[0]] if len(faces_v) else (0.0, 0.0, 1.0)
            norms[v] = np.linalg.norm(vn[v])
    return vn / norms[:, None]


# ---------------------------------------------------------------------------
# rasterization

@dataclass(frozen=True)
class ImageBuffer:
    """8-bit RGB image, row 0 at the top."""

    width: int
    height: int
    pixels: np.ndarray   # (height, width, 3) uint8

    def __post_init__(self):
        px = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ValueError("pixels must have shape (height, width, 3)")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)


def _shade(normals: np.ndarray, s: Scene) -> np.ndarray:
    """Blinn-Phong shading for an (n, 3) array of unit normals."""
    rgb = np.broadcast_to(s.ambient * s.diffuse,
                          (len(normals), 3)).copy()
    view = np.array([0.0, 0.0, 1.0])
    for light in s.lights:
        l = -light.direction
        h = l + view
        h = h / np.linalg.norm(h)
        ndotl = np.maximum(normals @ l, 0.0)
        ndoth = np.maximum(normals @ h, 0.0)
        rgb += (s.diffuse * ndotl[:, None]
                + s.specular * (ndoth[:, None] ** s.shininess)) \
            * light.intensity
    return rgb


def _top_left(du: float, dv: float) -> bool:
    # Boundary samples belong to the triangle whose edge either descends in
    # the image-up axis or runs horizontally right-to-left (image top edge).
    return dv < 0.0 or (dv == 0.0 and du < 0.0)


def _paint(buf, order, corners_u, corners_v, flat_rgb, vnormals, tris, s):
    height, width = buf.shape[:2]
    for f in order:
        u = corners_u[f].copy()
        v = corners_v[f].copy()
        idx = np.array([0, 1, 2])
        area2 = (u[1] - u[0]) * (v[2] - v[0]) - (u[2] - u[0]) * (v[1] - v[0])
        if area2 == 0.0:
            continue
        if area2 < 0.0:
            idx = np.array([0, 2, 1])
            u, v = u[idx], v[idx]
            area2 = -area2
        cmin = max(0, int(np.ceil(u.min() - 0.5)))
        cmax = min(width - 1, int(np.floor(u.max() - 0.5)))
        rmin = max(0, int(np.ceil(height - v.max() - 0.5)))
        rmax = min(height - 1, int(np.floor(height - v.min() - 0.5)))
        if cmin > cmax or rmin > rmax:
            continue
        cols = np.arange(cmin, cmax + 1)
        rows = np.arange(rmin, rmax + 1)
        su = cols + 0.5
        sv = height - rows - 0.5
        pu, pv = np.meshgrid(su, sv)
        w = np.empty((3,) + pu.shape)
        for k in range(3):
            a, b = (k + 1) % 3, (k + 2) % 3   # edge opposite corner k
            du, dv = u[b] - u[a], v[b] - v[a]
            wk = du * (pv - v[a]) - dv * (pu - u[a])
            w[k] = np.where((wk > 0.0) | ((wk == 0.0) & _top_left(du, dv)),
                            np.maximum(wk, 0.0), -1.0)
        covered = (w >= 0.0).all(axis=0)
        if not covered.any():
            continue
        rr, cc = np.nonzero(covered)
        if s.shading == "flat":
            buf[rows[rr], cols[cc]] = flat_rgb[f]
        else:
            bary = w[:, rr, cc] / area2
            n = (bary[0, :, None] * vnormals[tris[f][idx[0]]]
                 + bary[1, :, None] * vnormals[tris[f][idx[1]]]
                 + bary[2, :, None] * vnormals[tris[f][idx[2]]])
            norms = np.linalg.norm(n, axis=1)
            norms[norms == 0.0] = 1.0
            buf[rows[rr], cols[cc]] = _shade(n / norms[:, None], s)


def _render_float(m: Mescher, s: Scene, width, height, scale, offset):
    buf = np.empty((height, width, 3))
    buf[:] = s.background
    order = topological_order(m.ordering, m.topology.face_count)
    corners_u = scale * m.x[m.topology.faces] + offset[0]
    corners_v = scale * m.y[m.topology.faces] + offset[1]
    flat_rgb = None
    vnorms = None
    if s.shading == "flat":
        flat_rgb = _shade(face_normals(m), s)
    else:
        vnorms = vertex_normals(m)
    _paint(buf, order, corners_u, corners_v, flat_rgb, vnorms,
           m.topology.faces, s)
    return buf


def render(m: Mescher, s: Scene) -> ImageBuffer:
    """Rasterize a mescher back to front into an 8-bit RGB image.

    Raises CyclicOrdering when the depth ordering admits no linear
    extension.  Values are clamped to [0, 1] and quantized by
    round-half-up on 255 * value.
    """
    scale, offset = (s.scale, s.offset)
    if scale is None or offset is None:
        fscale, foffset = fit_view(m, s.width, s.height)
        scale = fscale if scale is None else scale
        offset = foffset if offset is None else offset
    if s.supersample:
        big = _render_float(m, s, 2 * s.width, 2 * s.height, 2.0 * scale,
                            (2.0 * offset[0], 2.0 * offset[1]))
        buf = 0.25 * (big[0::2, 0::2] + big[0::2, 1::2]
                      + big[1::2, 0::2] + big[1::2, 1::2])
    else:
        buf = _render_float(m, s, s.width, s.height, scale, offset)
    quantized = np.floor(255.0 * np.clip(buf, 0.0, 1.0) + 0.5) \
        .astype(np.uint8)
    return ImageBuffer(width=s.width, height=s.height, pixels=quantized)


def write_image(path, img: ImageBuffer) -> None:
    """Write the image losslessly; the format follows the file extension."""
    from PIL import Image

    Image.fromarray(np.asarray(img.pixels), "RGB").save(path)
