"""Discrete exterior calculus and FEM operators from per-face lifting.

A locally integrable mescher gives every face its own lift: corner depths
relative to the first corner, obtained by accumulating signed per-edge depth
changes.  The lifted triangles carry genuine 3D areas, interior angles, and
normals, which is all the geometry the Hodge stars, Laplacians, and
first-order finite-element gradients need.  No global embedding is assumed
anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateFace, IntegrabilityViolation, SolverDivergence
from .solver import solve_spsd
from .topology import MeshTopology

if TYPE_CHECKING:
    from .model import Mescher

__all__ = [
    "EPS_INT", "LiftedFace", "FaceGeometry", "DecOperators", "FemOperators",
    "HodgeSplit", "lift_face", "lift_faces", "build_dec", "build_fem",
    "mean_edge_length", "project_integrable", "hodge_decompose",
    "is_impossible", "sobolev_precondition",
]

EPS_INT = 1e-9          # relative closure tolerance for a face's depth cycle
AREA_FLOOR = 1e-14      # lifted faces at or below this area are degenerate
NZ_FLOOR = 1e-12        # |n_z| below this leaves the normal unflipped


def _maxabs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def integrability_scale(zeta: np.ndarray) -> float:
    """Scale used by the relative closure tolerance: mean |zeta| + 1."""
    if len(zeta) == 0:
        return 1.0
    return float(np.mean(np.abs(zeta)) + 1.0)


@dataclass(frozen=True)
class LiftedFace:
    """One face lifted to 3D with depths relative to its first corner."""

    relative_depths: np.ndarray    # (3,)
    positions: np.ndarray          # (3, 3) rows are lifted corners
    normal: np.ndarray             # (3,) unit, flipped so n_z >= 0
    area: float
    corner_cotangents: np.ndarray  # (3,) interior-angle cotangents


@dataclass(frozen=True)
class FaceGeometry:
    """Vectorized lift of every face; see LiftedFace for conventions.

    ``normal`` is the viewer-facing convention (n_z >= 0 where well
    defined); ``normal_winding`` keeps the orientation of the corner order
    and is what gradient assembly must use.
    """

    depths: np.ndarray          # (F, 3)
    area: np.ndarray            # (F,)
    normal: np.ndarray          # (F, 3)
    normal_winding: np.ndarray  # (F, 3)
    cotangents: np.ndarray      # (F, 3)


def _lift_core(xs, ys, signed, tol, face_ids):
    """Shared lift math on per-face corner arrays.

    xs, ys: (n, 3) corner screen coordinates; signed: (n, 3) signed depth
    change along each boundary half-edge; face_ids: original ids for error
    messages.
    """
    d1 = signed[:, 0]
    d2 = signed[:, 0] + signed[:, 1]
    defect = d2 + signed[:, 2]
    bad = np.abs(defect) > tol
    if bad.any():
        worst = int(face_ids[np.argmax(np.abs(defect))])
        raise IntegrabilityViolation(
            "face %d: depth changes sum to %.3e around the face "
            "(tolerance %.3e)" % (worst, _maxabs(defect), tol))
    depths = np.column_stack([np.zeros(len(d1)), d1, d2])
    e1 = np.column_stack([xs[:, 1] - xs[:, 0], ys[:, 1] - ys[:, 0], d1])
    e2 = np.column_stack([xs[:, 2] - xs[:, 0], ys[:, 2] - ys[:, 0], d2])
    cross = np.cross(e1, e2)
    norm = np.linalg.norm(cross, axis=1)
    area = 0.5 * norm
    tiny = area <= AREA_FLOOR
    if tiny.any():
        worst = int(face_ids[np.nonzero(tiny)[0][0]])
        raise DegenerateFace("face %d lifts to area <= %g"
                             % (worst, AREA_FLOOR))
    n_wind = cross / norm[:, None]
    flip = (np.abs(n_wind[:, 2]) > NZ_FLOOR) & (n_wind[:, 2] < 0)
    n_front = np.where(flip[:, None], -n_wind, n_wind)
    two_a = 2.0 * area
    e0 = e2 - e1   # corner 1 -> corner 2
    cot0 = np.einsum("ij,ij->i", e1, e2) / two_a
    cot1 = np.einsum("ij,ij->i", e0, -e1) / two_a
    cot2 = np.einsum("ij,ij->i", -e2, e1 - e2) / two_a
    cots = np.column_stack([cot0, cot1, cot2])
    return FaceGeometry(depths=depths, area=area, normal=n_front,
                        normal_winding=n_wind, cotangents=cots)


def lift_faces(m: "Mescher") -> FaceGeometry:
    """Lift every face of ``m``; raises on the first defective face."""
    t = m.topology
    signed = t.face_edge_signs * m.zeta[t.face_edge_ids]
    tol = EPS_INT * integrability_scale(m.zeta)
    return _lift_core(m.x[t.faces], m.y[t.faces], signed, tol,
                      np.arange(t.face_count))


def lift_face(m: "Mescher", f: int) -> LiftedFace:
    """Lift a single face to its local 3D frame."""
    t = m.topology
    tri = t.faces[f]
    signed = (t.face_edge_signs[f] * m.zeta[t.face_edge_ids[f]])[None, :]
    tol = EPS_INT * integrability_scale(m.zeta)
    geo = _lift_core(m.x[tri][None, :], m.y[tri][None, :], signed, tol,
                     np.array([f]))
    positions = np.column_stack([m.x[tri], m.y[tri], geo.depths[0]])
    return LiftedFace(relative_depths=geo.depths[0], positions=positions,
                      normal=geo.normal[0], area=float(geo.area[0]),
                      corner_cotangents=geo.cotangents[0])


@dataclass(frozen=True)
class DecOperators:
    """Hodge stars and Laplacians of a lifted mescher.

    Stars are stored as diagonal vectors: star0 holds one-ring barycentric
    vertex areas, star1 the usual half cotangent sums per edge, star2 the
    inverse face areas.  L0_weak is the symmetric form d01^T star1 d01;
    L0 applies star0^{-1} on the left.
    """

    topology: MeshTopology
    star0: np.ndarray
    star1: np.ndarray
    star2: np.ndarray
    L0_weak: sp.csr_matrix
    L0: sp.csr_matrix

    @cached_property
    def L1(self) -> sp.csr_matrix:
        """1-form Hodge Laplacian star1^{-1} d12^T star2 d12 + d01 star0^{-1} d01^T star1.

        Edges whose cotangent weight is exactly zero (opposing right angles,
        e.g. the diagonals of a flat unit grid) have no inverse; their curl
        term is dropped, which matches removing the degenerate dual edge.
        """
        t = self.topology
        d01 = t.d01.astype(float)
        d12 = t.d12.astype(float)
        with np.errstate(divide="ignore"):
            inv1 = np.where(self.star1 != 0.0, 1.0 / self.star1, 0.0)
        inv0 = np.where(self.star0 > 0.0, 1.0 / self.star0, 0.0)
        curl = sp.diags(inv1) @ d12.T @ sp.diags(self.star2) @ d12
        grad = d01 @ sp.diags(inv0) @ d01.T @ sp.diags(self.star1)
        return (curl + grad).tocsr()


def build_dec(m: "Mescher") -> DecOperators:
    """Assemble Hodge stars and Laplacians from the per-face lifts."""
    t = m.topology
    geo = lift_faces(m)
    star0 = np.zeros(t.vertex_count)
    np.add.at(star0, t.faces.ravel(), np.repeat(geo.area / 3.0, 3))
    star1 = np.zeros(t.edge_count)
    for k in range(3):
        # Edge under half-edge k sees the cotangent at the opposite corner.
        np.add.at(star1, t.face_edge_ids[:, k],
                  0.5 * geo.cotangents[:, (k + 2) % 3])
    star2 = 1.0 / geo.area
    d01 = t.d01.astype(float)
    L0_weak = (d01.T @ sp.diags(star1) @ d01).tocsr()
    inv0 = np.where(star0 > 0.0, 1.0 / star0, 0.0)
    L0 = (sp.diags(inv0) @ L0_weak).tocsr()
    return DecOperators(topology=t, star0=star0, star1=star1, star2=star2,
                        L0_weak=L0_weak, L0=L0)


@dataclass(frozen=True)
class FemOperators:
    """Per-face linear-element gradients in camera axes.

    Gx, Gy, Gz are (F, V); stacking them and weighting by the face areas
    ``area`` reproduces the weak Laplacian: G^T A G = d01^T star1 d01.
    """

    Gx: sp.csr_matrix
    Gy: sp.csr_matrix
    Gz: sp.csr_matrix
    area: np.ndarray

    def gradient(self, u: np.ndarray) -> np.ndarray:
        """Per-face gradient of a vertex function, shape (F, 3)."""
        return np.column_stack([self.Gx @ u, self.Gy @ u, self.Gz @ u])

    def divergence_rhs(self, vec: np.ndarray) -> np.ndarray:
        """G^T A vec for a per-face vector field, shape (V,)."""
        a = self.area
        return (self.Gx.T @ (a * vec[:, 0]) + self.Gy.T @ (a * vec[:, 1])
                + self.Gz.T @ (a * vec[:, 2]))


def build_fem(m: "Mescher") -> FemOperators:
    """Assemble first-order FEM gradient operators on the lifted faces."""
    t = m.topology
    geo = lift_faces(m)
    f = t.face_count
    pos = np.empty((f, 3, 3))
    pos[:, :, 0] = m.x[t.faces]
    pos[:, :, 1] = m.y[t.faces]
    pos[:, :, 2] = geo.depths
    two_a = (2.0 * geo.area)[:, None]
    grads = np.empty((f, 3, 3))   # (face, corner, xyz)
    for k in range(3):
        opposite = pos[:, (k + 2) % 3, :] - pos[:, (k + 1) % 3, :]
        grads[:, k, :] = np.cross(geo.normal_winding, opposite) / two_a
    rows = np.repeat(np.arange(f), 3)
    cols = t.faces.ravel()
    shape = (f, t.vertex_count)
    gx = sp.csr_matrix((grads[:, :, 0].ravel(), (rows, cols)), shape=shape)
    gy = sp.csr_matrix((grads[:, :, 1].ravel(), (rows, cols)), shape=shape)
    gz = sp.csr_matrix((grads[:, :, 2].ravel(), (rows, cols)), shape=shape)
    return FemOperators(Gx=gx, Gy=gy, Gz=gz, area=geo.area)


def mean_edge_length(m: "Mescher") -> float:
    """Mean lifted edge length sqrt(dx^2 + dy^2 + zeta^2)."""
    t = m.topology
    if t.edge_count == 0:
        return 0.0
    dx = m.x[t.edges[:, 1]] - m.x[t.edges[:, 0]]
    dy = m.y[t.edges[:, 1]] - m.y[t.edges[:, 0]]
    return float(np.mean(np.sqrt(dx * dx + dy * dy + m.zeta * m.zeta)))


def project_integrable(zeta_raw, t: MeshTopology,
                       max_iter: int | None = None) -> np.ndarray:
    """Orthogonally project per-edge depth changes onto ker d12.

    Minimizes ||zeta - zeta_raw||_2 subject to d12 zeta = 0 through the
    range-space system (d12 d12^T) lam = d12 zeta_raw, zeta = zeta_raw -
    d12^T lam, solved by conjugate gradients.  Inputs that already satisfy
    the constraint exactly are returned unchanged bit-for-bit.  The result
    satisfies ||d12 zeta||_inf <= 1e-10 * (1 + ||zeta_raw||_inf); internally
    the solve aims three orders lower so downstream refinement keeps
    headroom.
    """
    z = np.asarray(zeta_raw, dtype=float).ravel()
    if t.face_count == 0 or t.edge_count == 0:
        return z.copy()
    d12 = t.d12.astype(float)
    b = d12 @ z
    scale = 1.0 + _maxabs(z)
    bound = 1e-10 * scale
    target = 1e-13 * scale
    system = (d12 @ d12.T).tocsr()
    if max_iter is None:
        max_iter = max(200, 20 * t.face_count)
    try:
        lam = solve_spsd(system, b, tol=0.0, atol=target, max_iter=max_iter)
    except SolverDivergence as err:
        lam = err.x   # checked against the documented bound below
    zeta = z - d12.T @ lam
    res = _maxabs(d12 @ zeta)
    if res > bound:
        raise SolverDivergence(
            "projection residual %.3e exceeds bound %.3e" % (res, bound),
            x=zeta, residual=res)
    return zeta


@dataclass(frozen=True)
class HodgeSplit:
    """Decomposition zeta = d01 z + omega with omega closed and coclosed."""

    z: np.ndarray
    omega: np.ndarray
    residual_closed: float
    residual_coclosed: float
    weighting: str


def _pin_component_means(values: np.ndarray, labels: np.ndarray) -> np.ndarray:
    counts = np.bincount(labels)
    sums = np.bincount(labels, weights=values)
    return values - (sums / counts)[labels]


def hodge_decompose(m: "Mescher", weighting: str = "geometric") -> HodgeSplit:
    """Split zeta into an exact part d01 z and a harmonic remainder omega.

    ``weighting`` chooses the edge inner product: "geometric" uses the
    cotangent star1 of the current lift, "topological" the identity (useful
    before any trustworthy geometry exists).  The potential z solves the
    weak Poisson problem d01^T star1 d01 z = d01^T star1 zeta with the mean
    of z pinned to zero on every connected component.
    """
    t = m.topology
    d01 = t.d01.astype(float)
    if weighting == "geometric":
        dec = build_dec(m)
        s1 = dec.star1
        inv0 = np.where(dec.star0 > 0.0, 1.0 / dec.star0, 0.0)
    elif weighting == "topological":
        s1 = np.ones(t.edge_count)
        inv0 = np.ones(t.vertex_count)
    else:
        raise ValueError("weighting must be 'geometric' or 'topological',"
                         " got %r" % (weighting,))
    system = (d01.T @ sp.diags(s1) @ d01).tocsr()
    b = d01.T @ (s1 * m.zeta)
    bnorm = float(np.linalg.norm(b))
    atol = 1e-13 * (1.0 + _maxabs(b))
    try:
        z = solve_spsd(system, b, tol=1e-12, atol=atol,
                       max_iter=max(200, 50 * t.vertex_count))
    except SolverDivergence as err:
        if err.residual is not None and err.residual <= 1e-8 * (1.0 + bnorm):
            z = err.x   # stalled within a digit of round-off; keep it
        else:
            raise
    z = _pin_component_means(z, t.component_labels)
    omega = m.zeta - d01 @ z
    residual_closed = _maxabs(t.d12.astype(float) @ omega)
    residual_coclosed = _maxabs(inv0 * (d01.T @ (s1 * omega)))
    return HodgeSplit(z=z, omega=omega, residual_closed=residual_closed,
                      residual_coclosed=residual_coclosed,
                      weighting=weighting)


def is_impossible(m: "Mescher", tol: float = 1e-6):
    """Classify a mescher by the size of its harmonic component.

    Returns ``(flag, omega_norm)`` where ``omega_norm`` is the infinity norm
    of omega from the geometric Hodge split, normalized by the mean lifted
    edge length so the verdict is scale invariant.
    """
    split = hodge_decompose(m, weighting="geometric")
    scale = mean_edge_length(m)
    omega_norm = _maxabs(split.omega) / scale if scale > 0.0 else 0.0
    return bool(omega_norm > tol), omega_norm


def sobolev_precondition(g, lam: float, ops: DecOperators) -> np.ndarray:
    """Smooth a vertex gradient by solving (star0 + lam L0_weak) g' = star0 g.

    ``lam = 0`` returns a copy of ``g`` unchanged.  Constants are fixed
    points for every lam.
    """
    g = np.asarray(g, dtype=float).ravel()
    if lam < 0.0:
        raise ValueError("lam must be non-negative")
    if lam == 0.0:
        return g.copy()
    system = (sp.diags(ops.star0) + lam * ops.L0_weak).tocsr()
    b = ops.star0 * g
    atol = 1e-13 * (1.0 + _maxabs(b))
    return solve_spsd(system, b, tol=1e-12, atol=atol,
                      max_iter=max(200, 50 * len(g)))
