"""Meschers: triangle meshes with per-edge relative depth.

A mescher pairs screen-space triangle connectivity with a signed depth
change per edge and an optional partial drawing order, which together can
describe scenes no single depth function realizes.  The package builds the
discrete operator stack for that representation, classifies objects as
possible or impossible, edits them (projection, subdivision, fairing, heat
flow, geodesic distance), realizes them in 3-d by cutting or bending, and
renders them deterministically.
"""

from .errors import (CyclicOrdering, DegenerateFace, DisconnectedAfterCut,
                     InconsistentCut, InconsistentOrientation,
                     IntegrabilityViolation, MergePositionMismatch,
                     MescherError, NonManifoldEdge, ParseError,
                     SolverDivergence, ZeroNormal)
from .topology import MeshTopology, build_topology, exterior_derivatives
from .model import (ConversionInfo, CutMesh, DepthOrdering, Mescher,
                    add_order_constraint, convert_cut_mesh,
                    derive_ordering_from_cut, from_cut_mesh,
                    topological_order)
from .decops import (DecOperators, FemOperators, HodgeSplit, LiftedFace,
                     build_dec, build_fem, hodge_decompose, is_impossible,
                     lift_face, lift_faces, mean_edge_length,
                     project_integrable, sobolev_precondition)
from .processing import (EmbeddedMesh, HeatParams, embed_bent, embed_cut,
                         geodesic_distance, heat_diffuse, smooth, subdivide)
from .render import (ImageBuffer, Light, Scene, face_normals, fit_view,
                     render, scene_from_file, vertex_normals, write_image)
from .io import (load_cut_mesh, load_edge_list, load_mescher, load_obj,
                 load_values, save_edge_list, save_mescher, save_obj,
                 save_values)
from .solver import solve_spsd
from . import models

__version__ = "0.1.0"

__all__ = [
    "MescherError", "NonManifoldEdge", "InconsistentOrientation",
    "DegenerateFace", "ParseError", "IntegrabilityViolation",
    "MergePositionMismatch", "CyclicOrdering", "SolverDivergence",
    "InconsistentCut", "DisconnectedAfterCut", "ZeroNormal",
    "MeshTopology", "build_topology", "exterior_derivatives",
    "Mescher", "DepthOrdering", "CutMesh", "ConversionInfo",
    "add_order_constraint", "convert_cut_mesh", "derive_ordering_from_cut",
    "from_cut_mesh", "topological_order",
    "DecOperators", "FemOperators", "HodgeSplit", "LiftedFace",
    "build_dec", "build_fem", "hodge_decompose", "is_impossible",
    "lift_face", "lift_faces", "mean_edge_length", "project_integrable",
    "sobolev_precondition",
    "EmbeddedMesh", "HeatParams", "embed_bent", "embed_cut",
    "geodesic_distance", "heat_diffuse", "smooth", "subdivide",
    "ImageBuffer", "Light", "Scene", "face_normals", "fit_view", "render",
    "scene_from_file", "vertex_normals", "write_image",
    "load_cut_mesh", "load_edge_list", "load_mescher", "load_obj",
    "load_values", "save_edge_list", "save_mescher", "save_obj",
    "save_values", "solve_spsd", "models",
]
