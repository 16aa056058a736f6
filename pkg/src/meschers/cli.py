"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 bad data or solver failure, 3 is
reserved for `check` reporting an impossible object.  Values echoed to the
terminal use 9 significant digits; files always get the full 17.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import decops, io, processing
from .errors import CyclicOrdering, MescherError
from .model import (Mescher, convert_cut_mesh, derive_ordering_from_cut,
                    add_order_constraint, topological_order)

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IMPOSSIBLE = 3


def _g9(v) -> str:
    return format(float(v), ".9g")


class _UsageExit(SystemExit):
    def __init__(self, message):
        print("usage error: %s" % message, file=sys.stderr)
        super().__init__(EXIT_USAGE)


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageExit(message)


def _id_list(text: str) -> list:
    toks = text.replace(",", " ").split()
    if not toks:
        raise argparse.ArgumentTypeError("empty id list")
    try:
        return [int(t) for t in toks]
    except ValueError:
        raise argparse.ArgumentTypeError("ids must be integers: %r" % text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mescher",
                description="inspect and edit depth-labelled meshes")
    p.add_argument("--seed", type=int, default=None,
                   help="reserved for future stochastic features")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    c = sub.add_parser("convert", help="cut mesh (OBJ + merge map) to"
                       " .mescher")
    c.add_argument("input", help="OBJ file of the cut mesh")
    c.add_argument("output", help=".mescher file to write")
    c.add_argument("--merge", help="merge-map sidecar ('keep remove' rows)")
    c.add_argument("--seam", help="where to write seam edge ids"
                   " (default: output with .seam suffix)")
    c.add_argument("--no-ordering", action="store_true",
                   help="skip deriving depth-order constraints from the"
                   " cut geometry")

    c = sub.add_parser("project", help="project depth labels onto the"
                       " locally integrable subspace")
    c.add_argument("input")
    c.add_argument("output")

    c = sub.add_parser("decompose", help="split depth labels into exact"
                       " and residual parts")
    c.add_argument("input")
    c.add_argument("--weighting", choices=("geometric", "topological"),
                   default="geometric")
    c.add_argument("--potential-out", help="write the vertex potential")
    c.add_argument("--residual-out", help="write the residual edge part")
    c.add_argument("--plot", help="write a figure of the residual part")

    c = sub.add_parser("check", help="classify the object as possible or"
                       " impossible (exit 3 when impossible)")
    c.add_argument("input")
    c.add_argument("--tol", type=float, default=1e-6)

    c = sub.add_parser("order", help="inspect or edit depth-order"
                       " constraints")
    osub = c.add_subparsers(dest="action", required=True, metavar="ACTION")
    s = osub.add_parser("show", help="print a compatible drawing order")
    s.add_argument("input")
    a = osub.add_parser("add", help="add a behind/front constraint group")
    a.add_argument("input")
    a.add_argument("output")
    a.add_argument("--behind", type=_id_list, required=True,
                   help="face ids drawn first (comma separated)")
    a.add_argument("--front", type=_id_list, required=True,
                   help="face ids drawn last (comma separated)")

    c = sub.add_parser("subdivide", help="refine every face into four")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--levels", type=int, default=1)

    c = sub.add_parser("smooth", help="implicit fairing of screen shape"
                       " and depth labels")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--time", type=float, required=True)
    g = c.add_mutually_exclusive_group()
    g.add_argument("--screen-only", action="store_true",
                   help="leave depth labels untouched")
    g.add_argument("--depth-only", action="store_true",
                   help="leave screen positions untouched")

    c = sub.add_parser("heat", help="diffuse heat from source vertices")
    c.add_argument("input")
    c.add_argument("--source", type=_id_list, required=True)
    c.add_argument("--time", type=float, required=True)
    c.add_argument("--output", help="write the diffused field")
    c.add_argument("--plot", help="write a figure of the diffused field")

    c = sub.add_parser("geodesic", help="distance from source vertices")
    c.add_argument("input")
    c.add_argument("--source", type=_id_list, required=True)
    c.add_argument("--time", type=float, default=None,
                   help="diffusion time (default: squared mean edge"
                   " length)")
    c.add_argument("--output", help="write the distance field")
    c.add_argument("--plot", help="write a figure of the distance field")

    c = sub.add_parser("embed", help="realize the object in 3-d, cutting"
                       " it open or bending it")
    c.add_argument("input")
    c.add_argument("output", help="OBJ file to write")
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("--cut", help="file of edge ids to cut along")
    g.add_argument("--bent", action="store_true",
                   help="keep connectivity, absorb the residual part")
    c.add_argument("--merge-out", help="where to write the merge map of a"
                   " cut embedding (default: output with .merge suffix)")

    c = sub.add_parser("render", help="rasterize to a PNG image")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--scene", help="JSON file of camera/light settings")
    c.add_argument("--width", type=int, default=None)
    c.add_argument("--height", type=int, default=None)
    c.add_argument("--smooth-shading", action="store_true")
    c.add_argument("--supersample", action="store_true")

    c = sub.add_parser("info", help="print a structural summary")
    c.add_argument("input")
    return p


def _load(path, validate_zeta=True) -> Mescher:
    return io.load_mescher(path, validate_zeta=validate_zeta)


def _values_out(args_output, values, what):
    if args_output:
        io.save_values(args_output, values, comment=what)
        print("wrote %s" % args_output)


def _cmd_convert(args):
    cut = io.load_cut_mesh(args.input, args.merge)
    m, info = convert_cut_mesh(cut)
    if info.conflicts:
        print("warning: %d merged edges had disagreeing depth labels"
              " (averaged)" % len(info.conflicts), file=sys.stderr)
    if not args.no_ordering:
        m = m.replace(ordering=derive_ordering_from_cut(cut, m))
    io.save_mescher(args.output, m)
    adjust = float(np.abs(m.zeta - info.zeta_raw).max(initial=0.0))
    seam_path = args.seam or str(Path(args.output).with_suffix(".seam"))
    if info.seam_edges or args.seam:
        io.save_edge_list(seam_path, info.seam_edges,
                          comment="seam edge ids of %s" % args.output)
        print("wrote %s (%d seam edges)" % (seam_path,
                                            len(info.seam_edges)))
    print("wrote %s: %d vertices, %d edges, %d faces, %d ordering"
          " constraints" % (args.output, m.topology.vertex_count,
                            m.topology.edge_count, m.topology.face_count,
                            len(m.ordering.constraints)))
    print("projection adjustment max %s" % _g9(adjust))
    return EXIT_OK


def _cmd_project(args):
    m = _load(args.input, validate_zeta=False)
    before = m.integrability_residual()
    zeta = decops.project_integrable(m.zeta, m.topology)
    m = m.replace(zeta=zeta)
    io.save_mescher(args.output, m)
    print("residual before %s, after %s" % (_g9(before),
                                            _g9(m.integrability_residual())))
    print("wrote %s" % args.output)
    return EXIT_OK


def _cmd_decompose(args):
    m = _load(args.input)
    split = decops.hodge_decompose(m, weighting=args.weighting)
    print("weighting %s" % split.weighting)
    print("exact potential range %s" % _g9(split.z.max() - split.z.min()))
    print("residual part max %s" % _g9(np.abs(split.omega).max(initial=0.0)))
    print("closedness residual %s" % _g9(split.residual_closed))
    print("coclosedness residual %s" % _g9(split.residual_coclosed))
    if args.potential_out:
        io.save_values(args.potential_out, split.z,
                       comment="vertex depth potential")
        print("wrote %s" % args.potential_out)
    if args.residual_out:
        io.save_values(args.residual_out, split.omega,
                       comment="residual edge depth labels")
        print("wrote %s" % args.residual_out)
    if args.plot:
        from . import plots
        plots.plot_edge_field(m, split.omega, args.plot,
                              title="residual depth labels")
        print("wrote %s" % args.plot)
    return EXIT_OK


def _cmd_check(args):
    m = _load(args.input)
    impossible, norm = decops.is_impossible(m, tol=args.tol)
    verdict = "impossible" if impossible else "possible"
    print("%s (normalized residual depth %s, tolerance %s)"
          % (verdict, _g9(norm), _g9(args.tol)))
    return EXIT_IMPOSSIBLE if impossible else EXIT_OK


def _cmd_order(args):
    if args.action == "show":
        m = _load(args.input)
        order = topological_order(m.ordering, m.topology.face_count)
        print(" ".join(str(f) for f in order))
        return EXIT_OK
    m = _load(args.input)
    try:
        m = add_order_constraint(m, args.behind, args.front)
    except CyclicOrdering as err:
        print("warning: constraints became cyclic: %s"
              % " -> ".join(str(f) for f in (err.cycle or ())),
              file=sys.stderr)
        m = err.mescher
    io.save_mescher(args.output, m)
    print("wrote %s (%d ordering constraints)"
          % (args.output, len(m.ordering.constraints)))
    return EXIT_OK


def _cmd_subdivide(args):
    if args.levels < 0:
        raise _UsageExit("--levels must be non-negative")
    m = _load(args.input)
    for _ in range(args.levels):
        m = processing.subdivide(m)
    io.save_mescher(args.output, m)
    print("wrote %s: %d vertices, %d edges, %d faces"
          % (args.output, m.topology.vertex_count, m.topology.edge_count,
             m.topology.face_count))
    return EXIT_OK


def _cmd_smooth(args):
    m = _load(args.input)
    m = processing.smooth(m, args.time,
                          smooth_screen=not args.depth_only,
                          smooth_depth=not args.screen_only)
    io.save_mescher(args.output, m)
    print("wrote %s" % args.output)
    return EXIT_OK


def _cmd_heat(args):
    m = _load(args.input)
    u0 = np.zeros(m.topology.vertex_count)
    for v in args.source:
        if not 0 <= v < m.topology.vertex_count:
            raise _UsageExit("source vertex %d out of range" % v)
        u0[v] = 1.0
    u = processing.heat_diffuse(m, u0, args.time)
    print("heat range %s to %s" % (_g9(u.min()), _g9(u.max())))
    _values_out(args.output, u, "diffused heat")
    if args.plot:
        from . import plots
        plots.plot_vertex_field(m, u, args.plot, title="diffused heat")
        print("wrote %s" % args.plot)
    return EXIT_OK


def _cmd_geodesic(args):
    m = _load(args.input)
    for v in args.source:
        if not 0 <= v < m.topology.vertex_count:
            raise _UsageExit("source vertex %d out of range" % v)
    params = processing.HeatParams(source=tuple(args.source), t=args.time)
    d = processing.geodesic_distance(m, params)
    print("distance max %s" % _g9(d.max()))
    _values_out(args.output, d, "geodesic distance")
    if args.plot:
        from . import plots
        plots.plot_vertex_field(m, d, args.plot, title="geodesic distance",
                                cmap="magma")
        print("wrote %s" % args.plot)
    return EXIT_OK


def _cmd_embed(args):
    m = _load(args.input)
    if args.bent:
        emb = processing.embed_bent(m)
    else:
        cut_edges = io.load_edge_list(args.cut)
        for e in cut_edges:
            if not 0 <= e < m.topology.edge_count:
                raise _UsageExit("cut edge %d out of range" % e)
        emb = processing.embed_cut(m, cut_edges)
    io.save_obj(args.output, emb.vertices, emb.faces)
    print("wrote %s: %d vertices, %d faces"
          % (args.output, len(emb.vertices), len(emb.faces)))
    if emb.cut_map is not None:
        merge_path = args.merge_out or str(
            Path(args.output).with_suffix(".merge"))
        pairs = emb.merge_pairs()
        with open(merge_path, "w", encoding="ascii") as fh:
            fh.write("# merge map of %s (keep remove)\n" % args.output)
            for keep, remove in pairs:
                fh.write("%d %d\n" % (keep, remove))
        print("wrote %s (%d duplicated vertices)" % (merge_path,
                                                     len(pairs)))
    return EXIT_OK


def _cmd_render(args):
    from .render import Scene, render, scene_from_file, write_image
    m = _load(args.input)
    overrides = {}
    if args.width is not None:
        overrides["width"] = args.width
    if args.height is not None:
        overrides["height"] = args.height
    if args.smooth_shading:
        overrides["shading"] = "smooth"
    if args.supersample:
        overrides["supersample"] = True
    if args.scene:
        scene = scene_from_file(args.scene, **overrides)
    else:
        scene = Scene(**overrides)
    img = render(m, scene)
    write_image(args.output, img)
    print("wrote %s (%dx%d)" % (args.output, img.width, img.height))
    return EXIT_OK


def _cmd_info(args):
    m = _load(args.input, validate_zeta=False)
    t = m.topology
    edge_faces = np.asarray(np.abs(t.d12).sum(axis=0)).ravel()
    boundary = int((edge_faces == 1).sum())
    components = int(t.component_labels.max()) + 1 if t.vertex_count else 0
    print("vertices %d, edges %d, faces %d" % (t.vertex_count, t.edge_count,
                                               t.face_count))
    print("components %d, boundary edges %d, euler characteristic %d"
          % (components, boundary,
             t.vertex_count - t.edge_count + t.face_count))
    print("depth label range %s to %s"
          % (_g9(m.zeta.min(initial=0.0)), _g9(m.zeta.max(initial=0.0))))
    print("integrability residual %s" % _g9(m.integrability_residual()))
    print("ordering constraints %d" % len(m.ordering.constraints))
    try:
        topological_order(m.ordering, t.face_count)
        print("ordering acyclic: yes")
    except CyclicOrdering as err:
        print("ordering acyclic: no (cycle %s)"
              % " -> ".join(str(f) for f in (err.cycle or ())))
    impossible, norm = decops.is_impossible(m)
    print("classification: %s (normalized residual depth %s)"
          % ("impossible" if impossible else "possible", _g9(norm)))
    return EXIT_OK


_DISPATCH = {
    "convert": _cmd_convert,
    "project": _cmd_project,
    "decompose": _cmd_decompose,
    "check": _cmd_check,
    "order": _cmd_order,
    "subdivide": _cmd_subdivide,
    "smooth": _cmd_smooth,
    "heat": _cmd_heat,
    "geodesic": _cmd_geodesic,
    "embed": _cmd_embed,
    "render": _cmd_render,
    "info": _cmd_info,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageExit as err:
        return err.code
    except SystemExit as err:
        # argparse exits 0 itself for --help
        return EXIT_OK if err.code in (0, None) else EXIT_USAGE
    try:
        return _DISPATCH[args.command](args)
    except _UsageExit as err:
        return err.code
    except ValueError as err:
        print("usage error: %s" % err, file=sys.stderr)
        return EXIT_USAGE
    except MescherError as err:
        print("error: %s" % err, file=sys.stderr)
        return EXIT_DATA
    except OSError as err:
        print("error: %s" % err, file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
