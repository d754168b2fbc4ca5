"""Command-line front end: ``splyne <command> ...``.

Exit status is 0 on success, 2 for configuration errors and 3 when a
numerical step fails.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .assembly import (NumericalError, assemble_pair, condition_estimate, eigensolve, eigvec_heatmap,
                       write_eigen_csv, write_matrix_market)
from .boxmesh import MeshError, build_hierarchical, dump_mesh, load_mesh
from .harness import (BOUNDARY_METHODS, HEAVY_LEVEL, ConfigError, build_space, boundary_study, load_scenarios,
                      make_spec, records_to_csv, run_many)
from .lrspace import dump_space, lr_construct
from .overload import TMeshIncompatible, UnsupportedDegree, overload_report
from .svg import render_mesh_svg
from .thbspace import THBSpace, dump_thb

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_MODIFIERS = {"lrbno": ("LRBNO", "central"), "tlrbno": ("T-LRBNO", "central"), "diag": ("LRBNO-diag", "diagonal")}


def _degree(text: str):
    try:
        parts = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"degree must look like p1,p2, got {text!r}") from None
    if len(parts) != 2 or min(parts) < 0:
        raise argparse.ArgumentTypeError(f"degree must be two non-negative integers, got {text!r}")
    return parts


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, pattern: bool = True) -> None:
    p.add_argument("--degree", type=_degree, default=(3, 3), metavar="p1,p2")
    p.add_argument("--boundary", choices=("open", "ghost"), default="open")
    p.add_argument("--out-dir", type=Path, default=None, help="write artifacts here instead of stdout")
    p.add_argument("--svg", action="store_true", help="also render an SVG")
    p.add_argument("--csv", action="store_true", help="also write CSV output")
    if pattern:
        p.add_argument("--pattern", choices=("central", "diagonal"), default="central")
        p.add_argument("--levels", type=int, default=3, help="number of hierarchical levels")
        p.add_argument("--cells", type=int, default=None, help="initial cells per side")
        p.add_argument("--band", type=int, default=2, help="diagonal band width in coarse cells")
        p.add_argument("--heavy", action="store_true", help=f"allow {HEAVY_LEVEL} or more levels")


def _space_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("lrb", "thb", "tp"), default="lrb")
    p.add_argument("--mesh", type=Path, default=None, help="LR mesh file to replay instead of a pattern")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="splyne", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    mesh = sub.add_parser("mesh", help="box meshes").add_subparsers(dest="action", required=True,
                                                                      parser_class=_Parser)
    _common(mesh.add_parser("build", help="build the hierarchical mesh of a pattern"))

    space = sub.add_parser("space", help="spline spaces").add_subparsers(dest="action", required=True,
                                                                           parser_class=_Parser)
    p = space.add_parser("build", help="build and dump a spline space")
    _common(p)
    _space_options(p)

    over = sub.add_parser("overload", help="overload analysis").add_subparsers(dest="action", required=True,
                                                                                parser_class=_Parser)
    p = over.add_parser("report", help="per-element function counts")
    _common(p)
    _space_options(p)

    p = sub.add_parser("modify", help="apply an overload-removing modification")
    p.add_argument("rule", choices=sorted(_MODIFIERS))
    _common(p)

    p = sub.add_parser("assemble", help="write mass and stiffness matrices (MatrixMarket)")
    _common(p)
    _space_options(p)

    p = sub.add_parser("cond", help="condition numbers of mass and stiffness")
    _common(p)
    _space_options(p)
    p.add_argument("--heatmap", choices=("min", "max"), default="min",
                   help="eigenvector drawn by --svg")

    exp = sub.add_parser("experiment", help="scenario runs").add_subparsers(dest="action", required=True,
                                                                             parser_class=_Parser)
    p = exp.add_parser("run", help="run the scenarios of a JSON config")
    p.add_argument("config", type=Path)
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--svg", action="store_true", help="render the finest mesh of every scenario")

    study = sub.add_parser("study", help="predefined studies").add_subparsers(dest="action", required=True,
                                                                               parser_class=_Parser)
    p = study.add_parser("boundary", help="open versus single boundary knots, central refinement")
    p.add_argument("--max-level", type=int, default=6)
    p.add_argument("--cells", type=int, default=16)
    p.add_argument("--methods", default=",".join(BOUNDARY_METHODS))
    p.add_argument("--heavy", action="store_true")
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--svg", action="store_true", help="accepted for symmetry; the study emits tables only")
    return ap


# -- helpers -----------------------------------------------------------------------------

def _check_levels(args) -> None:
    if args.levels < 1:
        raise ConfigError("--levels must be at least 1")
    if args.levels >= HEAVY_LEVEL and not args.heavy:
        raise ConfigError(f"{args.levels} levels is a heavy run; pass --heavy to allow it")
    if args.cells is not None and (args.cells < 4 or args.cells % 4):
        raise ConfigError("--cells must be a positive multiple of 4")


def _spec(args):
    _check_levels(args)
    return make_spec(args.pattern, args.levels, args.cells, args.band)


def _method_name(args) -> str:
    base = {"lrb": "LRB", "thb": "THB", "tp": "TP"}[args.method]
    return ("S-" + base) if args.boundary == "ghost" else base


def _space(args):
    if getattr(args, "mesh", None) is not None:
        if args.method != "lrb":
            raise ConfigError("--mesh can only be combined with --method lrb")
        mesh = load_mesh(args.mesh.read_text())
        return lr_construct(mesh, args.degree, args.boundary), mesh
    spec = _spec(args)
    space = build_space(_method_name(args), spec, args.degree)
    return space, space.mesh


def _dump(space) -> str:
    return dump_thb(space) if isinstance(space, THBSpace) else dump_space(space)


class _Sink:
    """Writes named artifacts to ``--out-dir`` or, for the main one, to stdout."""

    def __init__(self, out_dir: Optional[Path]):
        self.out_dir = out_dir
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return (self.out_dir or Path(".")) / name

    def text(self, name: str, text: str, main: bool = False) -> None:
        if main and self.out_dir is None:
            sys.stdout.write(text)
        else:
            self.path(name).write_text(text)


# -- commands ----------------------------------------------------------------------------

def _cmd_mesh(args, sink: _Sink) -> None:
    spec = _spec(args)
    mult = (1, 1) if args.boundary == "ghost" else (args.degree[0] + 1, args.degree[1] + 1)
    mesh = build_hierarchical(spec.extended(args.degree) if args.boundary == "ghost" else spec, mult)
    sink.text("mesh.txt", dump_mesh(mesh), main=True)
    if args.svg:
        render_mesh_svg(mesh, sink.path("mesh.svg"))


def _cmd_space(args, sink: _Sink) -> None:
    space, mesh = _space(args)
    sink.text("space.txt", _dump(space), main=True)
    if args.svg:
        render_mesh_svg(mesh, sink.path("mesh.svg"))
    print(f"# {len(space)} functions", file=sys.stderr)


def _report(space, mesh, args, sink: _Sink, main: bool = True) -> None:
    report = overload_report(space)
    if args.csv or main:
        sink.text("overload.csv", report.to_csv(), main=main and not args.csv)
    if args.svg:
        render_mesh_svg(report, sink.path("overload.svg"), mesh=mesh)
    hist = ", ".join(f"{k}:{v}" for k, v in report.histogram().items())
    print(f"# {len(space)} functions, {len(report.overloaded)} overloaded elements (excess histogram {hist})",
          file=sys.stderr)


def _cmd_overload(args, sink: _Sink) -> None:
    space, mesh = _space(args)
    _report(space, mesh, args, sink)


def _cmd_modify(args, sink: _Sink) -> None:
    method, pattern = _MODIFIERS[args.rule]
    if args.pattern != pattern:
        raise ConfigError(f"modify {args.rule} needs --pattern {pattern}")
    if tuple(args.degree) != (3, 3):
        raise ConfigError("overload modifications are defined for bi-degree 3,3 only")
    if args.boundary == "ghost":
        method = "S-" + method
    space = build_space(method, _spec(args), args.degree)
    sink.text("space.txt", _dump(space), main=True)
    if args.out_dir is not None:
        sink.text("mesh.txt", dump_mesh(space.mesh))
    _report(space, space.mesh, args, sink, main=False)


def _cmd_assemble(args, sink: _Sink) -> None:
    space, _ = _space(args)
    mass, stiff = assemble_pair(space)
    if sink.out_dir is None:
        raise ConfigError("assemble writes MatrixMarket files and needs --out-dir")
    write_matrix_market(mass, sink.path("mass.mtx"))
    write_matrix_market(stiff, sink.path("stiffness.mtx"))
    print(f"# wrote {len(space)}x{len(space)} mass.mtx and stiffness.mtx", file=sys.stderr)


def _cmd_cond(args, sink: _Sink) -> None:
    space, mesh = _space(args)
    mass, stiff = assemble_pair(space)
    em, es = eigensolve(mass), eigensolve(stiff)
    sink.text("cond.txt", f"dofs {len(space)}\ncond_mass {condition_estimate(em):.10e}\n"
                          f"cond_stiffness {condition_estimate(es):.10e}\n", main=True)
    if args.csv:
        write_eigen_csv(em, sink.path("eigen_mass.csv"))
        write_eigen_csv(es, sink.path("eigen_stiffness.csv"))
    if args.svg:
        render_mesh_svg(eigvec_heatmap(space, em, args.heatmap), sink.path("heatmap_mass.svg"), mesh=mesh)


def _cmd_experiment(args, sink: _Sink) -> None:
    try:
        text = args.config.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    scenarios = load_scenarios(text)
    results = run_many(scenarios)
    records = [r for recs in results for r in recs]
    sink.text("records.csv", records_to_csv(records), main=not args.csv)
    if args.csv:
        for s, recs in zip(scenarios, results):
            if "csv" in s.outputs:
                sink.text(f"{s.name}.csv", records_to_csv(recs))
    if args.svg:
        for s in scenarios:
            if "svg" in s.outputs:
                spec = make_spec(s.pattern, s.max_level, s.cells, s.band)
                render_mesh_svg(build_space(s.method, spec, s.degree).mesh, sink.path(f"{s.name}.svg"))


def _cmd_study(args, sink: _Sink) -> None:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in BOUNDARY_METHODS]
    if bad:
        raise ConfigError(f"unsupported boundary-study methods: {', '.join(bad)}")
    records = boundary_study(args.max_level, args.cells, methods, heavy=args.heavy)
    sink.text("boundary.csv", records_to_csv(records), main=not args.csv)


_COMMANDS = {"mesh": _cmd_mesh, "space": _cmd_space, "overload": _cmd_overload, "modify": _cmd_modify,
             "assemble": _cmd_assemble, "cond": _cmd_cond, "experiment": _cmd_experiment,
             "study": _cmd_study}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sink = _Sink(args.out_dir)
        _COMMANDS[args.command](args, sink)
    except (ConfigError, TMeshIncompatible, UnsupportedDegree, MeshError) as exc:
        print(f"splyne: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"splyne: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError) as exc:
        print(f"splyne: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BrokenPipeError:
        sys.stderr.close()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
