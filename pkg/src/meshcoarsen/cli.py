"""Command line interface.

Subcommands::

    meshcoarsen refine  --strategy S --input F --marked all|IDS|circle CX CY R|disk CX CY R --out F
    meshcoarsen coarsen --strategy S --input F --marked ... --out F [--policy any|all] [--iterate]
    meshcoarsen demo circle|local --strategy S [--steps K] [--out DIR_OR_FILE]
    meshcoarsen bench scaling --strategy S --max-level K [--reps R] --out CSV
    meshcoarsen export-svg --input F --out F [--no-hanging] [--no-fill]
    meshcoarsen init --strategy S --out F

Element ids in ``--marked`` lists are 1-based, like node indices in mesh
files.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import bench_scaling
from .demos import circle_marks, demo_circle, demo_local_coarsening, disk_marks
from .io import load_mesh, read_strategy, save_mesh
from .mesh import MeshError, same_mesh
from .strategies import STRATEGIES, get_strategy
from .svg import export_svg


def parse_marked(tokens, mesh):
    """Translate ``--marked`` tokens into an index array or ``"all"``."""
    if not tokens:
        raise MeshError("--marked needs a value")
    head = tokens[0].lower()
    if head == "all":
        if len(tokens) != 1:
            raise MeshError("'all' takes no further values")
        return "all"
    if head in ("circle", "disk"):
        if len(tokens) != 4:
            raise MeshError(f"'{head}' needs CX CY R")
        cx, cy, r = (float(t) for t in tokens[1:])
        return (circle_marks if head == "circle" else disk_marks)(mesh, cx, cy, r)
    ids = []
    for tok in tokens:
        for part in tok.split(","):
            if part:
                try:
                    ids.append(int(part) - 1)
                except ValueError:
                    raise MeshError(f"bad element id {part!r}") from None
    ids = np.array(ids, np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= mesh.n_elements):
        raise MeshError(f"element ids must lie in 1..{mesh.n_elements}")
    return ids


def _strategy_for(args, path):
    name = args.strategy or read_strategy(path)
    if not name:
        raise MeshError("no --strategy given and the input file has no strategy tag")
    return get_strategy(name)


def cmd_init(args):
    s = get_strategy(args.strategy)
    save_mesh(s.initial(), args.out, strategy=s.name)


def cmd_refine(args):
    s = _strategy_for(args, args.input)
    mesh = load_mesh(args.input)
    out = s.refine(mesh, parse_marked(args.marked, mesh))
    save_mesh(out, args.out, strategy=s.name)
    print(f"{s.name}: {mesh.n_elements} -> {out.n_elements} elements, {len(out.coordinates)} nodes")


def cmd_coarsen(args):
    s = _strategy_for(args, args.input)
    mesh = load_mesh(args.input)
    steps = 0
    cur = mesh
    while True:
        marked = parse_marked(args.marked, cur)
        new = s.coarsen(cur, marked, policy=args.policy)
        if same_mesh(new, cur):
            cur = new
            break
        cur = new
        steps += 1
        if not args.iterate:
            break
    save_mesh(cur, args.out, strategy=s.name)
    print(f"{s.name}: {mesh.n_elements} -> {cur.n_elements} elements in {steps} step(s)")


def cmd_demo(args):
    if args.which == "circle":
        res = demo_circle(args.strategy, args.steps, out_dir=args.out)
        for r in res.records:
            print(f"{r['phase']:8s} {r['step']:4d} nodes={r['nodes']:7d} elements={r['elements']:7d} "
                  f"seconds={r['seconds']:.4f}")
        print(f"refinement steps {res.refine_steps}, coarsening steps {res.coarsen_steps}, "
              f"initial mesh restored: {same_mesh(res.final, res.meshes[0])}")
    else:
        mesh = demo_local_coarsening(args.strategy, levels=args.steps or 4, out=args.out)
        print(f"{args.strategy}: {mesh.n_elements} elements, {len(mesh.coordinates)} nodes")


def cmd_bench(args):
    rows = bench_scaling(args.strategy, args.max_level, reps=args.reps, out=args.out)
    for r in rows:
        print(f"{r['step']},{r['nodes']},{r['elements']},{r['seconds']:.6g}")


def cmd_export_svg(args):
    export_svg(load_mesh(args.input), args.out, show_hanging=not args.no_hanging, fill_blocks=not args.no_fill)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meshcoarsen", description="Adaptive refinement and coarsening of 2D meshes.")
    sub = p.add_subparsers(dest="command", required=True)
    names = sorted(STRATEGIES)

    q = sub.add_parser("init", help="write the default initial mesh of a strategy")
    q.add_argument("--strategy", required=True, choices=names)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_init)

    for name, func in (("refine", cmd_refine), ("coarsen", cmd_coarsen)):
        q = sub.add_parser(name, help=f"{name} a mesh file")
        q.add_argument("--strategy", choices=names)
        q.add_argument("--input", required=True)
        q.add_argument("--marked", nargs="+", required=True, metavar="M")
        q.add_argument("--out", required=True)
        if name == "coarsen":
            q.add_argument("--policy", choices=["any", "all"], default="any")
            q.add_argument("--iterate", action="store_true", help="repeat until the mesh stops changing")
        q.set_defaults(func=func)

    q = sub.add_parser("demo", help="run a demo")
    q.add_argument("which", choices=["circle", "local"])
    q.add_argument("--strategy", required=True, choices=names)
    q.add_argument("--steps", type=int, default=5, help="refinement steps (circle) or uniform levels (local)")
    q.add_argument("--out", help="frame directory (circle) or SVG file (local)")
    q.set_defaults(func=cmd_demo)

    q = sub.add_parser("bench", help="benchmarks")
    q.add_argument("which", choices=["scaling"])
    q.add_argument("--strategy", required=True, choices=names)
    q.add_argument("--max-level", type=int, required=True)
    q.add_argument("--reps", type=int, default=5)
    q.add_argument("--out")
    q.set_defaults(func=cmd_bench)

    q = sub.add_parser("export-svg", help="render a mesh file as SVG")
    q.add_argument("--input", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--no-hanging", action="store_true")
    q.add_argument("--no-fill", action="store_true")
    q.set_defaults(func=cmd_export_svg)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (MeshError, OSError, ValueError, IndexError) as exc:
        print(f"meshcoarsen: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
