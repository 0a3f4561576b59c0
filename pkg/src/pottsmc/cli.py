"""
Command line front end.

Subcommands:
    exact       partition functions, spectral analyses, bound verification
    simulate    heat-bath / Swendsen-Wang trajectories to CSV
    pw          partition width (exact or constructive) with witness
    contours    decomposition dump or exhaustive census on a torus
    experiment  escape-rate experiments driven by a config file

Exit codes: 0 success, 1 internal error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np


def _parse_torus(text):
    from .lattice import TorusSpec

    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError("expected L,d (for example 3,2)")
    return TorusSpec(int(parts[0]), int(parts[1]))


def _load_any_graph(args):
    from .lattice import build_torus, load_graph

    if getattr(args, "torus", None):
        spec = _parse_torus(args.torus)
        return build_torus(spec), spec
    if getattr(args, "graph", None):
        return load_graph(args.graph), None
    raise ValueError("provide --torus L,d or --graph FILE")


def cmd_exact(args):
    from .potts import ModelParams, partition_function_exact
    from .dynamics import hb_matrix, sw_matrix
    from .spectral import analysis_report, report_to_json

    graph, spec = _load_any_graph(args)
    params = ModelParams(args.q, args.beta, spec.dimension if spec else None)
    if args.census:
        if spec is None:
            print("census requires --torus", file=sys.stderr)
            return 2
        from .contour import omega_census

        cen = omega_census(params, spec)
        row = {
            "q": args.q, "beta": args.beta, "L": spec.side_length,
            "d": spec.dimension, "log_Z": cen.log_Z,
            "log_Z_dis": cen.log_Z_dis, "log_Z_ord": cen.log_Z_ord,
            "log_Z_tun": cen.log_Z_tun, "counts": cen.counts,
        }
        print(json.dumps(row, indent=2))
        return 0
    logz = partition_function_exact(params, graph)
    print(f"log Z = {logz:.12f}")
    if args.spectral:
        name = args.torus or args.graph
        for kernel_name, fn in (("hb", hb_matrix), ("sw", sw_matrix)):
            P = fn(params, graph)
            from .spectral import stationary

            mu = stationary(P)
            rep = analysis_report(name, params, kernel_name, P, mu)
            print(report_to_json(rep))
    return 0


def cmd_simulate(args):
    from .potts import ModelParams
    from .dynamics import rng_stream, run_trajectory, write_trajectory_csv

    graph, spec = _load_any_graph(args)
    params = ModelParams(args.q, args.beta, spec.dimension if spec else None)
    if args.ordered_start:
        initial = np.zeros(graph.vertex_count, dtype=np.int64)
    else:
        initial = rng_stream(args.seed, "init").integers(
            0, args.q, size=graph.vertex_count
        )
    rows = run_trajectory(
        params, graph, args.kernel, initial, args.steps, seed=args.seed,
    )
    write_trajectory_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_pw(args):
    from .pwidth import pw_exact, pw_constructive_torus

    if getattr(args, "torus", None):
        spec = _parse_torus(args.torus)
        width, part = pw_constructive_torus(spec.side_length, spec.dimension)
        print(f"constructive PW bound = {width}")
        print(part.to_text())
        return 0
    from .lattice import load_graph

    graph = load_graph(args.graph)
    width, part = pw_exact(graph)
    print(f"PW = {width}")
    print(part.to_text())
    return 0


def cmd_contours(args):
    from .lattice import build_torus
    from .potts import ModelParams, edges_from_hex

    spec = _parse_torus(args.torus)
    if args.census:
        from .contour import piece_count_census

        print(json.dumps(piece_count_census(spec), indent=2))
        return 0
    if args.edges is None:
        print("provide --edges HEX or --census", file=sys.stderr)
        return 2
    from .contour import classify, decomposition_to_json

    params = ModelParams(args.q, args.beta, spec.dimension)
    dec = classify(params, spec, edges_from_hex(args.edges))
    print(decomposition_to_json(dec))
    return 0


def cmd_experiment(args):
    from . import harness

    with open(args.config) as fh:
        config = harness.parse_config(fh.read())
    for key in ("q", "steps", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(config, key, val)
    rows = harness.run_experiment(config, args.kind, out_prefix=args.out)
    for r in rows:
        print(
            f"L={r.L} beta={r.beta:.5f} steps={r.steps} escapes={r.escapes} "
            f"rate={r.rate:.3e} ci=[{r.ci_low:.3e},{r.ci_high:.3e}]"
        )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pottsmc",
        description="Potts model exact analysis and Monte Carlo toolkit",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("exact", help="partition functions and spectral reports")
    p.add_argument("--torus", help="torus as L,d")
    p.add_argument("--graph", help="edge-list file")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--census", action="store_true",
                   help="print the ordered/disordered/tunneling Z decomposition")
    p.add_argument("--spectral", action="store_true",
                   help="print mixing-time and bound reports for both kernels")
    p.set_defaults(fn=cmd_exact)

    p = sub.add_parser("simulate", help="run a trajectory, write CSV")
    p.add_argument("--torus", help="torus as L,d")
    p.add_argument("--graph", help="edge-list file")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--kernel", choices=("hb", "sw"), default="sw")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--ordered-start", action="store_true")
    p.add_argument("--out", default="trajectory.csv")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("pw", help="partition width with witness")
    p.add_argument("--graph", help="edge-list file (exact DP)")
    p.add_argument("--torus", help="torus as L,d (constructive bound)")
    p.set_defaults(fn=cmd_pw)

    p = sub.add_parser("contours", help="contour decomposition / census")
    p.add_argument("--torus", required=True, help="torus as L,d")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--edges", help="bond configuration as hex mask")
    p.add_argument("--census", action="store_true")
    p.set_defaults(fn=cmd_contours)

    p = sub.add_parser("experiment", help="escape-rate experiments")
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--kind", choices=("sw-escape", "hb-persistence"),
                   default="sw-escape")
    p.add_argument("--q", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output prefix for CSV/JSON/SVG")
    p.set_defaults(fn=cmd_experiment)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
