"""Command line front: experiments in, schema-tagged reports out.

Every subcommand writes its report to --out (or stdout) and exits 0 only
when all of the run's invariant checks held. The ``verify`` subcommand
re-reads any report and re-asserts its row-level claims, exiting 1 on the
first broken row.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .gks import Instance, load_trace, uniform_binary
from .harness import (CODE_HEADER, DET_LB_HEADER, GKS_HEADER, HYDRA_HEADER,
                      TreeSpec, hydra_step_trace, run_code_gen,
                      run_det_lb_experiment, run_gks_experiment,
                      run_hydra_experiment, run_rand_lb_experiment,
                      verify_report, write_csv, write_jsonl)
from .trees import (build_complete_kary_tree, build_factorial_tree,
                    load_tree)


def _tree_spec(args) -> TreeSpec:
    if args.tree == "factorial":
        if args.k is None:
            raise SystemExit("--tree factorial needs --k")
        return TreeSpec(f"factorial-{args.k}", build_factorial_tree(args.k))
    if args.tree == "kary":
        if args.branch is None or args.height is None:
            raise SystemExit("--tree kary needs --branch and --height")
        return TreeSpec(f"kary-{args.branch}-{args.height}",
                        build_complete_kary_tree(args.branch, args.height))
    if args.tree_file is None:
        raise SystemExit("--tree file needs --tree-file")
    return TreeSpec(f"file-{Path(args.tree_file).stem}",
                    load_tree(args.tree_file))


def _emit(args, kind: str, header, rows) -> None:
    if args.format == "csv":
        text = write_csv(args.out, kind, header, rows)
    else:
        text = write_jsonl(args.out, kind, rows)
    if args.out is None:
        sys.stdout.write(text)


def _cmd_hydra(args) -> int:
    spec = _tree_spec(args)
    rows, ok = run_hydra_experiment(
        [spec], [args.adversary], args.runs, master_seed=args.seed,
        behavioral=args.behavioral, variant=args.variant,
        workers=args.workers)
    _emit(args, "hydra", HYDRA_HEADER, rows)
    if args.trace is not None:
        recs = hydra_step_trace(spec, args.adversary, seed=args.seed)
        write_jsonl(args.trace, "trace", recs)
    print(f"hydra: {len(rows)} runs, all checks "
          f"{'passed' if ok else 'FAILED'}", file=sys.stderr)
    return 0 if ok else 1


def _cmd_gks(args) -> int:
    requests = None
    if args.trace_file is not None:
        inst, initial, requests = load_trace(args.trace_file)
    elif args.sizes is not None:
        inst = Instance(tuple(int(s) for s in args.sizes.split("x")))
        initial = (0,) * inst.k
    elif args.k is not None:
        inst = uniform_binary(args.k)
        initial = (0,) * args.k
    else:
        raise SystemExit("gks needs --k, --sizes or --trace-file")
    rows, ok = run_gks_experiment(
        inst, args.mode, args.runs, args.requests, master_seed=args.seed,
        initial=initial, requests=requests, compute_opt=not args.no_opt)
    _emit(args, "gks", GKS_HEADER, rows)
    print(f"gks: {len(rows)} runs, all bounds "
          f"{'held' if ok else 'FAILED'}", file=sys.stderr)
    return 0 if ok else 1


def _cmd_det_lb(args) -> int:
    if args.algorithm == "both":
        algs = ["greedy_stay", "reduction_dfs"]
    else:
        algs = [args.algorithm]
    ks = list(range(args.k_min, args.k_max + 1))
    rows, ok = run_det_lb_experiment(ks, algs, master_seed=args.seed)
    _emit(args, "det_lb", DET_LB_HEADER, rows)
    print(f"det-lb: {len(rows)} runs, "
          f"{'all certified' if ok else 'certification FAILED'}",
          file=sys.stderr)
    return 0 if ok else 1


def _cmd_rand_lb(args) -> int:
    ks = list(range(args.k_min, args.k_max + 1))
    records, ok = run_rand_lb_experiment(
        ks, radius=args.radius, oracle=args.oracle, seed=args.seed,
        samples=args.samples)
    text = write_jsonl(args.out, "rand_lb", records)
    if args.out is None:
        sys.stdout.write(text)
    print(f"rand-lb: {len(records)} runs, "
          f"{'all inequalities held' if ok else 'FAILED'}", file=sys.stderr)
    return 0 if ok else 1


def _cmd_code_gen(args) -> int:
    rows, summary, ok = run_code_gen(args.k, args.radius)
    _emit(args, "code", CODE_HEADER, rows)
    print(f"code: k={summary['k']} radius={summary['radius']} "
          f"size={summary['size']} min_distance={summary['min_distance']} "
          f"covering_ok={summary['covering_ok']}", file=sys.stderr)
    return 0 if ok else 1


def _cmd_verify(args) -> int:
    kind, problems = verify_report(args.report)
    for p in problems:
        print(p, file=sys.stderr)
    print(f"verify: {kind} report, "
          f"{'clean' if not problems else f'{len(problems)} problem(s)'}",
          file=sys.stderr)
    return 0 if not problems else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hydralab",
        description="tree game and uniform-metric server experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None,
                        help="report file (default: stdout)")
        if fmt:
            sp.add_argument("--format", choices=["csv", "jsonl"],
                            default="csv")

    h = sub.add_parser("hydra", help="play the tree game under a policy")
    h.add_argument("--tree", choices=["factorial", "kary", "file"],
                   default="factorial")
    h.add_argument("--k", type=int, default=None,
                   help="order of the factorial tree")
    h.add_argument("--branch", type=int, default=None)
    h.add_argument("--height", type=int, default=None)
    h.add_argument("--tree-file", default=None)
    h.add_argument("--adversary", choices=["greedy", "random", "qleaf"],
                   default="greedy")
    h.add_argument("--runs", type=int, default=1)
    h.add_argument("--behavioral", action="store_true",
                   help="also track one sampled position")
    h.add_argument("--variant", choices=["numba", "python"], default=None)
    h.add_argument("--workers", type=int, default=1)
    h.add_argument("--trace", default=None,
                   help="write an exact per-step JSONL trace here")
    common(h)
    h.set_defaults(fn=_cmd_hydra)

    g = sub.add_parser("gks", help="run the server reduction")
    g.add_argument("--k", type=int, default=None,
                   help="binary instance with k coordinates")
    g.add_argument("--sizes", default=None, help="e.g. 2x3x2")
    g.add_argument("--trace-file", default=None,
                   help="replay a recorded request stream")
    g.add_argument("--mode", choices=["behavioral", "exact", "dfs"],
                   default="behavioral")
    g.add_argument("--requests", type=int, default=100)
    g.add_argument("--runs", type=int, default=1)
    g.add_argument("--no-opt", action="store_true",
                   help="skip the offline optimum")
    common(g)
    g.set_defaults(fn=_cmd_gks)

    d = sub.add_parser("det-lb", help="deterministic penalizer bound")
    d.add_argument("--k-min", type=int, default=3)
    d.add_argument("--k-max", type=int, default=8)
    d.add_argument("--algorithm",
                   choices=["greedy_stay", "reduction_dfs",
                            "reduction_behavioral", "both"],
                   default="both")
    common(d)
    d.set_defaults(fn=_cmd_det_lb)

    r = sub.add_parser("rand-lb", help="randomized herding bound")
    r.add_argument("--k-min", type=int, default=3)
    r.add_argument("--k-max", type=int, default=5)
    r.add_argument("--radius", type=int, default=1)
    r.add_argument("--oracle", choices=["exact", "empirical"],
                   default="exact")
    r.add_argument("--samples", type=int, default=200,
                   help="replica count for the empirical oracle")
    common(r, fmt=False)
    r.set_defaults(fn=_cmd_rand_lb)

    c = sub.add_parser("code-gen", help="greedy distance-2r code")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--radius", type=int, default=1)
    common(c)
    c.set_defaults(fn=_cmd_code_gen)

    v = sub.add_parser("verify", help="re-check a written report")
    v.add_argument("report")
    v.set_defaults(fn=_cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
