"""Command-line entry point: ``rspace gen|build|query|bench|linkexp``.

Exit status is 0 on success, 2 for user errors (bad input, bad query) and 3
when an internal consistency check fails.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from ..errors import RSpaceError
from ..linkstats import LinkPolicy
from ..space import space_to_xml
from ..store import corpus_to_xml
from . import gen, harness, linkexp
from ..executor import ENGINES

EXIT_OK = 0
EXIT_USER = 2
EXIT_INTERNAL = 3


def _write(out: Optional[str], text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _policy(args) -> LinkPolicy:
    return LinkPolicy.parse(args.policy, args.seed)


def do_gen(args) -> int:
    cfg = gen.GenConfig(resources=args.resources, seed=args.seed)
    space, corpus = gen.generate(cfg)
    out = Path(args.out or "data")
    out.mkdir(parents=True, exist_ok=True)
    (out / "schema.xml").write_text(space_to_xml(space), encoding="utf-8")
    (out / "corpus.xml").write_text(corpus_to_xml(corpus), encoding="utf-8")
    if args.queries:
        points = sorted({r.point for r in corpus}, key=lambda p: p.key)
        work = gen.generate_workload(space, args.queries, args.seed, points)
        (out / "workload.txt").write_text("\n".join(work) + "\n", encoding="utf-8")
    print(f"wrote {len(corpus)} resources over {len(space)} dimensions to {out}")
    return EXIT_OK


def do_build(args) -> int:
    text, st = harness.cmd_build(args.schema, args.corpus, _policy(args), None, split=not args.no_split)
    _write(args.out, text)
    for k in sorted(st):
        print(f"{k}={st[k]}", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def do_query(args) -> int:
    if args.query_file:
        text = Path(args.query_file).read_text(encoding="utf-8")
    elif args.query:
        text = args.query
    else:
        raise RSpaceError("give --query or --query-file")
    out = harness.cmd_query(args.schema, args.corpus, text, args.engine, args.index, _policy(args))
    _write(args.out, out)
    return EXIT_OK


def do_bench(args) -> int:
    report = harness.cmd_bench(args.schema, args.corpus, args.workload, _policy(args), args.index)
    _write(args.out, report.to_csv())
    med = report.medians()
    print("median comparisons " + " ".join(f"{e}={med[e]:g}" for e in ENGINES if e in med),
          file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def do_linkexp(args) -> int:
    cfg = linkexp.LinkExpConfig(args.coords, args.levels, args.max_count, args.seed)
    report = linkexp.run_linkexp(cfg)
    _write(args.out, report.to_csv())
    sink = sys.stderr if args.out in (None, "-") else sys.stdout
    for s in report.summary.values():
        print(f"{s.policy}: expected={s.expected:.1f} sampled={s.sampled} sigma={s.sigma:.1f}", file=sink)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--policy", default="bounded", help="logistic | bounded | general:<a>")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    p = argparse.ArgumentParser(prog="rspace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    # gen writes a directory; its --out defaults to ./data in do_gen since the
    # shared parent action must keep a None default for the other commands
    g = sub.add_parser("gen", parents=[common], help="generate schema, corpus and workload")
    g.add_argument("--resources", type=int, default=1000)
    g.add_argument("--queries", type=int, default=0, help="also write a workload of N queries")
    g.set_defaults(func=do_gen)

    for name, func in (("build", do_build), ("query", do_query), ("bench", do_bench)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--schema", required=True)
        s.add_argument("--corpus", required=True)
        s.set_defaults(func=func)
        if name != "build":
            s.add_argument("--index", default=None, help="serialized graph index (built if absent)")
        if name == "build":
            s.add_argument("--no-split", action="store_true")
        if name == "query":
            s.add_argument("--engine", choices=ENGINES, default="graph")
            s.add_argument("--query", default=None)
            s.add_argument("--query-file", default=None)
        if name == "bench":
            s.add_argument("--workload", required=True)

    x = sub.add_parser("linkexp", parents=[common], help="expected vs sampled intersection links")
    x.add_argument("--coords", type=int, default=100)
    x.add_argument("--levels", type=int, default=14)
    x.add_argument("--max-count", type=int, default=1000)
    x.set_defaults(func=do_linkexp)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AssertionError as e:
        print(f"internal check failed: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except (RSpaceError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
