"""Command line entry point.

Exit codes: 0 success or accepted, 1 rejected or rule violation (including a
satisfiable input), 2 usage or I/O error, 3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .cnf import PRIMAL, INCIDENCE, build_graph, parse_dimacs, write_dimacs
from .errors import InternalBug, InvalidDecomposition, NotRefutable, ParseError
from .longclauses import LongClauseBuilder, choose_long_clauses, prepare_spec
from .onesided import OneSidedBuilder
from .oracles import (MAX_RESAMPLES, PREFIX_VAR_GUARD, GenerationFailed, InstanceRecipe,
                      dpll_unsat, gen_instances)
from .proof import check_refutation, parse_proof, serialize_proof, stats
from .treedecomp import heuristic_td, parse_td, primal_to_one_sided, validate, write_td

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_BUG = 3


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)


def _load_cnf(args):
    return parse_dimacs(_read(args.cnf))


def _parse_ids(value):
    if os.path.isfile(value):
        tokens = _read(value).decode("ascii").split()
    else:
        tokens = [t for t in value.split(",") if t.strip()]
    try:
        return frozenset(int(t) for t in tokens)
    except ValueError:
        raise ParseError("bad clause id list %r" % value) from None


def _self_check(cnf, dag):
    result = check_refutation(cnf, dag)
    if not result.accepted:
        raise InternalBug("built proof rejected by the checker: %s" % result.violations[0])


def cmd_check(args):
    cnf = _load_cnf(args)
    dag = parse_proof(_read(args.proof))
    result = check_refutation(cnf, dag)
    if result.accepted:
        print("ACCEPTED")
        return EXIT_OK
    print("REJECTED")
    for v in result.violations:
        print(str(v), file=sys.stderr)
    return EXIT_REJECT


def _emit_build(args, cnf, dag, report_lines):
    _self_check(cnf, dag)
    _write(args.out, serialize_proof(dag))
    print("status=ACCEPTED")
    for line in report_lines:
        print(line)
    return EXIT_OK


def cmd_build_onesided(args):
    cnf = _load_cnf(args)
    td = parse_td(_read(args.td), cnf)
    if td.flavor == PRIMAL and args.convert:
        td = primal_to_one_sided(td, cnf)
    builder = OneSidedBuilder(cnf, td)
    dag = builder.build()
    return _emit_build(args, cnf, dag, builder.report.lines())


def cmd_build_long(args):
    cnf = _load_cnf(args)
    if args.auto_long is not None:
        spec = choose_long_clauses(cnf, args.auto_long)
    else:
        if args.td is None or args.long is None:
            raise ParseError("--td and --long are required unless --auto-long is given")
        long_ids = _parse_ids(args.long)
        short = cnf.without(long_ids)
        td = parse_td(_read(args.td), short, flavor=PRIMAL)
        spec = prepare_spec(cnf, long_ids, td)
    builder = LongClauseBuilder(cnf, spec)
    dag = builder.build()
    lines = builder.report.lines() + ["long_ids=%s" % ",".join(str(i) for i in sorted(spec.long_ids))]
    return _emit_build(args, cnf, dag, lines)


def cmd_td_validate(args):
    cnf = _load_cnf(args)
    td = parse_td(_read(args.td), cnf)
    report = validate(td, one_sided=args.one_sided, cnf=cnf)
    print("flavor=%s" % td.flavor)
    print("width=%d" % report.width)
    if report.ok:
        print("status=VALID")
        return EXIT_OK
    print("status=INVALID")
    for v in report.violations:
        print(str(v), file=sys.stderr)
    return EXIT_REJECT


def cmd_td_convert(args):
    cnf = _load_cnf(args)
    td = parse_td(_read(args.td), cnf, flavor=PRIMAL)
    report = validate(td, cnf=cnf)
    if not report.ok:
        for v in report.violations:
            print(str(v), file=sys.stderr)
        return EXIT_REJECT
    _write(args.out, write_td(primal_to_one_sided(td, cnf)))
    return EXIT_OK


def cmd_td_heuristic(args):
    cnf = _load_cnf(args)
    flavor = INCIDENCE if args.incidence else PRIMAL
    _write(args.out, write_td(heuristic_td(build_graph(cnf, flavor), cnf)))
    return EXIT_OK


def cmd_oracle_unsat(args):
    verdict = dpll_unsat(_load_cnf(args))
    print(verdict.status)
    if verdict.unsat:
        return EXIT_OK
    print("v " + " ".join(str(l) for l in sorted(verdict.witness, key=abs)) + " 0")
    return EXIT_REJECT


def cmd_gen(args):
    recipe = InstanceRecipe(args.seed, args.vars, args.width, args.long_clauses, args.density)
    cnf, spec = gen_instances(recipe)
    prefix = args.out_prefix
    _write(prefix + ".cnf", write_dimacs(cnf))
    _write(prefix + ".td", write_td(spec.short_td))
    _write(prefix + ".long", "".join("%d\n" % i for i in sorted(spec.long_ids)))
    print("clauses=%d" % len(cnf))
    print("long_ids=%s" % ",".join(str(i) for i in sorted(spec.long_ids)))
    print("width=%d" % spec.short_td.width)
    return EXIT_OK


def cmd_stats(args):
    for line in stats(parse_proof(_read(args.proof))).lines():
        print(line)
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog="rrtw", description="Build and check regular resolution refutations.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="check a proof against a CNF")
    c.add_argument("--cnf", required=True)
    c.add_argument("--proof", required=True)
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("build", help="construct a refutation")
    bsub = b.add_subparsers(dest="regime", required=True)
    o = bsub.add_parser("one-sided", help="from a one-sided incidence decomposition")
    o.add_argument("--cnf", required=True)
    o.add_argument("--td", required=True)
    o.add_argument("--out", required=True)
    o.add_argument("--convert", action="store_true",
                   help="accept a primal decomposition and convert it first")
    o.set_defaults(func=cmd_build_onesided)
    lc = bsub.add_parser("long-clauses", help="from a primal decomposition of the short clauses")
    lc.add_argument("--cnf", required=True)
    lc.add_argument("--td", help="primal decomposition of the CNF without the long clauses")
    lc.add_argument("--long", help="comma separated clause ids, or a file with one id per line")
    lc.add_argument("--auto-long", type=int, metavar="P",
                    help="treat the P widest clauses as long and decompose the rest heuristically")
    lc.add_argument("--out", required=True)
    lc.set_defaults(func=cmd_build_long)

    t = sub.add_parser("td", help="tree decomposition utilities")
    tsub = t.add_subparsers(dest="td_command", required=True)
    v = tsub.add_parser("validate")
    v.add_argument("--cnf", required=True)
    v.add_argument("--td", required=True)
    v.add_argument("--one-sided", action="store_true")
    v.set_defaults(func=cmd_td_validate)
    cv = tsub.add_parser("convert", help="primal to one-sided incidence decomposition")
    cv.add_argument("--cnf", required=True)
    cv.add_argument("--td", required=True)
    cv.add_argument("--out")
    cv.set_defaults(func=cmd_td_convert)
    h = tsub.add_parser("heuristic", help="min-fill decomposition")
    h.add_argument("--cnf", required=True)
    h.add_argument("--out")
    h.add_argument("--incidence", action="store_true")
    h.set_defaults(func=cmd_td_heuristic)

    orc = sub.add_parser("oracle", help="brute-force deciders")
    osub = orc.add_subparsers(dest="oracle_command", required=True)
    u = osub.add_parser("unsat", help="DPLL satisfiability check")
    u.add_argument("--cnf", required=True)
    u.set_defaults(func=cmd_oracle_unsat)

    g = sub.add_parser("gen", help="random unsatisfiable instance",
                       description="Resampling gives up after %d attempts; the exhaustive "
                                   "interesting-pair scan is limited to %d prefix variables."
                                   % (MAX_RESAMPLES, PREFIX_VAR_GUARD))
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--vars", type=int, required=True)
    g.add_argument("--width", type=int, required=True)
    g.add_argument("--long-clauses", type=int, default=0)
    g.add_argument("--density", type=float, default=InstanceRecipe.density)
    g.add_argument("--out-prefix", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("stats", help="size statistics of a proof")
    s.add_argument("--proof", required=True)
    s.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except InternalBug as exc:
        print("internal error: %s" % exc, file=sys.stderr)
        return EXIT_BUG
    except (ParseError, OSError, UnicodeDecodeError, GenerationFailed) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (InvalidDecomposition, NotRefutable, ValueError) as exc:
        print("rejected: %s" % exc, file=sys.stderr)
        return EXIT_REJECT


if __name__ == "__main__":
    sys.exit(main())
