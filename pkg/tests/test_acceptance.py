"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import math
import os
import random
import subprocess
import sys
import time
from collections import Counter

import pytest

from rrtw.cnf import SATISFIED, Clause, parse_dimacs, project, restrict, variables, write_dimacs
from rrtw.lemmas import LemmaReport, validate_longclauses, validate_onesided
from rrtw.longclauses import LongClauseBuilder, LongClauseContext
from rrtw.onesided import OneSidedBuilder
from rrtw.oracles import gen_onesided_instance
from rrtw.proof import check_refutation, full_decision_tree_rr, parse_proof, serialize_proof
from rrtw.treedecomp import (PRIMAL, DecompNode, TreeDecomposition, parse_td, postorder, prefix_forest,
                             primal_to_one_sided, validate, write_td)

import support


def verdict(say, number, ok, detail):
    say("CRITERION %d: %s  %s" % (number, "PASS" if ok else "FAIL", detail))


# -- shared builds (timed) ------------------------------------------------------------

@pytest.fixture(scope="session")
def onesided_builds(onesided_corpus):
    out = []
    start = time.perf_counter()
    for cnf, spec in onesided_corpus:
        td = primal_to_one_sided(spec.short_td, cnf)
        b = OneSidedBuilder(cnf, td)
        dag = b.build()
        out.append((cnf, spec, td, dag, b.report, check_refutation(cnf, dag)))
    return out, time.perf_counter() - start


@pytest.fixture(scope="session")
def longclause_builds(longclause_corpus):
    out = []
    start = time.perf_counter()
    for cnf, spec in longclause_corpus:
        b = LongClauseBuilder(cnf, spec)
        dag = b.build()
        out.append((cnf, spec, dag, b.report, check_refutation(cnf, dag)))
    return out, time.perf_counter() - start


# -- 1 ---------------------------------------------------------------------------------

def test_criterion_1_onesided_soundness(onesided_builds, say):
    builds, seconds = onesided_builds
    shape_ok = all(cnf.num_vars <= 12 and spec.short_td.width <= 3
                   and validate(td, one_sided=True, cnf=cnf).width <= 4
                   for cnf, spec, td, _, _, _ in builds)
    accepted = sum(res.accepted for *_, res in builds)
    ok = len(builds) >= 200 and shape_ok and accepted == len(builds) and seconds <= 60.0
    verdict(say, 1, ok, "one-sided: %d/%d accepted, corpus shape ok=%s, %.1fs (limit 60s)"
            % (accepted, len(builds), shape_ok, seconds))
    assert ok


# -- 2 ---------------------------------------------------------------------------------

def test_criterion_2_longclause_soundness(longclause_builds, say):
    builds, seconds = longclause_builds
    shape_ok = all(cnf.num_vars <= 12 and spec.short_td.width <= 3 and 1 <= len(spec.long_ids) <= 2
                   for cnf, spec, *_ in builds)
    accepted = sum(res.accepted for *_, res in builds)
    ok = len(builds) >= 200 and shape_ok and accepted == len(builds) and seconds <= 120.0
    verdict(say, 2, ok, "long clauses: %d/%d accepted, corpus shape ok=%s, %.1fs (limit 120s)"
            % (accepted, len(builds), shape_ok, seconds))
    assert ok


# -- 3 ---------------------------------------------------------------------------------

def test_criterion_3_size_budgets(onesided_builds, longclause_builds, say):
    bad = []
    for cnf, _, td, dag, _, _ in onesided_builds[0]:
        k = td.width
        if len(dag.nodes) > len(td.nodes) * 4 ** (k + 1) * 2 ** (k + 2):
            bad.append(("one-sided", len(dag.nodes)))
    slack = []
    for cnf, spec, dag, report, _ in longclause_builds[0]:
        k = spec.short_td.width
        types = report.decision_types
        if len(dag.nodes) > types * 2 ** (k + 2) * 4 ** (k + 2):
            bad.append(("long nodes", len(dag.nodes)))
        bound = LongClauseContext(cnf, spec).count_bound()
        if types > bound:
            bad.append(("long types", types, bound))
        slack.append(types / bound)
    ok = not bad
    verdict(say, 3, ok, "%d budget violations over %d builds (max types/count_bound %.3f)"
            % (len(bad), len(onesided_builds[0]) + len(longclause_builds[0]), max(slack)))
    assert ok, bad[:5]


# -- 4 ---------------------------------------------------------------------------------

def test_criterion_4_checker_calibration(onesided_builds, longclause_builds, say):
    instances = [b[0] for b in onesided_builds[0]] + [b[0] for b in longclause_builds[0]]
    full_ok = all(check_refutation(cnf, full_decision_tree_rr(cnf)).accepted for cnf in instances)

    targets = [(b[0], b[3]) for b in onesided_builds[0]] + [(b[0], b[2]) for b in longclause_builds[0]]
    targets = [(cnf, dag) for cnf, dag in targets if support.root_sink_paths(dag, 20_000) is not None]
    rng = random.Random(2024)
    counts = Counter()
    problems = []
    for name, op in sorted(support.MUTATIONS.items()):
        applied = 0
        while applied < 100:
            cnf, dag = rng.choice(targets)
            mutant = op(dag, rng)
            if mutant is None:
                continue
            applied += 1
            res = check_refutation(cnf, mutant)
            if res.accepted:
                # tolerated only if it really is a valid refutation
                again = check_refutation(cnf, parse_proof(serialize_proof(mutant))).accepted
                naive = support.naive_verdict(cnf, mutant)
                if again and naive == (True, True):
                    counts[name, "revalidated"] += 1
                else:
                    problems.append((name, "accepted invalid mutant"))
                continue
            counts[name, "rejected"] += 1
            if not all(support.witness_is_concrete(mutant, v) for v in res.violations):
                problems.append((name, "witness missing"))
    ok = full_ok and not problems
    detail = ", ".join("%s %d/%d rejected" % (name, counts[name, "rejected"], 100)
                       for name in sorted(support.MUTATIONS))
    verdict(say, 4, ok, "full decision trees accepted=%s on %d instances; %s; problems=%d"
            % (full_ok, len(instances), detail, len(problems)))
    assert ok, problems[:5]


# -- 5 ---------------------------------------------------------------------------------

def test_criterion_5_lemma_suite(onesided_corpus, longclause_corpus, say):
    total = LemmaReport()
    n_one = n_long = 0
    for cnf, spec in onesided_corpus:
        if cnf.num_vars <= 8:
            total.merge(validate_onesided(cnf, primal_to_one_sided(spec.short_td, cnf)))
            n_one += 1
    for seed in range(40):
        cnf, td = gen_onesided_instance(5000 + seed, 4 + seed % 5, 1 + seed % 4)
        total.merge(validate_onesided(cnf, td))
        n_one += 1
    for cnf, spec in longclause_corpus:
        if cnf.num_vars <= 8 and len(spec.long_ids) <= 2:
            total.merge(validate_longclauses(cnf, spec))
            n_long += 1
    required = ["modularity", "unsatchild", "classify", "invext2", "invprop", "invext3", "succdt",
                "twbound", "fptnum"]
    covered = all(total.checked[name] > 0 for name in required)
    ok = total.ok and covered
    counts = " ".join("%s=%d" % (name, total.checked[name]) for name in required)
    verdict(say, 5, ok, "%d violations over %d one-sided and %d long-clause instances (%s)"
            % (len(total.violations), n_one, n_long, counts))
    assert ok, total.violations[:5]


# -- 6 ---------------------------------------------------------------------------------

CASES = 1000


def _literal_set(rng, max_var=8):
    vs = rng.sample(range(1, max_var + 1), rng.randint(0, max_var))
    return frozenset(v if rng.random() < 0.5 else -v for v in vs)


def _restriction_composes(rng):
    c = Clause(1, _literal_set(rng))
    whole = _literal_set(rng)
    s1 = frozenset(l for l in whole if rng.random() < 0.5)
    s2 = whole - s1
    joint = restrict(c, s1 | s2)
    step = restrict(c, s1)
    step = step if step is SATISFIED else restrict(step, s2)
    if joint is SATISFIED or step is SATISFIED:
        return joint is step
    return joint.lits == step.lits


def _projection_idempotent(rng):
    s = _literal_set(rng)
    vs = set(rng.sample(range(1, 9), rng.randint(0, 8)))
    p = project(s, vs)
    return project(p, vs) == p and variables(p) <= vs


def _validation_rules(rng):
    got, expected = support.validation_case(rng)
    return got == expected


def _prefix_forest(rng):
    return support.check_forests(support.random_binary_tree(rng, rng.randint(1, 64)))


def _proof_round_trip(rng):
    dag = support.random_dag(rng, support.TOY1, rng.randint(0, 14), 3)
    text = serialize_proof(dag)
    back = parse_proof(text)
    return back == dag and serialize_proof(back) == text


def _td_round_trip(rng):
    tree = support.random_binary_tree(rng, rng.randint(1, 20))
    nodes = {u: DecompNode(u, frozenset(rng.sample(range(1, 6), rng.randint(0, 3))), frozenset(),
                           n.parent, n.children) for u, n in tree.nodes.items()}
    td = TreeDecomposition(nodes, 0, PRIMAL, support.Cnf(5, ()))
    back = parse_td(write_td(td), td.cnf, flavor=PRIMAL)
    return {u: (n.var_bag, n.parent, n.children) for u, n in back.nodes.items()} == \
        {u: (n.var_bag, n.parent, n.children) for u, n in td.nodes.items()}


def _dimacs_round_trip(rng):
    cnf = support.Cnf.from_lists([_literal_set(rng, 6) for _ in range(rng.randint(0, 8))], num_vars=6)
    return parse_dimacs(write_dimacs(cnf)) == cnf


PROPERTIES = [
    ("restriction composition", _restriction_composes),
    ("projection idempotence", _projection_idempotent),
    ("decomposition rules", _validation_rules),
    ("prefix forest incremental", _prefix_forest),
    ("proof round-trip", _proof_round_trip),
    ("decomposition round-trip", _td_round_trip),
    ("dimacs round-trip", _dimacs_round_trip),
]


def test_criterion_6_algebra_and_formats(say):
    failures = {}
    for name, prop in PROPERTIES:
        failures[name] = sum(not prop(random.Random(seed)) for seed in range(CASES))
    log_ok = True
    for n in (1, 3, 7, 15, 31, 63):
        td = support.complete_tree(int(math.log2(n + 1)))
        idx = postorder(td)
        widest = max(len(prefix_forest(td, idx, r).trees) for r in range(n + 1))
        log_ok &= len(td.nodes) == n and widest <= math.ceil(math.log2(n + 1))
    ok = log_ok and not any(failures.values())
    verdict(say, 6, ok, "%d properties x %d cases, failures=%d; balanced forest bound ok=%s"
            % (len(PROPERTIES), CASES, sum(failures.values()), log_ok))
    assert ok, failures


# -- 7 ---------------------------------------------------------------------------------

def _cli(args, hashseed):
    env = dict(os.environ, PYTHONHASHSEED=str(hashseed))
    res = subprocess.run([sys.executable, "-m", "rrtw"] + args, capture_output=True, env=env)
    return res.returncode, res.stdout


def test_criterion_7_determinism(onesided_corpus, longclause_corpus, tmp_path, say):
    mismatches = []
    for cnf, spec in onesided_corpus[:25]:
        td = primal_to_one_sided(spec.short_td, cnf)
        a = serialize_proof(OneSidedBuilder(cnf, td).build())
        b = serialize_proof(OneSidedBuilder(cnf, td).build())
        if a != b:
            mismatches.append("one-sided in-process")
    for cnf, spec in longclause_corpus[:25]:
        a = serialize_proof(LongClauseBuilder(cnf, spec).build())
        b = serialize_proof(LongClauseBuilder(cnf, spec).build())
        if a != b:
            mismatches.append("long in-process")

    runs = 0
    jobs = []
    for i, (cnf, spec) in enumerate(onesided_corpus[:3] + longclause_corpus[:3]):
        base = str(tmp_path / ("inst%d" % i))
        with open(base + ".cnf", "w") as f:
            f.write(write_dimacs(cnf))
        with open(base + ".td", "w") as f:
            f.write(write_td(spec.short_td))
        args = ["--cnf", base + ".cnf", "--td", base + ".td"]
        if spec.long_ids:
            ids = ",".join(str(c) for c in sorted(spec.long_ids))
            jobs.append(("long", i, ["build", "long-clauses"] + args + ["--long", ids]))
        else:
            jobs.append(("one-sided", i, ["build", "one-sided"] + args + ["--convert"]))
    for name, i, args in jobs:
        outputs = []
        for hashseed in (0, 1, 4242):
            out = tmp_path / ("%s-%d-%d.rr" % (name, i, hashseed))
            code, stdout = _cli(args + ["--out", str(out)], hashseed)
            outputs.append((code, stdout, out.read_bytes() if out.exists() else None))
            runs += 1
        if len(set(outputs)) != 1 or outputs[0][0] != 0:
            mismatches.append("cli %s on instance %d" % (name, i))
    ok = not mismatches
    verdict(say, 7, ok, "50 in-process rebuilds and %d CLI runs under 3 hash seeds, mismatches=%d"
            % (runs, len(mismatches)))
    assert ok, mismatches
