import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrtw.cnf import Cnf
from rrtw.errors import NotRefutable, ParseError
from rrtw.oracles import dpll_unsat
from rrtw.proof import (READ_ONCE, SINK_CLAUSE_UNKNOWN, SINK_NOT_FALSIFIED, STRUCTURE, DagBuilder, Edge,
                        RrDag, RrNode, check_refutation, find_path, full_decision_tree_rr, parse_proof,
                        serialize_proof, stats)

from support import TOY1, naive_verdict, random_dag, toy1_hand_proof


def test_toy1_hand_proof_accepted():
    assert check_refutation(TOY1, toy1_hand_proof()).accepted


def test_swapped_sinks_rejected_with_path():
    dag = toy1_hand_proof()
    nodes = dict(dag.nodes)
    nodes[3] = RrNode(3, clause=3)
    nodes[4] = RrNode(4, clause=1)
    res = check_refutation(TOY1, RrDag(nodes, dag.edges, 1))
    assert not res.accepted and res.kinds() == [SINK_NOT_FALSIFIED]
    v = [v for v in res.violations if v.witness[-1] == 3][0]
    assert v.witness == (1, 3)  # the path {~x1} does not falsify (~x2)


def test_repeated_query_rejected():
    nodes = {1: RrNode(1, var=1), 2: RrNode(2, var=1), 3: RrNode(3, clause=1), 4: RrNode(4, clause=1)}
    edges = [Edge(1, 2, 1), Edge(1, 3, -1), Edge(2, 4, 1), Edge(2, 3, -1)]
    res = check_refutation(TOY1, RrDag(nodes, edges, 1))
    assert READ_ONCE in res.kinds()
    ro = [v for v in res.violations if v.kind == READ_ONCE][0]
    assert ro.witness == (1, 2)


def test_unknown_sink_clause():
    dag = RrDag({1: RrNode(1, clause=9)}, [], 1)
    res = check_refutation(TOY1, dag)
    assert res.kinds() == [SINK_CLAUSE_UNKNOWN] and res.violations[0].witness == (1, 9)


def test_structure_violations():
    # wrong labels
    nodes = {1: RrNode(1, var=1), 2: RrNode(2, clause=1)}
    res = check_refutation(TOY1, RrDag(nodes, [Edge(1, 2, 1), Edge(1, 2, 1)], 1))
    assert res.kinds() == [STRUCTURE]
    # second source and unreachable node
    nodes = {1: RrNode(1, clause=1), 2: RrNode(2, clause=3)}
    res = check_refutation(TOY1, RrDag(nodes, [], 1))
    assert res.kinds() == [STRUCTURE] and all(v.witness for v in res.violations)
    # cycle
    nodes = {1: RrNode(1, var=1), 2: RrNode(2, var=2), 3: RrNode(3, clause=1)}
    edges = [Edge(1, 2, 1), Edge(1, 3, -1), Edge(2, 1, 2), Edge(2, 3, -2)]
    res = check_refutation(TOY1, RrDag(nodes, edges, 1))
    assert STRUCTURE in res.kinds()
    assert any("cycle" in v.message for v in res.violations)


def test_parallel_edges_allowed():
    cnf = Cnf.from_lists([[]])
    nodes = {1: RrNode(1, var=1), 2: RrNode(2, clause=1)}
    assert check_refutation(Cnf(1, cnf.clauses), RrDag(nodes, [Edge(1, 2, 1), Edge(1, 2, -1)], 1)).accepted


def test_round_trip_and_normalization():
    text = serialize_proof(toy1_hand_proof())
    assert text.splitlines()[0] == "rr 5 4 1"
    assert serialize_proof(parse_proof(text)) == text
    shuffled = "c comment\n" + "\n".join(reversed(text.splitlines()[1:])) + "\nrr 5 4 1\n"
    assert serialize_proof(parse_proof(shuffled)) == text


@pytest.mark.parametrize("text", [
    "n 1 s 1\n",
    "rr 1 0 1\nn 1 s 1\nn 1 s 2\n",
    "rr 2 2 1\nn 1 v 1\nn 2 s 1\ne 1 2 1\ne 1 3 -1\n",
    "rr 2 1 1\nn 1 v 1\nn 2 s 1\ne 1 2 1\n",
    "rr 2 2 1\nn 1 v 1\nn 2 s 1\ne 1 2 1\ne 1 2 2\n",
    "rr 1 1 1\nn 1 s 1\ne 1 1 1\n",
    "rr 1 0 2\nn 1 s 1\n",
    "rr 1 0 1\nn 1 q 1\n",
    "rr 1 0 1\nn x s 1\n",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_proof(text)


def test_full_decision_tree_examples():
    dag = full_decision_tree_rr(TOY1, [1, 2])
    assert len(dag.nodes) == 7 and check_refutation(TOY1, dag).accepted
    with pytest.raises(NotRefutable) as exc:
        full_decision_tree_rr(Cnf.from_lists([[1]]))
    assert exc.value.witness == frozenset({1})
    empty = Cnf.from_lists([[1], []])
    dag = full_decision_tree_rr(Cnf.from_lists([[]]))
    assert len(dag.nodes) == 1 and dag.nodes[dag.root].clause == 1
    dag = full_decision_tree_rr(empty)
    assert check_refutation(empty, dag).accepted
    with pytest.raises(ValueError):
        full_decision_tree_rr(TOY1, [1])


def test_stats_examples():
    s = stats(toy1_hand_proof())
    assert (s.nodes, s.edges, s.sinks, s.depth, s.variables) == (5, 4, 3, 2, 2)
    one = stats(RrDag({1: RrNode(1, clause=1)}, [], 1))
    assert (one.nodes, one.edges) == (1, 0)
    assert stats(full_decision_tree_rr(TOY1)).nodes == 7


def test_builder_shares_sinks_and_trims():
    b = DagBuilder()
    root = b.alloc()
    orphan = b.alloc()
    b.decision(root, 1, b.sink(1), b.sink(1))
    b.decision(orphan, 2, b.sink(3), b.sink(3))
    dag = b.finish(root)
    assert len(dag.nodes) == 2 and dag.root == 1


def test_find_path_avoids_label():
    dag = toy1_hand_proof()
    assert find_path(dag, 1, 4) == [1, 2, 4]
    assert find_path(dag, 1, 4, avoid_label=1) is None


# -- random DAGs against path enumeration ------------------------------------------

@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 14))
def test_checker_matches_path_enumeration(seed, n_decisions):
    rng = random.Random(seed)
    num_vars = rng.randint(1, 4)
    cnf = Cnf.from_lists([[l for l in (rng.choice((v, -v)) for v in range(1, num_vars + 1)) if rng.random() < 0.5]
                          for _ in range(rng.randint(1, 5))], num_vars=num_vars)
    dag = random_dag(rng, cnf, n_decisions, num_vars)
    res = check_refutation(cnf, dag)
    assert STRUCTURE not in res.kinds()
    read_once, sinks = naive_verdict(cnf, dag)
    assert (READ_ONCE not in res.kinds()) == read_once
    assert (SINK_NOT_FALSIFIED not in res.kinds() and SINK_CLAUSE_UNKNOWN not in res.kinds()) == sinks
    assert res.accepted == (read_once and sinks)
    if res.accepted:
        assert dpll_unsat(cnf).unsat


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 14))
def test_proof_round_trip_random(seed, n_decisions):
    rng = random.Random(seed)
    dag = random_dag(rng, TOY1, n_decisions, 3)
    text = serialize_proof(dag)
    back = parse_proof(text)
    assert back == dag
    assert serialize_proof(back) == text
