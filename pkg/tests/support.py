"""Shared fixtures data and helpers for the test suite."""

import itertools
import random

from rrtw.cnf import PRIMAL, Cnf, build_graph, var
from rrtw.oracles import InstanceRecipe, gen_instances
from rrtw.proof import Edge, RrDag, RrNode
from rrtw.treedecomp import (DecompNode, PrefixForest, TreeDecomposition, extend, heuristic_td, postorder,
                             prefix_forest, tree_interval, validate)

# x1, then x2 forced, then (~x2) falsified
TOY1 = Cnf.from_lists([[1], [-1, 2], [-2]])
# three unit negations against one positive long clause
TOY2 = Cnf.from_lists([[-1], [-2], [-3], [1, 2, 3]])
TOY3 = Cnf.from_lists([[1, 2], [1, -2], [-1, 3], [-1, -3]])


def toy1_hand_proof():
    nodes = {1: RrNode(1, var=1), 2: RrNode(2, var=2), 3: RrNode(3, clause=1),
             4: RrNode(4, clause=3), 5: RrNode(5, clause=2)}
    edges = [Edge(1, 2, 1), Edge(1, 3, -1), Edge(2, 4, 2), Edge(2, 5, -2)]
    return RrDag(nodes, edges, 1)


def toy2_chain():
    short = TOY2.without({4})
    return TreeDecomposition.from_bags({1: {1}, 2: {2}, 3: {3}}, [(1, 2), (2, 3)], root=3, cnf=short)


def toy3_td():
    bags = {"r": {1}, "a": ({1, 2}, {1, 2}), "b": ({1, 3}, {3, 4})}
    return TreeDecomposition.from_bags(bags, [("r", "a"), ("r", "b")], root="r",
                                       flavor="incidence", cnf=TOY3)


def onesided_recipes(count, max_vars=12, seed0=0):
    return [InstanceRecipe(seed0 + i, 3 + i % (max_vars - 2), 1 + i % 3, 0) for i in range(count)]


def longclause_recipes(count, max_vars=12, seed0=10_000):
    return [InstanceRecipe(seed0 + i, 4 + i % (max_vars - 3), 1 + i % 3, 1 + i % 2) for i in range(count)]


def generate(recipes):
    return [gen_instances(r) for r in recipes]


# -- path enumeration ----------------------------------------------------------

def root_sink_paths(dag, limit=100_000):
    """All root-to-sink paths as (sink id, literal list); None past ``limit``."""
    out = []
    stack = [(dag.root, [])]
    while stack:
        u, lits = stack.pop()
        if dag.nodes[u].is_sink:
            out.append((u, lits))
            if len(out) > limit:
                return None
            continue
        for e in dag.out_edges[u]:
            stack.append((e.dst, lits + [e.lit]))
    return out


def naive_verdict(cnf, dag):
    """(read_once_ok, sinks_ok) from explicit path enumeration."""
    read_once = True
    sinks = True
    for sink, lits in root_sink_paths(dag):
        vs = [var(l) for l in lits]
        if len(vs) != len(set(vs)):
            read_once = False
        c = cnf.by_id.get(dag.nodes[sink].clause)
        if c is None or not all(-l in lits for l in c.lits):
            sinks = False
    return read_once, sinks


# -- mutation operators ----------------------------------------------------------

def _copy(dag, nodes=None, edges=None):
    return RrDag(dict(nodes if nodes is not None else dag.nodes),
                 list(edges if edges is not None else dag.edges), dag.root)


def swap_sink_labels(dag, rng):
    sinks = [s for s in dag.sinks()]
    pairs = [(a, b) for a in sinks for b in sinks if a.id < b.id and a.clause != b.clause]
    if not pairs:
        return None
    a, b = rng.choice(pairs)
    nodes = dict(dag.nodes)
    nodes[a.id] = RrNode(a.id, clause=b.clause)
    nodes[b.id] = RrNode(b.id, clause=a.clause)
    return _copy(dag, nodes=nodes)


def flip_edge_label(dag, rng):
    if not dag.edges:
        return None
    i = rng.randrange(len(dag.edges))
    edges = list(dag.edges)
    e = edges[i]
    edges[i] = Edge(e.src, e.dst, -e.lit)
    return _copy(dag, edges=edges)


def redirect_to_repeat(dag, rng):
    """Point an edge at a node that queries a variable already queried above it."""
    above = {u: set() for u in dag.nodes}
    for u in _topo(dag):
        n = dag.nodes[u]
        here = above[u] | ({n.var} if not n.is_sink else set())
        for e in dag.out_edges[u]:
            above[e.dst] |= here
    candidates = []
    by_var = {}
    for u, n in dag.nodes.items():
        if not n.is_sink:
            by_var.setdefault(n.var, []).append(u)
    for i, e in enumerate(dag.edges):
        reach = above[e.src] | {dag.nodes[e.src].var}
        for v in sorted(reach):
            for target in by_var.get(v, ()):
                if target != e.dst and not _reaches(dag, target, e.src):
                    candidates.append((i, target))
    if not candidates:
        return None
    i, target = rng.choice(candidates)
    edges = list(dag.edges)
    e = edges[i]
    edges[i] = Edge(e.src, target, e.lit)
    return _copy(dag, edges=edges)


def _topo(dag):
    indeg = {u: len(dag.in_edges[u]) for u in dag.nodes}
    ready = sorted(u for u, d in indeg.items() if d == 0)
    out = []
    while ready:
        u = ready.pop()
        out.append(u)
        for e in dag.out_edges[u]:
            indeg[e.dst] -= 1
            if indeg[e.dst] == 0:
                ready.append(e.dst)
    return out


def _reaches(dag, a, b):
    seen = {a}
    stack = [a]
    while stack:
        u = stack.pop()
        if u == b:
            return True
        for e in dag.out_edges[u]:
            if e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    return False


MUTATIONS = {
    "swap_sink_labels": swap_sink_labels,
    "flip_edge_label": flip_edge_label,
    "redirect_to_repeat": redirect_to_repeat,
}


def witness_is_concrete(dag, violation):
    """The witness names existing nodes, and path witnesses follow real edges."""
    from rrtw.proof import READ_ONCE, SINK_NOT_FALSIFIED

    w = violation.witness
    if not w:
        return False
    if violation.kind in (READ_ONCE, SINK_NOT_FALSIFIED):
        if any(u not in dag.nodes for u in w):
            return False
        for a, b in zip(w, w[1:]):
            if not any(e.dst == b for e in dag.out_edges[a]):
                return False
        if violation.kind == SINK_NOT_FALSIFIED and w[0] != dag.root:
            return False
        if violation.kind == READ_ONCE and dag.nodes[w[0]].var != dag.nodes[w[-1]].var:
            return False
    return True


def seeded(seed):
    return random.Random(seed)


# -- random structures shared by property tests --------------------------------------

def complete_tree(depth):
    """Complete binary tree with 2^depth - 1 nodes, ids in heap order."""
    n = 2 ** depth - 1
    bags = {i: frozenset() for i in range(1, n + 1)}
    edges = [(i, c) for i in range(1, n + 1) for c in (2 * i, 2 * i + 1) if c <= n]
    return TreeDecomposition.from_bags(bags, edges, root=1)


def random_binary_tree(rng, n):
    parent = {0: None}
    kids = {0: []}
    for i in range(1, n):
        p = rng.choice([u for u in kids if len(kids[u]) < 2])
        kids[p].append(i)
        kids[i] = []
        parent[i] = p
    nodes = {u: DecompNode(u, frozenset(), frozenset(), parent[u], tuple(kids[u])) for u in kids}
    return TreeDecomposition(nodes, 0)


def check_forests(td):
    """Incremental prefix forests equal recomputed ones and tile the prefix in order."""
    idx = postorder(td)
    forest = PrefixForest(0, ())
    for r in range(len(idx.order) + 1):
        if forest != prefix_forest(td, idx, r):
            return False
        covered = []
        for root in forest.trees:
            lo, hi = tree_interval(td, idx, root)
            covered.extend(range(lo, hi + 1))
        if covered != list(range(r)):
            return False
        if r < len(idx.order):
            forest = extend(td, idx, forest)
    return True


def validation_case(rng):
    """Drop one vertex from a valid primal decomposition.

    Returns (validator verdict, verdict of an independent restatement of the rules).
    """
    n = rng.randint(2, 6)
    cnf = Cnf.from_lists([sorted(rng.sample(range(1, n + 1), rng.randint(1, min(3, n))))
                          for _ in range(rng.randint(1, 5))], num_vars=n)
    td = heuristic_td(build_graph(cnf, PRIMAL), cnf)
    if not validate(td, cnf=cnf).ok:
        return False, True
    u = rng.choice(sorted(w for w in td.nodes if td.nodes[w].var_bag))
    v = rng.choice(sorted(td.nodes[u].var_bag))
    nodes = dict(td.nodes)
    nodes[u] = DecompNode(u, nodes[u].var_bag - {v}, frozenset(), nodes[u].parent, nodes[u].children)
    broken = TreeDecomposition(nodes, td.root, PRIMAL, cnf)
    holders = {x: {w for w, b in nodes.items() if x in b.var_bag} for x in cnf.vars}
    union_ok = all(holders[x] for x in cnf.vars)
    cont_ok = all(any({a, b} <= nodes[w].var_bag for w in nodes)
                  for c in cnf for a, b in itertools.combinations(sorted(c.vars), 2))

    def connected(ws):
        return len([w for w in ws if nodes[w].parent not in ws]) <= 1

    conn_ok = all(connected(holders[x]) for x in cnf.vars)
    return validate(broken, cnf=cnf).ok, union_ok and cont_ok and conn_ok


def random_dag(rng, cnf, n_decisions, num_vars):
    """Random single-source DAG of decisions over ``num_vars``; sinks may name unknown clause 99."""
    n_sinks = rng.randint(1, 4)
    total = n_decisions + n_sinks
    nodes = {}
    edges = []
    for i in range(1, n_decisions + 1):
        v = rng.randint(1, num_vars)
        nodes[i] = RrNode(i, var=v)
        for lit in (v, -v):
            edges.append(Edge(i, rng.randint(i + 1, total), lit))
    for j in range(n_decisions + 1, total + 1):
        nodes[j] = RrNode(j, clause=rng.choice(sorted(cnf.ids) + [99]))
    reach = {1}
    stack = [1]
    out = {}
    for e in edges:
        out.setdefault(e.src, []).append(e)
    while stack:
        u = stack.pop()
        for e in out.get(u, ()):
            if e.dst not in reach:
                reach.add(e.dst)
                stack.append(e.dst)
    return RrDag({u: n for u, n in nodes.items() if u in reach},
                 [e for e in edges if e.src in reach], 1)
