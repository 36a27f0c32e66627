"""Regular resolution proofs as decision DAGs, their text format and checker.

A proof is a single-source DAG.  Decision nodes query a variable and have one
out-edge per polarity; sinks carry the id of an input clause that every
root-to-sink path must falsify.  No path may query a variable twice.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

from .cnf import Cnf, var
from .errors import NotRefutable, ParseError

STRUCTURE = "STRUCTURE"
READ_ONCE = "READ_ONCE"
SINK_CLAUSE_UNKNOWN = "SINK_CLAUSE_UNKNOWN"
SINK_NOT_FALSIFIED = "SINK_NOT_FALSIFIED"


@dataclass(frozen=True)
class RrNode:
    id: int
    var: Optional[int] = None
    clause: Optional[int] = None

    @property
    def is_sink(self) -> bool:
        return self.var is None


@dataclass(frozen=True, order=True)
class Edge:
    src: int
    dst: int
    lit: int


class RrDag:
    def __init__(self, nodes, edges, root):
        self.nodes = dict(nodes)
        self.edges = list(edges)
        self.root = root

    @cached_property
    def out_edges(self) -> dict:
        out = {u: [] for u in self.nodes}
        for e in self.edges:
            out.setdefault(e.src, []).append(e)
        return out

    @cached_property
    def in_edges(self) -> dict:
        out = {u: [] for u in self.nodes}
        for e in self.edges:
            out.setdefault(e.dst, []).append(e)
        return out

    def sinks(self):
        return [n for n in self.nodes.values() if n.is_sink]

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        if not isinstance(other, RrDag):
            return NotImplemented
        return (self.root == other.root and self.nodes == other.nodes
                and sorted(self.edges) == sorted(other.edges))

    def __repr__(self):
        return "RrDag(%d nodes, %d edges, root=%s)" % (len(self.nodes), len(self.edges), self.root)


class DagBuilder:
    """Incremental construction with one shared sink per clause id."""

    def __init__(self):
        self.nodes = {}
        self.edges = []
        self.sink_of = {}
        self._next = 1

    def alloc(self) -> int:
        nid = self._next
        self._next += 1
        return nid

    def sink(self, clause_id) -> int:
        nid = self.sink_of.get(clause_id)
        if nid is None:
            nid = self.alloc()
            self.nodes[nid] = RrNode(nid, clause=clause_id)
            self.sink_of[clause_id] = nid
        return nid

    def decision(self, nid, v, pos, neg):
        self.nodes[nid] = RrNode(nid, var=v)
        self.edges.append(Edge(nid, pos, v))
        self.edges.append(Edge(nid, neg, -v))

    def embed(self, dag: RrDag) -> int:
        """Copy ``dag`` in, merging its sinks with ours; returns the copied root."""
        mapping = {}
        for nid in sorted(dag.nodes):
            node = dag.nodes[nid]
            mapping[nid] = self.sink(node.clause) if node.is_sink else self.alloc()
        for nid in sorted(dag.nodes):
            node = dag.nodes[nid]
            if node.is_sink:
                continue
            m = mapping[nid]
            self.nodes[m] = RrNode(m, var=node.var)
            for e in sorted(dag.out_edges[nid], key=lambda e: -e.lit):
                self.edges.append(Edge(m, mapping[e.dst], e.lit))
        return mapping[dag.root]

    def finish(self, root) -> RrDag:
        """Drop everything unreachable from ``root`` and renumber in BFS order."""
        out = {}
        for e in self.edges:
            out.setdefault(e.src, []).append(e)
        order = []
        seen = {root}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            order.append(u)
            for e in out.get(u, ()):
                if e.dst not in seen:
                    seen.add(e.dst)
                    queue.append(e.dst)
        renum = {u: i for i, u in enumerate(order, 1)}
        nodes = {}
        for u in order:
            n = self.nodes[u]
            nodes[renum[u]] = RrNode(renum[u], n.var, n.clause)
        edges = [Edge(renum[e.src], renum[e.dst], e.lit) for u in order for e in out.get(u, ())]
        return RrDag(nodes, edges, renum[root])


# -- text format --------------------------------------------------------------

def serialize_proof(dag: RrDag) -> str:
    lines = ["rr %d %d %d" % (len(dag.nodes), len(dag.edges), dag.root)]
    for nid in sorted(dag.nodes):
        n = dag.nodes[nid]
        if n.is_sink:
            lines.append("n %d s %d" % (nid, n.clause))
        else:
            lines.append("n %d v %d" % (nid, n.var))
    for e in sorted(dag.edges, key=lambda e: (e.src, e.lit < 0, e.dst, e.lit)):
        lines.append("e %d %d %d" % (e.src, e.dst, e.lit))
    return "\n".join(lines) + "\n"


def parse_proof(text) -> RrDag:
    if isinstance(text, bytes):
        text = text.decode("ascii")
    header = None
    nodes = {}
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        f = line.split()
        if not f or f[0] == "c":
            continue
        try:
            if f[0] == "rr":
                if header is not None or len(f) != 4:
                    raise ParseError("line %d: malformed header" % lineno)
                header = tuple(int(x) for x in f[1:])
            elif f[0] == "n":
                if len(f) != 4 or f[2] not in ("v", "s"):
                    raise ParseError("line %d: malformed node line" % lineno)
                nid, val = int(f[1]), int(f[3])
                if nid <= 0 or val <= 0:
                    raise ParseError("line %d: ids and labels must be positive" % lineno)
                if nid in nodes:
                    raise ParseError("line %d: duplicate node id %d" % (lineno, nid))
                nodes[nid] = RrNode(nid, var=val) if f[2] == "v" else RrNode(nid, clause=val)
            elif f[0] == "e":
                if len(f) != 4:
                    raise ParseError("line %d: malformed edge line" % lineno)
                e = Edge(int(f[1]), int(f[2]), int(f[3]))
                if e.lit == 0:
                    raise ParseError("line %d: edge label 0" % lineno)
                edges.append(e)
            else:
                raise ParseError("line %d: unrecognised record %r" % (lineno, f[0]))
        except ValueError:
            raise ParseError("line %d: bad integer in %r" % (lineno, line)) from None
    if header is None:
        raise ParseError("missing 'rr' header")
    if header[0] != len(nodes) or header[1] != len(edges):
        raise ParseError("header declares %d nodes / %d edges, found %d / %d"
                         % (header[0], header[1], len(nodes), len(edges)))
    if header[2] not in nodes:
        raise ParseError("root %d is not a node" % header[2])
    out = {}
    for e in edges:
        if e.src not in nodes or e.dst not in nodes:
            raise ParseError("edge %d -> %d has a dangling endpoint" % (e.src, e.dst))
        out.setdefault(e.src, []).append(e.lit)
    for nid, n in nodes.items():
        labels = sorted(out.get(nid, []))
        if n.is_sink:
            if labels:
                raise ParseError("sink %d has outgoing edges" % nid)
        elif labels != [-n.var, n.var]:
            raise ParseError("decision node %d on x%d lacks complementary edges (has %s)"
                             % (nid, n.var, labels))
    return RrDag(nodes, edges, header[2])


# -- checker ------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    witness: tuple

    def __str__(self):
        return "%s: %s [witness %s]" % (self.kind, self.message, " ".join(str(w) for w in self.witness))


@dataclass
class CheckResult:
    violations: list = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.violations

    def kinds(self):
        return sorted({v.kind for v in self.violations})


def _lit_bit(lit):
    return 1 << (2 * var(lit) + (lit < 0))


def _structure(cnf, dag):
    bad = []
    if dag.root not in dag.nodes:
        return [Violation(STRUCTURE, "root %s is not a node" % dag.root, (dag.root,))]
    for e in dag.edges:
        if e.src not in dag.nodes or e.dst not in dag.nodes:
            bad.append(Violation(STRUCTURE, "edge %d -> %d has a dangling endpoint" % (e.src, e.dst),
                                 (e.src, e.dst)))
    if bad:
        return bad
    out = dag.out_edges
    for nid in sorted(dag.nodes):
        n = dag.nodes[nid]
        labels = sorted(e.lit for e in out[nid])
        if n.is_sink:
            if n.clause is None:
                bad.append(Violation(STRUCTURE, "node %d has neither variable nor clause" % nid, (nid,)))
            elif labels:
                bad.append(Violation(STRUCTURE, "sink %d has outgoing edges" % nid, (nid,)))
        else:
            if not 1 <= n.var <= cnf.num_vars:
                bad.append(Violation(STRUCTURE, "node %d queries unknown variable %d" % (nid, n.var),
                                     (nid,)))
            if labels != [-n.var, n.var]:
                bad.append(Violation(STRUCTURE, "decision node %d on x%d has edge labels %s"
                                     % (nid, n.var, labels), (nid,)))
    indeg = {u: len(dag.in_edges[u]) for u in dag.nodes}
    if indeg[dag.root]:
        bad.append(Violation(STRUCTURE, "root %d has incoming edges" % dag.root, (dag.root,)))
    for u in sorted(dag.nodes):
        if u != dag.root and not indeg[u]:
            bad.append(Violation(STRUCTURE, "node %d is a second source" % u, (dag.root, u)))
    seen = {dag.root}
    queue = deque([dag.root])
    while queue:
        u = queue.popleft()
        for e in out[u]:
            if e.dst not in seen:
                seen.add(e.dst)
                queue.append(e.dst)
    for u in sorted(set(dag.nodes) - seen):
        bad.append(Violation(STRUCTURE, "node %d is unreachable from the root" % u, (dag.root, u)))
    cycle = _find_cycle(dag)
    if cycle:
        bad.append(Violation(STRUCTURE, "cycle through nodes %s" % cycle, tuple(cycle)))
    return bad


def _find_cycle(dag):
    color = {}
    for start in sorted(dag.nodes):
        if start in color:
            continue
        stack = [(start, iter(dag.out_edges[start]))]
        color[start] = 1
        path = [start]
        while stack:
            u, it = stack[-1]
            e = next(it, None)
            if e is None:
                color[u] = 2
                stack.pop()
                path.pop()
                continue
            c = color.get(e.dst)
            if c == 1:
                return path[path.index(e.dst):] + [e.dst]
            if c is None:
                color[e.dst] = 1
                path.append(e.dst)
                stack.append((e.dst, iter(dag.out_edges[e.dst])))
    return None


def topological_order(dag: RrDag) -> list:
    indeg = {u: len(dag.in_edges[u]) for u in dag.nodes}
    queue = deque(sorted(u for u, d in indeg.items() if d == 0))
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for e in dag.out_edges[u]:
            indeg[e.dst] -= 1
            if indeg[e.dst] == 0:
                queue.append(e.dst)
    return order


def find_path(dag: RrDag, src, dst, avoid_label=None):
    """A src-dst node path not using edges labelled ``avoid_label``, or None."""
    parent = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            path = []
            while u is not None:
                path.append(u)
                u = parent[u]
            return path[::-1]
        for e in dag.out_edges[u]:
            if e.lit != avoid_label and e.dst not in parent:
                parent[e.dst] = u
                queue.append(e.dst)
    return None


def _read_once_witness(dag, target):
    """A decision node on the same variable as ``target`` from which it is reachable."""
    v = dag.nodes[target].var
    seen = {target}
    queue = deque([target])
    while queue:
        u = queue.popleft()
        for e in dag.in_edges[u]:
            p = e.src
            if p in seen:
                continue
            if dag.nodes[p].var == v:
                return p
            seen.add(p)
            queue.append(p)
    return None


def check_refutation(cnf: Cnf, dag: RrDag) -> CheckResult:
    """Verify ``dag`` is a regular resolution refutation of ``cnf``.

    Read-onceness and sink falsification are computed by one forward pass over
    a topological order: ``seen[u]`` collects variables queried strictly above
    ``u`` on some path, ``must[u]`` the literals assigned on every path to
    ``u``.  Witnesses are recovered by explicit searches afterwards.
    """
    result = CheckResult()
    result.violations.extend(_structure(cnf, dag))
    if result.violations:
        return result
    order = topological_order(dag)
    full = -1
    seen = {u: 0 for u in dag.nodes}
    must = {u: full for u in dag.nodes}
    must[dag.root] = 0
    reported = set()
    for u in order:
        n = dag.nodes[u]
        if n.is_sink:
            continue
        vb = 1 << n.var
        if seen[u] & vb and n.var not in reported:
            reported.add(n.var)
            w = _read_once_witness(dag, u)
            path = find_path(dag, w, u)
            result.violations.append(Violation(
                READ_ONCE, "x%d is queried at node %d and again at node %d" % (n.var, w, u),
                tuple(path)))
        up = seen[u] | vb
        for e in dag.out_edges[u]:
            seen[e.dst] |= up
            must[e.dst] &= must[u] | _lit_bit(e.lit)
    for s in dag.sinks():
        c = cnf.by_id.get(s.clause)
        if c is None:
            result.violations.append(Violation(
                SINK_CLAUSE_UNKNOWN, "sink %d is labelled with unknown clause %d" % (s.id, s.clause),
                (s.id, s.clause)))
            continue
        for lit in sorted(c.lits, key=lambda l: (var(l), l)):
            if not must[s.id] & _lit_bit(-lit):
                path = find_path(dag, dag.root, s.id, avoid_label=-lit)
                result.violations.append(Violation(
                    SINK_NOT_FALSIFIED,
                    "path %s to sink %d does not assign %d, so clause %d is not falsified"
                    % ("-".join(map(str, path)), s.id, -lit, c.id),
                    tuple(path)))
                break
    return result


# -- naive refutation ---------------------------------------------------------

def full_decision_tree_rr(cnf: Cnf, order=None) -> RrDag:
    """Complete decision tree over ``order``; each leaf names the smallest clause
    its assignment falsifies."""
    if order is None:
        order = sorted(cnf.vars)
    order = list(order)
    if sorted(order) != sorted(cnf.vars):
        raise ValueError("order must be a permutation of the CNF's variables")
    nodes = {}
    edges = []
    counter = [0]
    empty = [c.id for c in cnf.clauses if not c.lits]
    start_best = min(empty) if empty else None
    alive = [(c.id, c.lits) for c in cnf.clauses if c.lits]
    assignment = []

    def build(depth, alive, best):
        counter[0] += 1
        nid = counter[0]
        if depth == len(order):
            if best is None:
                raise NotRefutable("assignment %s satisfies the CNF" % sorted(assignment, key=var),
                                   frozenset(assignment))
            nodes[nid] = RrNode(nid, clause=best)
            return nid
        v = order[depth]
        nodes[nid] = RrNode(nid, var=v)
        for lit in (v, -v):
            nb = best
            rest = []
            for cid, lits in alive:
                if lit in lits:
                    continue
                if -lit in lits:
                    lits = lits - {-lit}
                    if not lits:
                        nb = cid if nb is None else min(nb, cid)
                        continue
                rest.append((cid, lits))
            assignment.append(lit)
            child = build(depth + 1, rest, nb)
            assignment.pop()
            edges.append(Edge(nid, child, lit))
        return nid

    root = build(0, alive, start_best)
    return RrDag(nodes, edges, root)


@dataclass(frozen=True)
class ProofStats:
    nodes: int
    edges: int
    sinks: int
    depth: int
    variables: int

    def lines(self):
        return ["%s=%d" % (k, getattr(self, k)) for k in ("nodes", "edges", "sinks", "depth", "variables")]


def stats(dag: RrDag) -> ProofStats:
    depth = {u: 0 for u in dag.nodes}
    order = topological_order(dag)
    for u in reversed(order):
        for e in dag.out_edges[u]:
            depth[u] = max(depth[u], depth[e.dst] + 1)
    return ProofStats(
        nodes=len(dag.nodes),
        edges=len(dag.edges),
        sinks=sum(1 for n in dag.nodes.values() if n.is_sink),
        depth=depth.get(dag.root, 0),
        variables=len({n.var for n in dag.nodes.values() if not n.is_sink}),
    )
