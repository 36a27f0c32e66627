"""Rooted tree decompositions of primal and incidence graphs.

A node's bag is split into ``var_bag`` (variables) and ``clause_bag`` (clause
ids).  Children are kept in order; ``children[0]`` is the left child, and an
only child is a left child.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional

from .cnf import INCIDENCE, PRIMAL, Cnf, Graph, build_graph
from .errors import InvalidDecomposition, ParseError


@dataclass(frozen=True)
class DecompNode:
    id: int
    var_bag: frozenset
    clause_bag: frozenset = frozenset()
    parent: Optional[int] = None
    children: tuple = ()

    @property
    def left(self):
        return self.children[0] if self.children else None

    @property
    def right(self):
        return self.children[1] if len(self.children) > 1 else None

    @property
    def size(self):
        return len(self.var_bag) + len(self.clause_bag)


class TreeDecomposition:
    """A rooted tree of bags.  Immutable once built."""

    def __init__(self, nodes, root, flavor=PRIMAL, cnf: Optional[Cnf] = None):
        self.nodes = dict(nodes)
        self.root = root
        self.flavor = flavor
        self.cnf = cnf
        self._check_tree()

    @classmethod
    def from_bags(cls, bags, edges=(), root=None, order=None, flavor=PRIMAL, cnf=None):
        """Build a rooted decomposition from an (undirected) tree of bags.

        ``bags`` maps a bag id to ``var_bag`` or ``(var_bag, clause_bag)``.
        ``order`` optionally fixes the child order of some nodes.
        """
        if not bags:
            raise InvalidDecomposition("decomposition has no bags")
        norm = {}
        for bid, bag in bags.items():
            if isinstance(bag, tuple):
                norm[bid] = (frozenset(bag[0]), frozenset(bag[1]))
            else:
                norm[bid] = (frozenset(bag), frozenset())
        adj = {b: set() for b in norm}
        for a, b in edges:
            if a not in adj or b not in adj:
                raise InvalidDecomposition("edge (%s, %s) references an unknown bag" % (a, b))
            if a == b or b in adj[a]:
                raise InvalidDecomposition("edge (%s, %s) is a loop or repeated" % (a, b))
            adj[a].add(b)
            adj[b].add(a)
        if root is None:
            root = min(norm)
        if root not in norm:
            raise InvalidDecomposition("root %s is not a bag" % root)
        order = order or {}
        parent = {root: None}
        kids = {}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            ch = sorted(v for v in adj[u] if v != parent[u])
            for v in ch:
                if v in parent:
                    raise InvalidDecomposition("bag graph has a cycle through bag %s" % v)
                parent[v] = u
                queue.append(v)
            if u in order:
                if sorted(order[u]) != ch:
                    raise InvalidDecomposition("child order for bag %s does not match its children" % u)
                ch = list(order[u])
            kids[u] = tuple(ch)
        if len(parent) != len(norm):
            missing = sorted(set(norm) - set(parent))
            raise InvalidDecomposition("bag graph is disconnected (unreached: %s)" % missing[:5])
        nodes = {b: DecompNode(b, norm[b][0], norm[b][1], parent[b], kids[b]) for b in norm}
        return cls(nodes, root, flavor, cnf)

    def _check_tree(self):
        if self.root not in self.nodes:
            raise InvalidDecomposition("root %s is not a node" % self.root)
        seen = set()
        stack = [self.root]
        if self.nodes[self.root].parent is not None:
            raise InvalidDecomposition("root %s has a parent" % self.root)
        while stack:
            u = stack.pop()
            if u in seen:
                raise InvalidDecomposition("node %s reached twice" % u)
            seen.add(u)
            for c in self.nodes[u].children:
                if c not in self.nodes or self.nodes[c].parent != u:
                    raise InvalidDecomposition("child link %s -> %s is inconsistent" % (u, c))
                stack.append(c)
        if len(seen) != len(self.nodes):
            raise InvalidDecomposition("nodes %s are not reachable from the root"
                                       % sorted(set(self.nodes) - seen)[:5])

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, node_id) -> DecompNode:
        return self.nodes[node_id]

    @cached_property
    def width(self) -> int:
        return max(n.size for n in self.nodes.values()) - 1

    @cached_property
    def is_binary(self) -> bool:
        return all(len(n.children) <= 2 for n in self.nodes.values())

    @cached_property
    def index(self) -> "PostorderIndex":
        return postorder(self)

    @cached_property
    def subtree_vars(self) -> dict:
        """Var(T_u) for every node u."""
        out = {}
        for u in self.index.order:
            node = self.nodes[u]
            acc = set(node.var_bag)
            for c in node.children:
                acc |= out[c]
            out[u] = frozenset(acc)
        return out

    @cached_property
    def subtree_size(self) -> dict:
        out = {}
        for u in self.index.order:
            out[u] = 1 + sum(out[c] for c in self.nodes[u].children)
        return out

    @cached_property
    def var_nodes(self) -> dict:
        out = {}
        for n in self.nodes.values():
            for v in n.var_bag:
                out.setdefault(v, set()).add(n.id)
        return out

    @cached_property
    def clause_nodes(self) -> dict:
        out = {}
        for n in self.nodes.values():
            for c in n.clause_bag:
                out.setdefault(c, set()).add(n.id)
        return out

    def parent_vars(self, u) -> frozenset:
        p = self.nodes[u].parent
        return self.nodes[p].var_bag if p is not None else frozenset()

    def with_cnf(self, cnf) -> "TreeDecomposition":
        return TreeDecomposition(self.nodes, self.root, self.flavor, cnf)

    def __repr__(self):
        return "TreeDecomposition(%s, %d nodes, root=%s, width=%d)" % (
            self.flavor, len(self.nodes), self.root, self.width)


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class TdViolation:
    rule: str
    message: str
    witness: tuple = ()

    def __str__(self):
        return "%s: %s" % (self.rule.upper(), self.message)


@dataclass
class ValidationReport:
    width: int
    violations: list = field(default_factory=list)
    one_sided_checked: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(td: TreeDecomposition, one_sided: bool = False, cnf: Optional[Cnf] = None) -> ValidationReport:
    """Check union, containment and connectivity (and one-sidedness on request)."""
    cnf = cnf if cnf is not None else td.cnf
    if cnf is None:
        raise ValueError("validation needs the CNF the decomposition is meant for")
    report = ValidationReport(td.width, one_sided_checked=one_sided)
    bad = report.violations
    n = cnf.num_vars
    if td.flavor == PRIMAL:
        if any(node.clause_bag for node in td.nodes.values()):
            bad.append(TdViolation("structure", "primal decomposition has clause vertices"))
    if one_sided and td.flavor != INCIDENCE:
        bad.append(TdViolation("one-sided", "one-sidedness needs an incidence decomposition"))
    for node in td.nodes.values():
        for v in node.var_bag:
            if not 1 <= v <= n:
                bad.append(TdViolation("unknown-vertex", "bag %s holds variable %d" % (node.id, v),
                                       (node.id, v)))
        for c in node.clause_bag:
            if c not in cnf.ids:
                bad.append(TdViolation("unknown-vertex", "bag %s holds unknown clause %d" % (node.id, c),
                                       (node.id, c)))
    var_nodes = td.var_nodes
    clause_nodes = td.clause_nodes
    graph = build_graph(cnf, td.flavor)

    def nodes_of(vertex):
        if vertex <= n:
            return var_nodes.get(vertex, set())
        return clause_nodes.get(vertex - n, set())

    def name(vertex):
        return "x%d" % vertex if vertex <= n else "c%d" % (vertex - n)

    for v in graph.vertices:
        if not nodes_of(v):
            bad.append(TdViolation("union", "vertex %s is in no bag" % name(v), (name(v),)))
    for a, b in graph.edges:
        na, nb = nodes_of(a), nodes_of(b)
        if na and nb and not (na & nb):
            bad.append(TdViolation("containment", "edge (%s,%s) is in no bag" % (name(a), name(b)),
                                   (name(a), name(b))))
    for label, table in (("x", var_nodes), ("c", clause_nodes)):
        for vertex, ns in table.items():
            tops = [u for u in ns if td.nodes[u].parent not in ns]
            if len(tops) > 1:
                bad.append(TdViolation("connectivity", "bags of %s%d are not connected (tops %s)"
                                       % (label, vertex, sorted(tops)), (label + str(vertex),)))
    if one_sided:
        for c, ns in clause_nodes.items():
            for u in ns:
                inside = [ch for ch in td.nodes[u].children if ch in ns]
                if len(inside) > 1:
                    bad.append(TdViolation("one-sided", "bags of clause c%d branch at node %s" % (c, u),
                                           ("c%d" % c, u)))
                    break
    return report


def require_valid(td, one_sided=False, cnf=None):
    report = validate(td, one_sided, cnf)
    if not report.ok:
        raise InvalidDecomposition("; ".join(str(v) for v in report.violations[:5]), report.violations)
    return report


# -- restructuring ------------------------------------------------------------

def fresh_id(td: TreeDecomposition) -> int:
    """First integer id above every integer id in ``td``; non-integer ids are ignored."""
    ints = [u for u in td.nodes if isinstance(u, int)]
    return max(ints, default=-1) + 1

def binarize_and_root(td: TreeDecomposition) -> TreeDecomposition:
    """Split nodes with more than two children using stacked copies of the bag.

    The copies sit vertically under the original node, so widths, validity and
    one-sidedness are preserved.  A copy keeps the clause vertices it must
    carry towards the remaining children and no others.
    """
    if td.is_binary:
        return td
    nodes = dict(td.nodes)
    next_id = fresh_id(td)
    for node in list(td.nodes.values()):
        if len(node.children) <= 2:
            continue
        rest = list(node.children)
        holder = node.id
        while len(rest) > 2:
            dup = next_id
            next_id += 1
            tail = rest[1:]
            below = frozenset().union(*(td.nodes[c].clause_bag for c in tail))
            nodes[dup] = DecompNode(dup, node.var_bag, node.clause_bag & below, holder, ())
            nodes[holder] = replace(nodes[holder], children=(rest[0], dup))
            nodes[rest[0]] = replace(nodes[rest[0]], parent=holder)
            holder, rest = dup, tail
        nodes[holder] = replace(nodes[holder], children=tuple(rest))
        for ch in rest:
            nodes[ch] = replace(nodes[ch], parent=holder)
    return TreeDecomposition(nodes, td.root, td.flavor, td.cnf)


def attach_children(td: TreeDecomposition, additions) -> TreeDecomposition:
    """Return ``td`` with new leaf bags attached; ``additions`` is a list of
    ``(host_id, DecompNode)`` whose ids are fresh."""
    nodes = dict(td.nodes)
    for host, new in additions:
        nodes[new.id] = replace(new, parent=host, children=())
        nodes[host] = replace(nodes[host], children=nodes[host].children + (new.id,))
    return TreeDecomposition(nodes, td.root, td.flavor, td.cnf)


def primal_to_one_sided(td: TreeDecomposition, cnf: Cnf) -> TreeDecomposition:
    """Hang one fresh bag ``{C} + Var(C)`` per clause under a bag holding Var(C)."""
    if td.flavor != PRIMAL:
        raise InvalidDecomposition("expected a primal decomposition")
    order = td.index.order
    next_id = fresh_id(td)
    additions = []
    for c in cnf.clauses:
        host = None
        cv = c.vars
        for u in order:
            if cv <= td.nodes[u].var_bag:
                host = u
                break
        if host is None:
            raise InvalidDecomposition("clause %d fits in no bag" % c.id,
                                       [TdViolation("containment", "clause c%d fits in no bag" % c.id,
                                                    ("c%d" % c.id,))])
        additions.append((host, DecompNode(next_id, cv, frozenset([c.id]))))
        next_id += 1
    out = attach_children(td, additions)
    out = TreeDecomposition(out.nodes, out.root, INCIDENCE, cnf)
    return binarize_and_root(out)


def induced_subdecomposition(td: TreeDecomposition, keep_vars, cnf: Optional[Cnf] = None) -> TreeDecomposition:
    keep = frozenset(keep_vars)
    nodes = {u: replace(n, var_bag=n.var_bag & keep) for u, n in td.nodes.items()}
    return TreeDecomposition(nodes, td.root, td.flavor, cnf)


def heuristic_td(graph: Graph, cnf: Optional[Cnf] = None) -> TreeDecomposition:
    """Min-fill elimination ordering turned into a rooted binary decomposition."""
    n = graph.num_vars
    adj = {v: set(ns) for v, ns in graph.adjacency.items()}
    flavor = INCIDENCE if any(k == "clause" for k in graph.kinds.values()) else PRIMAL
    if not adj:
        return TreeDecomposition({0: DecompNode(0, frozenset())}, 0, flavor, cnf)

    def fill(v):
        ns = sorted(adj[v])
        missing = 0
        for i, a in enumerate(ns):
            for b in ns[i + 1:]:
                if b not in adj[a]:
                    missing += 1
        return missing

    eliminated = {}
    bags = []
    remaining = set(adj)
    while remaining:
        v = min(remaining, key=lambda u: (fill(u), len(adj[u]), u))
        ns = set(adj[v])
        bags.append((v, frozenset(ns | {v})))
        eliminated[v] = len(bags) - 1
        for a in ns:
            adj[a] |= ns - {a}
            adj[a].discard(v)
        del adj[v]
        remaining.discard(v)
    edges = []
    component_roots = []
    for i, (v, bag) in enumerate(bags):
        later = [eliminated[u] for u in bag if u != v]
        if later:
            edges.append((i, min(later)))
        else:
            component_roots.append(i)
    for a, b in zip(component_roots, component_roots[1:]):
        edges.append((a, b))
    split = {}
    for i, (_, bag) in enumerate(bags):
        split[i] = (frozenset(u for u in bag if u <= n), frozenset(u - n for u in bag if u > n))
    td = TreeDecomposition.from_bags(split, edges, root=component_roots[-1], flavor=flavor, cnf=cnf)
    return binarize_and_root(td)


# -- postorder machinery ------------------------------------------------------

@dataclass(frozen=True)
class PostorderIndex:
    order: tuple
    rank: dict


def postorder(td: TreeDecomposition) -> PostorderIndex:
    order = []
    stack = [(td.root, False)]
    while stack:
        u, done = stack.pop()
        if done:
            order.append(u)
            continue
        stack.append((u, True))
        for c in reversed(td.nodes[u].children):
            stack.append((c, False))
    return PostorderIndex(tuple(order), {u: i for i, u in enumerate(order)})


def min_bag(td: TreeDecomposition, idx: PostorderIndex, vertex: int, clause: bool = False) -> int:
    """The postorder-earliest node whose bag contains the variable (or clause)."""
    table = td.clause_nodes if clause else td.var_nodes
    ns = table.get(vertex)
    if not ns:
        raise KeyError("%s %d is in no bag" % ("clause" if clause else "variable", vertex))
    return min(ns, key=idx.rank.__getitem__)


def lt_order(td, idx, x, y) -> bool:
    return idx.rank[min_bag(td, idx, x)] < idx.rank[min_bag(td, idx, y)]


@dataclass(frozen=True)
class PrefixForest:
    """Maximal complete subtrees covering the first ``prefix_len`` postorder nodes,
    listed by their root in postorder."""

    prefix_len: int
    trees: tuple


def prefix_forest(td: TreeDecomposition, idx: PostorderIndex, prefix_len: int) -> PrefixForest:
    if not 0 <= prefix_len <= len(idx.order):
        raise ValueError("prefix length %d out of range" % prefix_len)
    inside = set(idx.order[:prefix_len])
    roots = [u for u in idx.order[:prefix_len] if td.nodes[u].parent not in inside]
    return PrefixForest(prefix_len, tuple(roots))


def extend(td: TreeDecomposition, idx: PostorderIndex, forest: PrefixForest) -> PrefixForest:
    """Add the next postorder node: a new one-node tree, or merge its children's trees."""
    if forest.prefix_len >= len(idx.order):
        raise ValueError("prefix already covers the whole tree")
    t = idx.order[forest.prefix_len]
    kids = td.nodes[t].children
    trees = list(forest.trees)
    if kids:
        tail = trees[len(trees) - len(kids):]
        if sorted(tail, key=idx.rank.__getitem__) != sorted(kids, key=idx.rank.__getitem__):
            raise AssertionError("children of %s do not head the last trees" % t)
        del trees[len(trees) - len(kids):]
    trees.append(t)
    return PrefixForest(forest.prefix_len + 1, tuple(trees))


def tree_interval(td: TreeDecomposition, idx: PostorderIndex, root) -> tuple:
    """Postorder ranks ``[lo, hi]`` occupied by the subtree rooted at ``root``."""
    hi = idx.rank[root]
    return hi - td.subtree_size[root] + 1, hi


def min_tree(td: TreeDecomposition, idx: PostorderIndex, forest: PrefixForest, var: int) -> int:
    """Root of the earliest tree of the forest whose bags contain ``var``."""
    for r in forest.trees:
        if var in td.subtree_vars[r]:
            return r
    raise KeyError("variable %d is not in the prefix bags" % var)


# -- file format --------------------------------------------------------------

def parse_td(text, cnf: Cnf, flavor: Optional[str] = None) -> TreeDecomposition:
    """Read the PACE-style format extended with ``r`` (root) and ``o`` (child order).

    Vertex ``v <= num_vars`` is a variable, ``num_vars + c`` is clause ``c``.
    """
    if isinstance(text, bytes):
        text = text.decode("ascii")
    n = cnf.num_vars
    header = None
    bags = {}
    edges = []
    root = None
    order = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        f = line.split()
        if not f or f[0] == "c":
            continue
        try:
            if f[0] == "s":
                if len(f) != 5 or f[1] != "td" or header is not None:
                    raise ParseError("line %d: malformed solution line" % lineno)
                header = tuple(int(x) for x in f[2:])
            elif f[0] == "b":
                if len(f) < 2:
                    raise ParseError("line %d: bag line without id" % lineno)
                bid = int(f[1])
                if bid in bags:
                    raise ParseError("line %d: duplicate bag %d" % (lineno, bid))
                vs = [int(x) for x in f[2:]]
                if any(v <= 0 for v in vs):
                    raise ParseError("line %d: non-positive vertex" % lineno)
                bags[bid] = (frozenset(v for v in vs if v <= n), frozenset(v - n for v in vs if v > n))
            elif f[0] == "r":
                root = int(f[1])
            elif f[0] == "o":
                if len(f) < 3 or len(f) > 4:
                    raise ParseError("line %d: child order needs 1 or 2 children" % lineno)
                order[int(f[1])] = tuple(int(x) for x in f[2:])
            else:
                if len(f) != 2:
                    raise ParseError("line %d: unrecognised line %r" % (lineno, line))
                edges.append((int(f[0]), int(f[1])))
        except ValueError:
            raise ParseError("line %d: bad integer in %r" % (lineno, line)) from None
    if header is None:
        raise ParseError("missing 's td' line")
    if len(bags) != header[0]:
        raise ParseError("header declares %d bags, found %d" % (header[0], len(bags)))
    if flavor is None:
        flavor = INCIDENCE if any(b[1] for b in bags.values()) else PRIMAL
    try:
        return TreeDecomposition.from_bags(bags, edges, root, order, flavor, cnf)
    except InvalidDecomposition as e:
        raise ParseError(str(e)) from None


def write_td(td: TreeDecomposition) -> str:
    n = td.cnf.num_vars if td.cnf is not None else max(
        (v for node in td.nodes.values() for v in node.var_bag), default=0)
    num_vertices = n
    if td.flavor == INCIDENCE and td.cnf is not None:
        num_vertices = n + max(td.cnf.ids, default=0)
    lines = ["s td %d %d %d" % (len(td.nodes), td.width + 1, num_vertices)]
    if all(isinstance(u, int) and u >= 0 for u in td.nodes):
        name = {u: u for u in td.nodes}
    else:
        # the file format needs integer ids; number bags in postorder
        name = {u: i for i, u in enumerate(td.index.order, 1)}
    ids = sorted(td.nodes, key=name.__getitem__)
    for u in ids:
        node = td.nodes[u]
        vs = sorted(node.var_bag) + sorted(n + c for c in node.clause_bag)
        lines.append(" ".join(["b", str(name[u])] + [str(v) for v in vs]))
    for u in ids:
        for c in td.nodes[u].children:
            lines.append("%d %d" % (name[u], name[c]))
    lines.append("r %d" % name[td.root])
    for u in ids:
        ch = td.nodes[u].children
        if ch:
            lines.append("o %d %s" % (name[u], " ".join(str(name[c]) for c in ch)))
    return "\n".join(lines) + "\n"
