"""Regular resolution refutations from one-sided incidence decompositions.

Every tree node ``x`` with parent ``p`` splits the variables of its bag into
the separator ``sep(x) = Var(x) & Var(p)`` and the branching variables
``Var(x) - Var(p)``.  A principal key ``(x, CL', S)`` names the CNF made of
the clauses that reach below ``x``, minus the excluded ids ``CL'`` and minus
the clauses satisfied by the separator assignment ``S``, projected to
``Var(T_x)`` and restricted by ``S``.  The refutation has one node per
reachable principal key with an unsatisfiable CNF; under it a complete
decision tree over the branching variables leads either to a falsified
clause or to the key of an unsatisfiable child component.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Union

from .cnf import Clause, Cnf, is_well_formed, negate, project, restrict, variables
from .errors import InternalBug, NotRefutable
from .oracles import UnsatOracle
from .proof import DagBuilder, RrDag
from .treedecomp import TreeDecomposition, binarize_and_root, require_valid


@dataclass(frozen=True)
class PrincipalKey:
    node: int
    excluded: frozenset = frozenset()
    sep_assign: frozenset = frozenset()


@dataclass(frozen=True)
class EmptyClauseWitness:
    """The branch assignment falsified clause ``clause_id``."""

    clause_id: int


@dataclass(frozen=True)
class ComponentLink:
    parent: PrincipalKey
    branch: frozenset
    child: int
    child_key: PrincipalKey


Successor = Union[EmptyClauseWitness, ComponentLink]
Resolved = Union[EmptyClauseWitness, PrincipalKey]


@dataclass
class BuildReport:
    principal_keys: int = 0
    principal_bound: int = 0
    nodes: int = 0
    node_bound: int = 0
    size_bound: int = 0
    tree_nodes: int = 0
    width: int = 0
    oracle_calls: int = 0

    def lines(self):
        return ["%s=%s" % (k, v) for k, v in vars(self).items()]


class OneSidedBuilder:
    def __init__(self, cnf: Cnf, td: TreeDecomposition, oracle: Optional[UnsatOracle] = None,
                 check_td: bool = True):
        if check_td:
            require_valid(td, one_sided=True, cnf=cnf)
        td = binarize_and_root(td)
        self.cnf = cnf
        self.td = td
        self.oracle = oracle or UnsatOracle()
        self.var = {u: n.var_bag for u, n in td.nodes.items()}
        self.cl = {u: n.clause_bag for u, n in td.nodes.items()}
        self.children = {u: tuple(n.children) for u, n in td.nodes.items()}
        self.sub = td.subtree_vars
        self.sep = {}
        self.branch = {}
        self.below = {}
        self.relevant = {}
        for u, n in td.nodes.items():
            pv = self.var[n.parent] if n.parent is not None else frozenset()
            self.sep[u] = self.var[u] & pv
            self.branch[u] = self.var[u] - pv
            self.below[u] = self.sub[u] - pv
            self.relevant[u] = tuple(c for c in cnf.clauses if c.vars & self.below[u])
        self._principal = {}
        self.report = BuildReport(width=td.width)

    # -- principal CNFs --------------------------------------------------------

    def root_key(self) -> PrincipalKey:
        return PrincipalKey(self.td.root)

    def check_key(self, key: PrincipalKey):
        x = key.node
        if x not in self.var:
            raise ValueError("unknown node %s" % x)
        if not key.excluded <= self.cl[x]:
            raise ValueError("excluded clauses %s are not in bag %s" % (sorted(key.excluded - self.cl[x]), x))
        if not is_well_formed(key.sep_assign) or variables(key.sep_assign) != self.sep[x]:
            raise ValueError("separator assignment must be total over %s" % sorted(self.sep[x]))

    def principal_cnf(self, key: PrincipalKey) -> Cnf:
        hit = self._principal.get(key)
        if hit is not None:
            return hit
        self.check_key(key)
        x, s = key.node, key.sep_assign
        neg = negate(s)
        keep = self.sub[x]
        out = []
        for c in self.relevant[x]:
            if c.id in key.excluded or c.lits & s:
                continue
            out.append(Clause(c.id, frozenset(l for l in c.lits if l in keep or -l in keep) - neg))
        cnf = Cnf(self.cnf.num_vars, tuple(out))
        self._principal[key] = cnf
        return cnf

    def is_unsat(self, key: PrincipalKey) -> bool:
        return self.oracle.is_unsat(self.principal_cnf(key))

    def initial_clause(self, key: PrincipalKey, residual) -> int:
        """Smallest id of an original clause whose principal residual is ``residual``."""
        lits = residual.lits if isinstance(residual, Clause) else frozenset(residual)
        for c in self.principal_cnf(key):
            if c.lits == lits:
                return c.id
        raise KeyError("%s is not a clause of the principal CNF" % sorted(lits))

    # -- successors -------------------------------------------------------------

    def child_component(self, key: PrincipalKey, branch, child) -> ComponentLink:
        x = key.node
        if child not in self.children[x]:
            raise ValueError("%s is not a child of %s" % (child, x))
        full = key.sep_assign | branch
        s_y = project(full, self.var[x] & self.var[child])
        sat = frozenset(cid for cid in self.cl[child] if self.cnf.by_id[cid].lits & full)
        cl_y = (key.excluded & self.cl[child]) | sat
        return ComponentLink(key, frozenset(branch), child, PrincipalKey(child, cl_y, s_y))

    def successor(self, key: PrincipalKey, branch) -> Successor:
        branch = frozenset(branch)
        x = key.node
        if variables(branch) != self.branch[x] or not is_well_formed(branch):
            raise ValueError("branch assignment must be total over %s" % sorted(self.branch[x]))
        residual = restrict(self.principal_cnf(key), branch)
        empty = residual.empty_clause_ids()
        if empty:
            return EmptyClauseWitness(min(empty))
        for y in self.children[x]:
            link = self.child_component(key, branch, y)
            if self.is_unsat(link.child_key):
                return link
        raise InternalBug("no falsified clause and no unsatisfiable child under %s with %s"
                          % (key, sorted(branch)))

    def is_firm(self, u) -> bool:
        return bool(self.branch[u])

    def is_leaf(self, u) -> bool:
        return not self.children[u]

    def representative(self, key: PrincipalKey) -> Resolved:
        """Follow the unique successor through nodes without branching variables."""
        if not self.is_unsat(key):
            raise InternalBug("principal CNF of %s is satisfiable" % (key,))
        while not self.is_firm(key.node) and not self.is_leaf(key.node):
            nxt = self.successor(key, frozenset())
            if isinstance(nxt, EmptyClauseWitness):
                return nxt
            key = nxt.child_key
        return key

    def firm_successor(self, key: PrincipalKey, branch) -> Resolved:
        nxt = self.successor(key, branch)
        if isinstance(nxt, EmptyClauseWitness):
            return nxt
        return self.representative(nxt.child_key)

    def firm_root(self) -> Resolved:
        return self.representative(self.root_key())

    # -- construction -------------------------------------------------------------

    def principal_bound(self) -> int:
        total = 0
        for u in self.var:
            if self.is_firm(u) or self.is_leaf(u):
                total += 2 ** (len(self.cl[u]) + len(self.sep[u]))
        return total

    def build(self) -> RrDag:
        if self.cnf.has_empty_clause():
            b = DagBuilder()
            dag = b.finish(b.sink(min(self.cnf.empty_clause_ids())))
            return self._finish_report(dag, 1)
        root = self.root_key()
        if not self.is_unsat(root):
            verdict = self.oracle.verdict(self.principal_cnf(root))
            raise NotRefutable("formula is satisfiable", verdict.witness)
        b = DagBuilder()
        node_of = {}
        queue = deque()

        def ref(res: Resolved) -> int:
            if isinstance(res, EmptyClauseWitness):
                return b.sink(res.clause_id)
            nid = node_of.get(res)
            if nid is not None:
                return nid
            empty = self.principal_cnf(res).empty_clause_ids()
            if empty:
                nid = b.sink(min(empty))
            elif not self.branch[res.node]:
                nxt = self.successor(res, frozenset())
                if not isinstance(nxt, EmptyClauseWitness):
                    raise InternalBug("leaf key %s has no falsified clause" % (res,))
                nid = b.sink(nxt.clause_id)
            else:
                nid = b.alloc()
                queue.append((res, nid))
            node_of[res] = nid
            return nid

        def tree(key, order, i, assign, nid):
            v = order[i]
            targets = []
            for lit in (v, -v):
                a = assign | {lit}
                if i + 1 == len(order):
                    targets.append(ref(self.firm_successor(key, a)))
                else:
                    t = b.alloc()
                    tree(key, order, i + 1, a, t)
                    targets.append(t)
            b.decision(nid, v, targets[0], targets[1])

        root_id = ref(self.firm_root())
        while queue:
            key, nid = queue.popleft()
            tree(key, sorted(self.branch[key.node]), 0, frozenset(), nid)
        dag = b.finish(root_id)
        return self._finish_report(dag, len(node_of))

    def _finish_report(self, dag: RrDag, principal: int) -> RrDag:
        r = self.report
        r.principal_keys = principal
        r.principal_bound = self.principal_bound()
        r.nodes = len(dag.nodes)
        k = self.td.width
        r.node_bound = max(1, principal) * 2 ** (k + 2)
        r.tree_nodes = len(self.td.nodes)
        r.size_bound = r.tree_nodes * 4 ** (k + 1) * 2 ** (k + 2)
        r.oracle_calls = self.oracle.calls
        if principal > max(1, r.principal_bound):
            raise InternalBug("%d principal keys exceed the bound %d" % (principal, r.principal_bound))
        if r.nodes > r.node_bound:
            raise InternalBug("%d nodes exceed the bound %d" % (r.nodes, r.node_bound))
        return dag


def build_onesided_rr(cnf: Cnf, td: TreeDecomposition, oracle: Optional[UnsatOracle] = None) -> RrDag:
    """Regular resolution refutation of ``cnf`` guided by a one-sided decomposition."""
    return OneSidedBuilder(cnf, td, oracle).build()
