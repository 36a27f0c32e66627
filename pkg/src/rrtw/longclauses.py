"""Regular resolution refutations for formulas whose short clauses have small
primal treewidth, plus a few long clauses.

The short clauses come with a binary rooted primal decomposition.  Processing
its bags in postorder, the builder tracks decision types: an equivalence class
of partial assignments over the variables of the processed prefix.  A type
records the prefix length, the prefix trees that hold the first satisfying
variable of some long clause, which long clauses are satisfied and through
which tree, and the assignment to the roots of those trees.  Each reachable
type becomes one node; a small decision tree over the next bag leads to the
next type or, when the remaining formula becomes local, to a one-sided gadget
built over an induced decomposition.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .cnf import PRIMAL, Cnf, build_graph, project, restrict, var, variables
from .errors import InternalBug, InvalidDecomposition, NotRefutable
from .onesided import OneSidedBuilder
from .oracles import UnsatOracle
from .proof import DagBuilder, RrDag
from .treedecomp import (DecompNode, PrefixForest, TreeDecomposition, attach_children,
                         binarize_and_root, fresh_id, extend, heuristic_td, induced_subdecomposition,
                         primal_to_one_sided, validate)


@dataclass(frozen=True)
class LongClauseSpec:
    long_ids: frozenset
    short_td: TreeDecomposition


@dataclass(frozen=True)
class DecisionType:
    st_len: int
    sat_tree_roots: tuple
    sat_clauses: frozenset
    tree_of: tuple
    root_assign: frozenset
    witness: frozenset = field(default=frozenset(), compare=False)

    @property
    def key(self) -> tuple:
        return (self.st_len, self.sat_tree_roots, self.sat_clauses, self.tree_of, self.root_assign)

    def __str__(self):
        return "DT(st=%d, roots=%s, sat=%s, S=%s)" % (
            self.st_len, list(self.sat_tree_roots), sorted(self.sat_clauses), sorted(self.root_assign))


@dataclass(frozen=True)
class NotInteresting:
    reason: str


@dataclass(frozen=True)
class ExtFamily:
    case: int
    u1: tuple
    u2: tuple
    members: tuple

    @property
    def trivial(self) -> bool:
        return self.members == (frozenset(),)


def _assignments(vs):
    for signs in itertools.product((1, -1), repeat=len(vs)):
        yield frozenset(v * s for v, s in zip(vs, signs))


def prepare_spec(cnf: Cnf, long_ids, short_td: TreeDecomposition) -> LongClauseSpec:
    """Check the decomposition against the short clauses, binarize it, and give
    variables that occur only in long clauses a singleton bag under the root."""
    long_ids = frozenset(long_ids)
    missing_ids = long_ids - cnf.ids
    if missing_ids:
        raise ValueError("long clause ids %s are not in the CNF" % sorted(missing_ids))
    short = cnf.without(long_ids)
    if short_td.flavor != PRIMAL:
        raise InvalidDecomposition("the short-clause decomposition must be primal")
    report = validate(short_td, cnf=short)
    if not report.ok:
        raise InvalidDecomposition("; ".join(str(v) for v in report.violations[:5]), report.violations)
    covered = set()
    for n in short_td.nodes.values():
        covered |= n.var_bag
    extra = sorted(cnf.vars - covered)
    td = short_td.with_cnf(short)
    if extra:
        nid = fresh_id(td)
        td = attach_children(td, [(td.root, DecompNode(nid + i, frozenset([v])))
                                  for i, v in enumerate(extra)])
    return LongClauseSpec(long_ids, binarize_and_root(td))


def choose_long_clauses(cnf: Cnf, p: int) -> LongClauseSpec:
    """Treat the ``p`` widest clauses as long and decompose the rest heuristically."""
    ranked = sorted(cnf.clauses, key=lambda c: (-len(c.vars), c.id))
    long_ids = frozenset(c.id for c in ranked[:p])
    short = cnf.without(long_ids)
    return prepare_spec(cnf, long_ids, heuristic_td(build_graph(short, PRIMAL), short))


class LongClauseContext:
    """Precomputed tables for classifying pairs and extending types."""

    def __init__(self, cnf: Cnf, spec: LongClauseSpec, oracle: Optional[UnsatOracle] = None):
        self.cnf = cnf
        self.spec = spec
        self.oracle = oracle or UnsatOracle()
        td = spec.short_td
        self.td = td
        idx = td.index
        self.order = idx.order
        self.rank = idx.rank
        self.n = len(self.order)
        self.bag = {u: n.var_bag for u, n in td.nodes.items()}
        self.sub = td.subtree_vars
        self.long = tuple(cnf.by_id[i] for i in sorted(spec.long_ids))
        self.short = tuple(c for c in cnf.clauses if c.id not in spec.long_ids)
        self.long_vars = frozenset().union(*(c.vars for c in self.long)) if self.long else frozenset()
        self.first = {}
        for i, u in enumerate(self.order):
            for v in self.bag[u]:
                self.first.setdefault(v, i)
        missing = self.long_vars - set(self.first)
        if missing:
            raise InvalidDecomposition("variables %s of long clauses are in no bag" % sorted(missing))
        # each long clause as groups of literals sharing a first bag, earliest first
        self.groups = {}
        for c in self.long:
            by_rank = {}
            for l in c.lits:
                by_rank.setdefault(self.first[var(l)], set()).add(l)
            self.groups[c.id] = tuple((r, frozenset(by_rank[r])) for r in sorted(by_rank))
        forest = PrefixForest(0, ())
        self.forests = [forest]
        self.prefix_vars = [frozenset()]
        for i in range(self.n):
            forest = extend(td, idx, forest)
            self.forests.append(forest)
            self.prefix_vars.append(self.prefix_vars[-1] | self.bag[self.order[i]])
        self.interval = {u: (idx.rank[u] - td.subtree_size[u] + 1, idx.rank[u]) for u in td.nodes}
        self._inv = {}
        self._ext = {}
        self.width = td.width

    def tree_containing(self, st_len, position) -> int:
        for root in self.forests[st_len].trees:
            lo, hi = self.interval[root]
            if lo <= position <= hi:
                return root
        raise InternalBug("position %d is outside the prefix of length %d" % (position, st_len))

    def determining_vars(self, s) -> frozenset:
        """Variables ``x`` of a long clause ``C`` such that no literal of ``s`` in
        ``C`` has its first bag strictly before the first bag of ``x``."""
        out = set()
        for c in self.long:
            for _, lits in self.groups[c.id]:
                out.update(var(l) for l in lits)
                if lits & s:
                    break
        return frozenset(out)

    def classify(self, st_len, s):
        s = frozenset(s)
        st_vars = self.prefix_vars[st_len]
        if not variables(s) <= st_vars:
            raise ValueError("assignment reaches outside the prefix")
        tree_of = {}
        for c in self.long:
            for r, lits in self.groups[c.id]:
                if lits & s:
                    tree_of[c.id] = self.tree_containing(st_len, r)
                    break
        roots = tuple(sorted(set(tree_of.values()), key=self.rank.__getitem__))
        tree_vars = frozenset().union(*(self.sub[t] for t in roots)) if roots else frozenset()
        root_vars = frozenset().union(*(self.bag[t] for t in roots)) if roots else frozenset()
        assigned = variables(s)
        det = self.determining_vars(s) & st_vars
        if det - assigned:
            return NotInteresting("determining variables %s unassigned" % sorted(det - assigned))
        if (assigned - det) - tree_vars:
            return NotInteresting("variables %s assigned outside the satisfying trees"
                                  % sorted((assigned - det) - tree_vars))
        if root_vars - assigned:
            return NotInteresting("root variables %s unassigned" % sorted(root_vars - assigned))
        return DecisionType(st_len, roots, frozenset(tree_of), tuple(sorted(tree_of.items())),
                            project(s, root_vars), s)

    def classify_pair(self, st_len, s) -> DecisionType:
        dt = self.classify(st_len, s)
        if isinstance(dt, NotInteresting):
            raise InternalBug("pair (%d, %s) is not interesting: %s" % (st_len, sorted(s), dt.reason))
        return dt

    def inv_and_phi(self, dt: DecisionType):
        """Clauses untouched by the type's satisfying trees, and their restriction."""
        hit = self._inv.get(dt)
        if hit is None:
            hit = self._inv[dt] = self.compute_inv_and_phi(dt)
        return hit

    def compute_inv_and_phi(self, dt: DecisionType):
        """Uncached version, using this particular witness."""
        tree_vars = frozenset().union(*(self.sub[t] for t in dt.sat_tree_roots)) \
            if dt.sat_tree_roots else frozenset()
        inv = [c for c in self.long if c.id not in dt.sat_clauses]
        inv += [c for c in self.short if c.vars - tree_vars]
        inv.sort(key=lambda c: c.id)
        inv_cnf = Cnf(self.cnf.num_vars, tuple(inv))
        return inv_cnf, restrict(inv_cnf, dt.witness)

    def ext_family(self, dt: DecisionType) -> ExtFamily:
        hit = self._ext.get(dt)
        if hit is not None:
            return hit
        t = self.order[dt.st_len]
        u = sorted(self.bag[t] - variables(dt.witness))
        unsat_long = [c for c in self.long if c.id not in dt.sat_clauses]
        if not u:
            fam = ExtFamily(1, (), (), (frozenset(),))
        elif any(ch in dt.sat_tree_roots for ch in self.td.nodes[t].children):
            fam = ExtFamily(2, tuple(u), (), tuple(_assignments(u)))
        else:
            touched = frozenset().union(*(c.vars for c in unsat_long)) if unsat_long else frozenset()
            u1 = [v for v in u if v in touched]
            u2 = [v for v in u if v not in touched]
            if not u1:
                fam = ExtFamily(3, (), tuple(u2), (frozenset(),))
            else:
                members = []
                for s1 in _assignments(u1):
                    if any(c.lits & s1 for c in unsat_long):
                        members.extend(s1 | s2 for s2 in _assignments(u2))
                    else:
                        members.append(s1)
                fam = ExtFamily(4, tuple(u1), tuple(u2), tuple(members))
        self._ext[dt] = fam
        return fam

    def succ(self, dt: DecisionType, s_ext) -> DecisionType:
        return self.classify_pair(dt.st_len + 1, dt.witness | frozenset(s_ext))

    def succ_star(self, dt: DecisionType, s_ext) -> DecisionType:
        nxt = self.succ(dt, s_ext)
        while nxt.st_len < self.n and self.ext_family(nxt).trivial:
            nxt = self.succ(nxt, frozenset())
        return nxt

    def initial_type(self) -> DecisionType:
        dt = self.classify_pair(0, frozenset())
        if dt.st_len < self.n and self.ext_family(dt).trivial:
            return self.succ_star(dt, frozenset())
        return dt

    def count_bound(self) -> int:
        p = len(self.long)
        widest = max(len(f.trees) for f in self.forests)
        return self.n * widest ** p * 2 ** p * p ** p * 2 ** (p * (self.width + 1))

    def is_unsat(self, cnf: Cnf) -> bool:
        return self.oracle.is_unsat(cnf)


def _dedupe(clauses) -> tuple:
    """Keep the smallest id for each distinct literal set."""
    best = {}
    for c in clauses:
        if c.lits not in best or c.id < best[c.lits].id:
            best[c.lits] = c
    return tuple(sorted(best.values(), key=lambda c: c.id))


@dataclass
class LongBuildReport:
    decision_types: int = 0
    type_bound: int = 0
    gadgets: int = 0
    secondary_links: int = 0
    nodes: int = 0
    node_bound: int = 0
    long_clauses: int = 0
    width: int = 0
    oracle_calls: int = 0

    def lines(self):
        return ["%s=%s" % (k, v) for k, v in vars(self).items()]


class LongClauseBuilder:
    def __init__(self, cnf: Cnf, spec: LongClauseSpec, oracle: Optional[UnsatOracle] = None):
        self.cnf = cnf
        self.oracle = oracle or UnsatOracle()
        self.spec = spec
        self.report = LongBuildReport(long_clauses=len(spec.long_ids))
        self.ctx = None

    def build(self) -> RrDag:
        cnf = self.cnf
        if cnf.has_empty_clause():
            b = DagBuilder()
            return self._finish(b.finish(b.sink(min(cnf.empty_clause_ids()))), 1)
        if not self.oracle.is_unsat(cnf):
            raise NotRefutable("formula is satisfiable", self.oracle.verdict(cnf).witness)
        ctx = self.ctx = LongClauseContext(cnf, self.spec, self.oracle)
        self.report.width = ctx.width
        b = DagBuilder()
        primary = {}
        gadgets = {}
        queue = deque()

        def gadget(clauses) -> int:
            psi = Cnf(cnf.num_vars, _dedupe(clauses))
            key = tuple((c.id, c.lits) for c in psi.clauses)
            nid = gadgets.get(key)
            if nid is not None:
                return nid
            if psi.has_empty_clause():
                nid = b.sink(min(psi.empty_clause_ids()))
            else:
                induced = induced_subdecomposition(ctx.td, psi.vars, psi)
                try:
                    onesided = primal_to_one_sided(induced, psi)
                except InvalidDecomposition as exc:
                    raise InternalBug("residual formula does not fit the decomposition: %s" % exc) from exc
                sub = OneSidedBuilder(psi, onesided, self.oracle, check_td=False).build()
                nid = b.embed(sub)
            gadgets[key] = nid
            return nid

        def primary_ref(dt: DecisionType) -> int:
            nid = primary.get(dt)
            if nid is not None:
                return nid
            _, phi = ctx.inv_and_phi(dt)
            empty = phi.empty_clause_ids()
            if empty:
                nid = b.sink(min(empty))
            elif dt.st_len == ctx.n:
                if not ctx.is_unsat(phi):
                    raise InternalBug("final type %s has a satisfiable residual" % dt)
                nid = gadget(phi.clauses)
            else:
                nid = b.alloc()
                queue.append((dt, nid))
            primary[dt] = nid
            return nid

        def leaf(dt, phi, s_ext) -> int:
            nxt = ctx.succ_star(dt, s_ext)
            _, phi_next = ctx.inv_and_phi(nxt)
            known = phi_next.literal_sets()
            local = tuple(c for c in restrict(phi, s_ext).clauses if c.lits not in known)
            local_cnf = Cnf(cnf.num_vars, local)
            if local and ctx.is_unsat(local_cnf):
                self.report.secondary_links += 1
                return gadget(local)
            if ctx.is_unsat(phi_next):
                return primary_ref(nxt)
            raise InternalBug("neither the local residual nor the successor %s is unsatisfiable" % nxt)

        def realize(dt, phi, order, members, assign, nid=None):
            """Decision tree whose root-to-leaf assignments are exactly ``members``."""
            queried = variables(assign)
            pending = [v for v in order if v not in queried and any(v in variables(m) for m in members)]
            if not pending:
                if len(members) != 1 or nid is not None:
                    raise InternalBug("extension family is not a decision tree")
                return leaf(dt, phi, members[0])
            v = pending[0]
            if any(v not in variables(m) for m in members):
                raise InternalBug("extension family is not a decision tree at variable %d" % v)
            if nid is None:
                nid = b.alloc()
            targets = [realize(dt, phi, order, [m for m in members if lit in m], assign | {lit})
                       for lit in (v, -v)]
            b.decision(nid, v, targets[0], targets[1])
            return nid

        root_id = primary_ref(ctx.initial_type())
        while queue:
            dt, nid = queue.popleft()
            _, phi = ctx.inv_and_phi(dt)
            fam = ctx.ext_family(dt)
            order = list(fam.u1) + list(fam.u2)
            if fam.trivial:
                raise InternalBug("transient type %s reached as a primary node" % dt)
            realize(dt, phi, order, list(fam.members), frozenset(), nid)
        self.report.gadgets = len(gadgets)
        return self._finish(b.finish(root_id), len(primary))

    def _finish(self, dag: RrDag, types: int) -> RrDag:
        r = self.report
        r.decision_types = types
        r.nodes = len(dag.nodes)
        r.oracle_calls = self.oracle.calls
        if self.ctx is not None:
            r.type_bound = self.ctx.count_bound()
            k = self.ctx.width
            r.node_bound = max(1, types) * 2 ** (k + 2) * 4 ** (k + 2)
            if types > r.type_bound:
                raise InternalBug("%d decision types exceed the bound %d" % (types, r.type_bound))
        else:
            r.type_bound = r.node_bound = 1
        return dag


def build_longclauses_rr(cnf: Cnf, spec: LongClauseSpec, oracle: Optional[UnsatOracle] = None) -> RrDag:
    """Regular resolution refutation of ``cnf`` given its long clauses and a
    primal decomposition of the rest."""
    return LongClauseBuilder(cnf, spec, oracle).build()
