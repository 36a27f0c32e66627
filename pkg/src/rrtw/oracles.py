"""Brute-force deciders and instance generators used to validate the builders.

Everything here is written independently of the construction code: the
interesting-pair classifier below recomputes postorder, prefix trees and
first bags from scratch and shares nothing with ``longclauses`` except the
cnf primitives.
"""

from __future__ import annotations

import itertools
import random
import threading
from dataclasses import dataclass
from typing import Optional

from .cnf import Clause, Cnf, var, variables
from .errors import RrtwError
from .treedecomp import DecompNode, TreeDecomposition

SAT = "SAT"
UNSAT = "UNSAT"

PREFIX_VAR_GUARD = 20
MAX_RESAMPLES = 1000


@dataclass(frozen=True)
class OracleVerdict:
    status: str
    witness: Optional[frozenset] = None

    @property
    def unsat(self) -> bool:
        return self.status == UNSAT


def _dpll(clauses, assigned):
    while True:
        unit = None
        rest = []
        for c in clauses:
            if c & assigned:
                continue
            r = frozenset(l for l in c if -l not in assigned)
            if not r:
                return None
            if len(r) == 1 and unit is None:
                unit = next(iter(r))
            rest.append(r)
        clauses = rest
        if unit is None:
            break
        assigned = assigned | {unit}
    if not clauses:
        return assigned
    shortest = min(clauses, key=len)
    lit = min(shortest, key=lambda l: (var(l), l))
    for choice in (lit, -lit):
        found = _dpll(clauses, assigned | {choice})
        if found is not None:
            return found
    return None


def dpll_unsat(cnf: Cnf) -> OracleVerdict:
    """Complete DPLL search with unit propagation."""
    found = _dpll([c.lits for c in cnf.clauses], frozenset())
    if found is None:
        return OracleVerdict(UNSAT)
    assigned = variables(found)
    witness = set(found) | {v for v in cnf.vars if v not in assigned}
    return OracleVerdict(SAT, frozenset(witness))


def truth_table_unsat(cnf: Cnf) -> bool:
    vs = sorted(cnf.vars)
    for bits in itertools.product((False, True), repeat=len(vs)):
        a = {v if b else -v for v, b in zip(vs, bits)}
        if all(c.lits & a for c in cnf.clauses):
            return False
    return True


class UnsatOracle:
    """Memoised unsatisfiability checks keyed by the CNF's clause set."""

    def __init__(self):
        self._memo = {}
        self._lock = threading.Lock()
        self.calls = 0
        self.solves = 0

    def verdict(self, cnf: Cnf) -> OracleVerdict:
        key = cnf.literal_sets()
        with self._lock:
            self.calls += 1
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        v = dpll_unsat(cnf)
        with self._lock:
            self.solves += 1
            return self._memo.setdefault(key, v)

    def is_unsat(self, cnf: Cnf) -> bool:
        return self.verdict(cnf).unsat


# -- interesting pairs, recomputed from first principles ---------------------

def _postorder(td):
    out = []

    def walk(u):
        for c in td.nodes[u].children:
            walk(c)
        out.append(u)

    walk(td.root)
    return out


class PairClassifier:
    """Straightforward restatement of interesting pairs and decision types."""

    def __init__(self, cnf: Cnf, long_ids, short_td: TreeDecomposition):
        self.cnf = cnf
        self.td = short_td
        self.long = [cnf.by_id[i] for i in sorted(long_ids)]
        self.order = _postorder(short_td)
        self.pos = {u: i for i, u in enumerate(self.order)}
        self.first = {}
        for i, u in enumerate(self.order):
            for v in short_td.nodes[u].var_bag:
                self.first.setdefault(v, i)

    def prefix_vars(self, r):
        out = set()
        for u in self.order[:r]:
            out |= self.td.nodes[u].var_bag
        return out

    def _tree_nodes(self, root):
        out = [root]
        i = 0
        while i < len(out):
            out.extend(self.td.nodes[out[i]].children)
            i += 1
        return out

    def classify(self, r, s):
        """Canonical decision-type key of (prefix r, s), or None if not interesting."""
        s = frozenset(s)
        prefix = set(self.order[:r])

        def tree_of(node):
            while self.td.nodes[node].parent in prefix:
                node = self.td.nodes[node].parent
            return node

        f = {}
        for c in self.long:
            sat = [l for l in c.lits if l in s]
            if sat:
                first = min(self.first[var(l)] for l in sat)
                f[c.id] = tree_of(self.order[first])
        sat_roots = sorted(set(f.values()), key=self.pos.__getitem__)
        tree_vars = set()
        root_vars = set()
        for t in sat_roots:
            root_vars |= self.td.nodes[t].var_bag
            for u in self._tree_nodes(t):
                tree_vars |= self.td.nodes[u].var_bag
        st_vars = self.prefix_vars(r)
        assigned = variables(s)
        for x in st_vars:
            determining = False
            for c in self.long:
                if x not in c.vars:
                    continue
                if not any(self.first[var(l)] < self.first[x] for l in c.lits if l in s):
                    determining = True
                    break
            if determining and x not in assigned:
                return None
            if not determining and x in assigned and x not in tree_vars:
                return None
        if not root_vars <= assigned:
            return None
        sl = frozenset(l for l in s if var(l) in root_vars)
        return (r, tuple(sat_roots), frozenset(f), tuple(sorted(f.items())), sl)


def all_literal_sets(vs):
    vs = sorted(vs)
    for signs in itertools.product((0, 1, -1), repeat=len(vs)):
        yield frozenset(v * sg for v, sg in zip(vs, signs) if sg)


def all_assignments(vs):
    vs = sorted(vs)
    for signs in itertools.product((1, -1), repeat=len(vs)):
        yield frozenset(v * sg for v, sg in zip(vs, signs))


def enumerate_interesting_pairs(cnf: Cnf, spec, st_len: int, classifier: Optional[PairClassifier] = None):
    """All interesting ``(s, type_key)`` for the prefix of length ``st_len``."""
    pc = classifier or PairClassifier(cnf, spec.long_ids, spec.short_td)
    vs = pc.prefix_vars(st_len)
    if len(vs) > PREFIX_VAR_GUARD:
        raise RrtwError("prefix has %d variables; the exhaustive scan is limited to %d"
                        % (len(vs), PREFIX_VAR_GUARD))
    out = []
    for s in all_literal_sets(vs):
        key = pc.classify(st_len, s)
        if key is not None:
            out.append((s, key))
    return out


def group_by_type(pairs) -> dict:
    groups = {}
    for s, key in pairs:
        groups.setdefault(key, []).append(s)
    return groups


# -- instance generation ------------------------------------------------------

@dataclass(frozen=True)
class InstanceRecipe:
    seed: int
    num_vars: int
    width: int
    long_clauses: int = 0
    density: float = 4.0


class GenerationFailed(RrtwError):
    pass


def _random_tree(rng, n, k, transient_prob=0.15):
    """Random binary tree of bags (size <= k+1) over variables 1..n, connected per variable."""
    pool = list(range(1, n + 1))
    rng.shuffle(pool)
    bags = []
    parent = []
    kids = []
    first = rng.randint(1, min(k + 1, n))
    bags.append(set(pool[:first]))
    parent.append(None)
    kids.append([])
    pool = pool[first:]
    while pool:
        open_nodes = [i for i in range(len(bags)) if len(kids[i]) < 2]
        p = rng.choice(open_nodes)
        pb = sorted(bags[p])
        transient = pb and rng.random() < transient_prob
        max_carry = min(k + 1 if transient else k, len(pb))
        carry = rng.sample(pb, rng.randint(1 if transient else 0, max_carry)) if max_carry else []
        fresh = 0 if transient else rng.randint(1, min(k + 1 - len(carry), len(pool)))
        bags.append(set(carry) | set(pool[:fresh]))
        pool = pool[fresh:]
        parent.append(p)
        kids.append([])
        kids[p].append(len(bags) - 1)
    return bags, parent, kids


def _tree_td(bags, parent, kids, cnf, flavor="primal", clause_bags=None):
    nodes = {}
    for i, b in enumerate(bags):
        cb = frozenset(clause_bags[i]) if clause_bags else frozenset()
        nodes[i] = DecompNode(i, frozenset(b), cb, parent[i], tuple(kids[i]))
    return TreeDecomposition(nodes, 0, flavor, cnf)


def _first_positions(bags, kids):
    order = []

    def walk(u):
        for c in kids[u]:
            walk(c)
        order.append(u)

    walk(0)
    first = {}
    for i, u in enumerate(order):
        for v in bags[u]:
            first.setdefault(v, i)
    return first


def _random_short_clause(rng, usable, neg_bias):
    bag = sorted(rng.choice(usable))
    size = min(len(bag), rng.choice((1, 2, 2, 2, 3, 3, 3, 3)))
    return frozenset(-v if rng.random() < neg_bias else v for v in rng.sample(bag, size))


def _random_long_clauses(rng, n, p, bags, kids, taken):
    first = _first_positions(bags, kids)
    spread = min(3, len(set(first.values())))
    longs = []
    for _ in range(p):
        for _ in range(100):
            size = rng.randint(min(3, n), min(6, n))
            vs = rng.sample(range(1, n + 1), size)
            if any(set(vs) <= b for b in bags):
                continue
            if len({first[v] for v in vs}) < spread:
                continue
            lits = frozenset(v if rng.random() < 0.75 else -v for v in vs)
            if lits in taken or lits in longs:
                continue
            longs.append(lits)
            break
    return longs


def gen_instances(recipe: InstanceRecipe):
    """Random UNSAT CNF with ``p`` long clauses and a width-``k`` primal
    decomposition of the remaining short clauses.  Deterministic per seed.

    Short clauses are drawn inside bags one at a time; a draw that would make
    the short clauses unsatisfiable on their own is discarded when long
    clauses are present, so that those clauses take part in the refutation.
    ``density`` caps the number of short clauses per variable.
    """
    from .longclauses import LongClauseSpec

    rng = random.Random(recipe.seed)
    n, k, p = recipe.num_vars, recipe.width, recipe.long_clauses
    cap = max(1, round(recipe.density * n))
    for _ in range(MAX_RESAMPLES):
        bags, parent, kids = _random_tree(rng, n, k)
        usable = [b for b in bags if b]
        longs = _random_long_clauses(rng, n, p, bags, kids, set())
        if len(longs) < p:
            continue
        short = []
        done = False
        for _ in range(cap * 3):
            c = _random_short_clause(rng, usable, 0.6 if p else 0.5)
            if c in short or c in longs:
                continue
            trial = short + [c]
            if p and dpll_unsat(Cnf.from_lists(trial, n)).unsat:
                continue
            short = trial
            if dpll_unsat(Cnf.from_lists(short + longs, n)).unsat:
                done = True
                break
            if len(short) >= cap:
                break
        if not done:
            continue
        cnf = Cnf.from_lists(short + longs, n)
        long_ids = frozenset(range(len(short) + 1, len(short) + p + 1))
        td = _tree_td(bags, parent, kids, cnf.without(long_ids))
        return cnf, LongClauseSpec(long_ids, td)
    raise GenerationFailed("no unsatisfiable instance after %d attempts (recipe %s)"
                           % (MAX_RESAMPLES, recipe))


def gen_onesided_instance(seed: int, num_vars: int, width: int, density: float = 2.5):
    """Random UNSAT CNF with a one-sided incidence decomposition in which clauses
    may span a vertical path of up to three bags."""
    rng = random.Random(seed)
    n = num_vars
    for _ in range(MAX_RESAMPLES):
        bags, parent, kids = _random_tree(rng, n, max(width - 2, 0), transient_prob=0.25)
        clause_bags = [set() for _ in bags]
        clauses = []
        target = max(1, round(density * n))
        for _ in range(target * 4):
            if len(clauses) >= target:
                break
            u = rng.randrange(len(bags))
            path = [u]
            length = rng.randint(1, 3)
            while len(path) < length and parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            pool = sorted(set().union(*(bags[w] for w in path)))
            if not pool or not bags[u]:
                continue
            if any(len(bags[w]) + len(clause_bags[w]) + 1 > width + 1 for w in path):
                continue
            size = min(len(pool), rng.choice((1, 2, 2, 3, 3, 3)))
            vs = set(rng.sample(pool, size))
            vs.add(rng.choice(sorted(bags[u])))
            lits = frozenset(v if rng.random() < 0.5 else -v for v in vs)
            if lits in clauses:
                continue
            clauses.append(lits)
            cid = len(clauses)
            for w in path:
                clause_bags[w].add(cid)
        cnf = Cnf(n, tuple(Clause(i, c) for i, c in enumerate(clauses, 1)))
        if not clauses or not dpll_unsat(cnf).unsat:
            continue
        td = _tree_td(bags, parent, kids, cnf, flavor="incidence", clause_bags=clause_bags)
        return cnf, td
    raise GenerationFailed("no unsatisfiable one-sided instance after %d attempts" % MAX_RESAMPLES)
