"""Exhaustive cross-checks of the facts both builders rely on.

These run on small instances only: they enumerate every principal key, every
prefix and every literal set over the prefix variables, and compare the
builders' answers against the brute-force oracles.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

from .cnf import Cnf, is_modular_subcnf, project, restrict
from .errors import InternalBug, InvalidDecomposition
from .longclauses import LongClauseContext, LongClauseSpec
from .onesided import EmptyClauseWitness, OneSidedBuilder
from .oracles import (PairClassifier, UnsatOracle, all_assignments, all_literal_sets,
                      group_by_type, truth_table_unsat)
from .treedecomp import TreeDecomposition, induced_subdecomposition, primal_to_one_sided, validate


@dataclass
class LemmaReport:
    checked: Counter = field(default_factory=Counter)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def fail(self, lemma, detail):
        self.violations.append((lemma, detail))

    def merge(self, other: "LemmaReport"):
        self.checked.update(other.checked)
        self.violations.extend(other.violations)


def _clause_set(cnf):
    return frozenset((c.id, c.lits) for c in cnf.clauses)


def _subsets(items):
    items = sorted(items)
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            yield frozenset(combo)


def validate_onesided(cnf: Cnf, td: TreeDecomposition) -> LemmaReport:
    """Dichotomy and component modularity over every principal key."""
    rep = LemmaReport()
    b = OneSidedBuilder(cnf, td)
    for x in b.td.index.order:
        for excluded in _subsets(b.cl[x]):
            for s in all_assignments(b.sep[x]):
                key = type(b.root_key())(x, excluded, s)
                phi = b.principal_cnf(key)
                unsat = truth_table_unsat(phi)
                for s2 in all_assignments(b.branch[x]):
                    res = restrict(phi, s2)
                    comps = [b.child_component(key, s2, y).child_key for y in b.children[x]]
                    comp_cnfs = [b.principal_cnf(k) for k in comps]
                    has_empty = res.has_empty_clause()
                    if not has_empty:
                        rep.checked["modularity"] += 1
                        union = set()
                        total = 0
                        for cc in comp_cnfs:
                            union |= _clause_set(cc)
                            total += len(cc)
                            try:
                                if not is_modular_subcnf(cc, res):
                                    rep.fail("modularity", "component %s not modular" % (key,))
                            except ValueError as exc:
                                rep.fail("modularity", "%s: %s" % (key, exc))
                        if union != _clause_set(res) or total != len(res):
                            rep.fail("modularity", "components of %s through %s do not partition the residual"
                                     % (key, sorted(s2)))
                    if not unsat:
                        continue
                    rep.checked["unsatchild"] += 1
                    if not has_empty and not any(truth_table_unsat(cc) for cc in comp_cnfs):
                        rep.fail("unsatchild", "%s through %s: no empty clause, no unsatisfiable child"
                                 % (key, sorted(s2)))
                        continue
                    try:
                        nxt = b.successor(key, s2)
                    except InternalBug as exc:
                        rep.fail("unsatchild", str(exc))
                        continue
                    if has_empty != isinstance(nxt, EmptyClauseWitness):
                        rep.fail("unsatchild", "successor of %s disagrees with the residual" % (key,))
                    if b.is_leaf(x) and not has_empty:
                        rep.fail("unsatleaf", "leaf key %s has no empty clause" % (key,))
    return rep


def _fits(ctx: LongClauseContext, psi: Cnf, k: int):
    """Reason string if the induced decomposition fails to cover ``psi`` at width ``k``."""
    induced = induced_subdecomposition(ctx.td, psi.vars, psi)
    if induced.width > k:
        return "induced width %d exceeds %d" % (induced.width, k)
    report = validate(induced, cnf=psi)
    if not report.ok:
        return str(report.violations[0])
    try:
        primal_to_one_sided(induced, psi)
    except InvalidDecomposition as exc:
        return str(exc)
    return None


def validate_longclauses(cnf: Cnf, spec: LongClauseSpec) -> LemmaReport:
    """Every prefix, every literal set over its variables, grouped by type."""
    rep = LemmaReport()
    oracle = UnsatOracle()
    ctx = LongClauseContext(cnf, spec, oracle)
    pc = PairClassifier(cnf, spec.long_ids, spec.short_td)
    k = ctx.width
    all_types = 0
    for r in range(ctx.n + 1):
        pairs = []
        for s in all_literal_sets(ctx.prefix_vars[r]):
            rep.checked["classify"] += 1
            ref = pc.classify(r, s)
            mine = ctx.classify(r, s)
            mine_key = None if not hasattr(mine, "key") else mine.key
            if ref != mine_key:
                rep.fail("classify", "prefix %d, %s: oracle %s, builder %s" % (r, sorted(s), ref, mine_key))
            if ref is not None:
                pairs.append((s, ref))
        groups = group_by_type(pairs)
        all_types += len(groups)
        t = ctx.order[r] if r < ctx.n else None
        for members in groups.values():
            dts = [ctx.classify_pair(r, s) for s in members]
            base = dts[0]
            inv0, phi0 = ctx.inv_and_phi(base)
            # (a) members agree on the next bag
            if t is not None:
                rep.checked["invext2"] += 1
                if len({project(s, ctx.bag[t]) for s in members}) != 1:
                    rep.fail("invext2", "type %s: members differ on bag %s" % (base, t))
            # (b) invariant clauses restrict identically and modularly
            for dt in dts:
                rep.checked["invprop"] += 1
                inv, phi = ctx.compute_inv_and_phi(dt)
                if _clause_set(inv) != _clause_set(inv0) or _clause_set(phi) != _clause_set(phi0):
                    rep.fail("invprop", "type %s: witness %s changes the invariant residual"
                             % (base, sorted(dt.witness)))
                if not is_modular_subcnf(phi, restrict(cnf, dt.witness)):
                    rep.fail("invprop", "type %s: residual not modular under %s" % (base, sorted(dt.witness)))
            if t is None:
                rep.checked["twbound"] += 1
                reason = _fits(ctx, phi0, k) if not phi0.has_empty_clause() else None
                if reason:
                    rep.fail("twbound", "terminal type %s: %s" % (base, reason))
                continue
            fam = ctx.ext_family(base)
            for s_ext in fam.members:
                # (c) every witness extends to an interesting pair of one common type
                rep.checked["invext3"] += 1
                nxt_keys = {pc.classify(r + 1, s | s_ext) for s in members}
                expected = ctx.succ(base, s_ext).key
                if nxt_keys != {expected}:
                    rep.fail("invext3", "type %s with %s: successors %s" % (base, sorted(s_ext), nxt_keys))
                # (d) the successor's invariants shrink and stay modular
                rep.checked["succdt"] += 1
                nxt = ctx.succ_star(base, s_ext)
                inv_n, phi_n = ctx.inv_and_phi(nxt)
                if not inv_n.ids <= inv0.ids:
                    rep.fail("succdt", "type %s: Inv grows under %s" % (base, sorted(s_ext)))
                res = restrict(phi0, s_ext)
                try:
                    if not is_modular_subcnf(phi_n, res):
                        rep.fail("succdt", "type %s: successor residual not modular" % base)
                except ValueError as exc:
                    rep.fail("succdt", "type %s: %s" % (base, exc))
                known = phi_n.literal_sets()
                local = Cnf(cnf.num_vars, tuple(c for c in res.clauses if c.lits not in known))
                if oracle.is_unsat(phi0) and not (oracle.is_unsat(local) or oracle.is_unsat(phi_n)):
                    rep.fail("succdt", "type %s: neither residual is unsatisfiable" % base)
                # (e) the local residual fits the decomposition
                if local.clauses and not local.has_empty_clause():
                    rep.checked["twbound"] += 1
                    reason = _fits(ctx, local, k)
                    if reason:
                        rep.fail("twbound", "type %s with %s: %s" % (base, sorted(s_ext), reason))
    rep.checked["fptnum"] += 1
    if all_types > ctx.count_bound():
        rep.fail("fptnum", "%d types exceed the bound %d" % (all_types, ctx.count_bound()))
    return rep
