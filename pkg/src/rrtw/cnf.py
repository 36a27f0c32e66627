"""CNF representation, restriction and projection, graph extraction.

Literals are DIMACS integers: ``v`` is the positive literal of variable ``v``,
``-v`` the negative one.  A literal set is a ``frozenset`` of such integers and
is always well formed (no variable with both signs).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union

from .errors import ParseError

LiteralSet = frozenset


def var(lit: int) -> int:
    return lit if lit > 0 else -lit


def variables(lits: Iterable[int]) -> frozenset:
    return frozenset(var(l) for l in lits)


def negate(lits: Iterable[int]) -> frozenset:
    return frozenset(-l for l in lits)


def is_well_formed(lits: Iterable[int]) -> bool:
    lits = frozenset(lits)
    return all(l != 0 and -l not in lits for l in lits)


def format_lits(lits: Iterable[int]) -> str:
    return "(" + " ".join(str(l) for l in sorted(lits, key=lambda l: (var(l), l))) + ")"


@dataclass(frozen=True)
class Clause:
    id: int
    lits: frozenset

    @cached_property
    def vars(self) -> frozenset:
        return variables(self.lits)

    def __len__(self):
        return len(self.lits)

    def __str__(self):
        return "c%d%s" % (self.id, format_lits(self.lits))


class _Satisfied:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "SATISFIED"

    def __bool__(self):
        return False


SATISFIED = _Satisfied()


@dataclass(frozen=True)
class Cnf:
    """An ordered list of clauses over variables ``1..num_vars``.

    Clause ids are unique.  Parsed CNFs number them ``1..m``; restricted CNFs
    keep the ids of the clauses they came from.
    """

    num_vars: int
    clauses: tuple

    def __post_init__(self):
        seen = set()
        for c in self.clauses:
            if c.id in seen:
                raise ValueError("duplicate clause id %d" % c.id)
            seen.add(c.id)
            for l in c.lits:
                if l == 0 or var(l) > self.num_vars:
                    raise ValueError("literal %d out of range in clause %d" % (l, c.id))

    @classmethod
    def from_lists(cls, lists, num_vars=None, first_id=1) -> "Cnf":
        clauses = []
        for i, lits in enumerate(lists):
            lits = frozenset(lits)
            if not is_well_formed(lits):
                raise ValueError("tautological clause %d" % (first_id + i))
            clauses.append(Clause(first_id + i, lits))
        if num_vars is None:
            num_vars = max((var(l) for c in clauses for l in c.lits), default=0)
        return cls(num_vars, tuple(clauses))

    @cached_property
    def vars(self) -> frozenset:
        out = set()
        for c in self.clauses:
            out.update(c.vars)
        return frozenset(out)

    @cached_property
    def by_id(self) -> dict:
        return {c.id: c for c in self.clauses}

    @cached_property
    def ids(self) -> frozenset:
        return frozenset(c.id for c in self.clauses)

    def has_empty_clause(self) -> bool:
        return any(not c.lits for c in self.clauses)

    def empty_clause_ids(self) -> list:
        return [c.id for c in self.clauses if not c.lits]

    def subcnf(self, ids) -> "Cnf":
        ids = set(ids)
        return Cnf(self.num_vars, tuple(c for c in self.clauses if c.id in ids))

    def without(self, ids) -> "Cnf":
        ids = set(ids)
        return Cnf(self.num_vars, tuple(c for c in self.clauses if c.id not in ids))

    def literal_sets(self) -> frozenset:
        """The CNF as a set of clauses, ignoring ids."""
        return frozenset(c.lits for c in self.clauses)

    def __len__(self):
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)

    def __str__(self):
        return " & ".join(str(c) for c in self.clauses) or "<empty cnf>"


def parse_dimacs(text: Union[str, bytes]) -> Cnf:
    if isinstance(text, bytes):
        text = text.decode("ascii")
    header = None
    clauses = []
    current = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            fields = line.split()
            if header is not None or len(fields) != 4 or fields[1] != "cnf":
                raise ParseError("line %d: malformed header %r" % (lineno, line))
            try:
                header = (int(fields[2]), int(fields[3]))
            except ValueError:
                raise ParseError("line %d: malformed header %r" % (lineno, line)) from None
            if header[0] < 0 or header[1] < 0:
                raise ParseError("line %d: negative counts in header" % lineno)
            continue
        if header is None:
            raise ParseError("line %d: clause data before header" % lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError("line %d: bad literal %r" % (lineno, tok)) from None
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                if var(lit) > header[0]:
                    raise ParseError("line %d: literal %d out of range (num_vars=%d)"
                                     % (lineno, lit, header[0]))
                current.append(lit)
    if header is None:
        raise ParseError("missing 'p cnf' header")
    if current:
        raise ParseError("last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise ParseError("header declares %d clauses, found %d" % (header[1], len(clauses)))
    out = []
    for i, lits in enumerate(clauses, 1):
        lits = frozenset(lits)
        if not is_well_formed(lits):
            raise ParseError("tautological clause %d" % i)
        out.append(Clause(i, lits))
    return Cnf(header[0], tuple(out))


def write_dimacs(cnf: Cnf) -> str:
    lines = ["p cnf %d %d" % (cnf.num_vars, len(cnf.clauses))]
    for c in cnf.clauses:
        lits = sorted(c.lits, key=lambda l: (var(l), l))
        lines.append(" ".join(str(l) for l in lits + [0]))
    return "\n".join(lines) + "\n"


def restrict(target, s):
    """Restrict a clause or a CNF by the literal set ``s``.

    For a clause, returns ``SATISFIED`` when ``s`` meets it and ``C \\ neg(s)``
    otherwise.  For a CNF, returns the CNF of restrictions of the clauses not
    satisfied by ``s``, each keeping its id.
    """
    s = frozenset(s)
    if isinstance(target, Clause):
        if target.lits & s:
            return SATISFIED
        neg = negate(s)
        if target.lits & neg:
            return Clause(target.id, target.lits - neg)
        return target
    if isinstance(target, Cnf):
        neg = negate(s)
        out = []
        for c in target.clauses:
            if c.lits & s:
                continue
            out.append(Clause(c.id, c.lits - neg) if c.lits & neg else c)
        return Cnf(target.num_vars, tuple(out))
    raise TypeError("cannot restrict %r" % (target,))


def project(s, vs):
    """Keep the literals of ``s`` whose variable lies in ``vs``.

    Defined for any ``vs``, not only subsets of ``Var(s)``.
    """
    vs = vs if isinstance(vs, (set, frozenset)) else frozenset(vs)
    if isinstance(s, Clause):
        return Clause(s.id, frozenset(l for l in s.lits if var(l) in vs))
    return frozenset(l for l in s if var(l) in vs)


def is_modular_subcnf(sub: Cnf, whole: Cnf) -> bool:
    sub_ids = sub.ids
    if not sub_ids <= whole.ids:
        raise ValueError("clauses %s are not in the enclosing CNF"
                         % sorted(sub_ids - whole.ids))
    sub_vars = set()
    for c in whole.clauses:
        if c.id in sub_ids:
            sub_vars.update(c.vars)
    for c in whole.clauses:
        if c.id not in sub_ids and not c.vars.isdisjoint(sub_vars):
            return False
    return True


PRIMAL = "primal"
INCIDENCE = "incidence"


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph.

    Variables are vertices ``1..num_vars``; in incidence graphs clause ``c``
    is vertex ``num_vars + c``.
    """

    num_vars: int
    vertices: tuple
    edges: tuple
    kinds: dict

    @property
    def num_vertices(self):
        return len(self.vertices)

    @cached_property
    def adjacency(self) -> dict:
        adj = {v: set() for v in self.vertices}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj


def build_graph(cnf: Cnf, flavor: str = PRIMAL) -> Graph:
    n = cnf.num_vars
    vs = sorted(cnf.vars)
    edges = set()
    if flavor == PRIMAL:
        for c in cnf.clauses:
            cv = sorted(c.vars)
            for i, a in enumerate(cv):
                for b in cv[i + 1:]:
                    edges.add((a, b))
        kinds = {v: "variable" for v in vs}
        vertices = tuple(vs)
    elif flavor == INCIDENCE:
        kinds = {v: "variable" for v in vs}
        for c in cnf.clauses:
            kinds[n + c.id] = "clause"
            for v in c.vars:
                edges.add((v, n + c.id))
        vertices = tuple(sorted(kinds))
    else:
        raise ValueError("unknown graph flavor %r" % flavor)
    return Graph(n, vertices, tuple(sorted(edges)), kinds)
