"""Regular resolution refutations guided by tree decompositions, and a checker for them."""

from .cnf import Clause, Cnf, parse_dimacs, project, restrict, write_dimacs
from .errors import InternalBug, InvalidDecomposition, NotRefutable, ParseError, RrtwError
from .longclauses import LongClauseSpec, build_longclauses_rr, prepare_spec
from .onesided import build_onesided_rr
from .oracles import dpll_unsat
from .proof import RrDag, check_refutation, parse_proof, serialize_proof
from .treedecomp import TreeDecomposition, parse_td, validate, write_td

__version__ = "0.1.0"

__all__ = [
    "Clause",
    "Cnf",
    "parse_dimacs",
    "project",
    "restrict",
    "write_dimacs",
    "InternalBug",
    "InvalidDecomposition",
    "NotRefutable",
    "ParseError",
    "RrtwError",
    "LongClauseSpec",
    "build_longclauses_rr",
    "prepare_spec",
    "build_onesided_rr",
    "dpll_unsat",
    "RrDag",
    "check_refutation",
    "parse_proof",
    "serialize_proof",
    "TreeDecomposition",
    "parse_td",
    "validate",
    "write_td",
]
