"""Graph-based spatial temporal logic: syntax, semantics, CNF compilation,
SAT-based consistency checking and proof checking."""
from importlib.resources import files

from .algebra import (ALL_IA, Box3, CaRelation, IaRelation, TimeInterval, ca_classify,
                      ia_classify, ia_inverse, ia_is_convex)
from .compile import Cnf, GroundAtom, compile_theory, default_root, eliminate_temporal, to_cnf
from .errors import (GstlError, GstlSyntaxError, HorizonExceeded, MissingBox, MissingVariable,
                     ModelFormatError, ResourceLimit, StratificationError, UnknownNode)
from .model import (Interpretation, Signal, SpatialModel, build_model, load_signal,
                    serialize_model, single_node_model)
from .proof import ProofScript, check_proof, dump_proof, parse_proof
from .schemas import SCHEMAS, apply_schema, instantiate_schema
from .semantics import EvalContext, evaluate, satisfies_all
from .solve import (check_consistency, count_models, enumerate_models, read_dimacs, solve)
from .syntax import TheorySet, load_theory, parse, parse_term, to_text


def data_path(name: str):
    """Path of a bundled example document (``kitchen.gm``, ``eq9.gstl``, ...)."""
    return files(__package__) / "data" / name


__all__ = [
    "ALL_IA", "Box3", "CaRelation", "IaRelation", "TimeInterval", "ca_classify", "ia_classify",
    "ia_inverse", "ia_is_convex", "Cnf", "GroundAtom", "compile_theory", "default_root",
    "eliminate_temporal", "to_cnf", "GstlError", "GstlSyntaxError", "HorizonExceeded",
    "MissingBox", "MissingVariable", "ModelFormatError", "ResourceLimit", "StratificationError",
    "UnknownNode", "Interpretation", "Signal", "SpatialModel", "build_model", "load_signal",
    "serialize_model", "single_node_model", "ProofScript", "check_proof", "dump_proof",
    "parse_proof", "SCHEMAS", "apply_schema", "instantiate_schema", "EvalContext", "evaluate",
    "satisfies_all", "check_consistency", "count_models", "enumerate_models", "read_dimacs",
    "solve", "TheorySet", "load_theory", "parse", "parse_term", "to_text", "data_path",
]
