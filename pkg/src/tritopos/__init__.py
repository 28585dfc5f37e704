"""Finite-model categorical logic: doctrines, triposes, and the staged
completion that turns a tripos over a small category into a topos,
with every axiom checked by enumeration."""

__version__ = "0.1.0"

from .report import ValidationReport, all_ok, first_failure
from .lattice import FiniteHeytingAlgebra, chain, diamond, parse_algebra
from .category import FinSetCategory, Obj, Mor
from .doctrine import Doctrine, RegularDoctrine, Tripos, Formula
from .models import load_model, ModelBundle, seed_objects
from .completions import tripos_to_topos, Pipeline, STAGE_ORDER
from .topos import check_topos, topos_census, ToposStructure

__all__ = [
    "ValidationReport",
    "all_ok",
    "first_failure",
    "FiniteHeytingAlgebra",
    "chain",
    "diamond",
    "parse_algebra",
    "FinSetCategory",
    "Obj",
    "Mor",
    "Doctrine",
    "RegularDoctrine",
    "Tripos",
    "Formula",
    "load_model",
    "ModelBundle",
    "seed_objects",
    "tripos_to_topos",
    "Pipeline",
    "STAGE_ORDER",
    "check_topos",
    "topos_census",
    "ToposStructure",
    "__version__",
]
