"""Exact computations on filtered Novikov chain complexes and their opposites."""
from .novikov_arith import ExactValue, Field, NovikovScalar, ValuationConfig
from .fn_complex import Chain, ComplexSpec, opposite, parse_chain, parse_fnc, read_fnc, validate, write_chain, write_fnc
from .ortho_linalg import Barcode, barcode_reduce, orthonormalize, project_optimal
from .duality_invariants import (
    boundary_depth,
    boundary_depth_via_linking,
    dual_witness_left,
    dual_witness_right,
    spectral_number,
    verify_spectral_duality,
)

__all__ = [
    "Barcode", "Chain", "ComplexSpec", "ExactValue", "Field", "NovikovScalar", "ValuationConfig",
    "barcode_reduce", "boundary_depth", "boundary_depth_via_linking", "dual_witness_left",
    "dual_witness_right", "opposite", "orthonormalize", "parse_chain", "parse_fnc", "project_optimal",
    "read_fnc", "spectral_number", "validate", "verify_spectral_duality", "write_chain", "write_fnc",
]
