"""Finite-integration-technique discretization: structured hex grid, integer
curl/divergence operators, diagonal material matrices, winding functions."""

from .mesh import FitMesh
from .operators import DiscreteOperators, build_operators
from .materials import (
    MU0,
    BHCurve,
    LinearBH,
    MaterialMap,
    MaterialMatrices,
    SaturatingBH,
    build_materials,
    differential_mu_matrix,
    differential_nu_matrix,
)
from .windings import CoilSpec, WindingFunctions, build_windings
from .fieldspec import FieldSpec, FitModel, build_fit_model, parse_fieldspec

__all__ = [
    "FitMesh",
    "DiscreteOperators",
    "build_operators",
    "MU0",
    "BHCurve",
    "LinearBH",
    "SaturatingBH",
    "MaterialMap",
    "MaterialMatrices",
    "build_materials",
    "differential_mu_matrix",
    "differential_nu_matrix",
    "CoilSpec",
    "WindingFunctions",
    "build_windings",
    "FieldSpec",
    "FitModel",
    "build_fit_model",
    "parse_fieldspec",
]
