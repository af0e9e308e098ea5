"""Operators whose orbits either blow up or come back, on l^p sequence spaces."""
from .core import Field, LineUnion, PlanePoint, SparseVector, classify_base_point, lp_norm, project_P
from .diagonal import DiagonalOperator, ModulusSchedule, build_schedule, orbit_norm
from .hajek_smith import HSLayout, HSOperator, build_hs_layout
from .rotation import RotationOperator
from .separating import make_forms

__all__ = [
    "Field", "LineUnion", "PlanePoint", "SparseVector", "classify_base_point", "lp_norm", "project_P",
    "DiagonalOperator", "ModulusSchedule", "build_schedule", "orbit_norm",
    "HSLayout", "HSOperator", "build_hs_layout", "RotationOperator", "make_forms",
]
