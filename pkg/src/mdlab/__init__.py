"""Numerical laboratory for thermal one-particle structures and localized
real-subspace duality of a lattice scalar field."""

from .subspaces import (
    RealLinearOperator,
    RealSubspace,
    RealifiedSpace,
    SubspaceError,
    apply_operator,
    check_bounded_inverse_identity,
    intersect,
    max_principal_angle,
    orthocomplement,
    orthonormalize,
    principal_angles,
    sum_closure,
)
from .quasifree import GroundStructure, StructureError, ThermalDoubling, build_thermal
from .minkowski import FieldModel, Region, TestFunction
from .config import LabConfig, load_config
from .checks import CHECKS, run_check, run_sweep

__version__ = "0.1.0"
