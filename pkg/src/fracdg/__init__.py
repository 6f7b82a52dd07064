"""Interior-penalty DG solver for Darcy flow in fractured porous media."""

from .basis import DGField, ReferenceElement, l2_norms, piecewise, project
from .mesh import (
    EdgeClass,
    FractureSegmentSpec,
    FractureVertex,
    Mesh,
    MeshError,
    classify_fracture_vertices,
    generate_structured,
    tensor_mesh,
)
from .problem import ProblemSpec
from .assemble import AssemblyContext, SparseSystem, build_system, dg_norm, residual_check
from .sparse import SolverConfig, SolverError, solve

__version__ = "0.1.0"
