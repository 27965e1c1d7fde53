"""Topography optimization of planar hyperelastic membranes with pores.

The package designs variable-thickness membranes whose embedded pores
enlarge or contract by prescribed amounts under large stretch.  It couples
a plane-stress Arruda-Boyce nonlinear finite element solver, a
hydraulic-diameter objective with adjoint sensitivities, density filtering
and a moving-asymptotes optimizer.
"""
from ._kernels import BACKEND as kernel_backend
from .config import RunConfig, load_config, load_preset
from .fem import FemModel
from .material import DeformationState, MaterialParams
from .mesh import DomainSpec, Mesh, PoreSpec, build_mesh
from .runner import RunOutputs, run_analysis, run_flat_sheet, run_optimization
from .sensitivity import DesignField, DesignSpec

__version__ = "0.1.0"

__all__ = [
    "DeformationState",
    "DesignField",
    "DesignSpec",
    "DomainSpec",
    "FemModel",
    "MaterialParams",
    "Mesh",
    "PoreSpec",
    "RunConfig",
    "RunOutputs",
    "build_mesh",
    "kernel_backend",
    "load_config",
    "load_preset",
    "run_analysis",
    "run_flat_sheet",
    "run_optimization",
    "__version__",
]
