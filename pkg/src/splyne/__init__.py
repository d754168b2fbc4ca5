"""LR B-splines and truncated hierarchical B-splines on 2D box partitions."""
from .assembly import (EigenSummary, NumericalError, SymmetricOperator, assemble, assemble_pair,
                       condition_estimate, eigensolve, eigvec_heatmap, l2_project)
from .boxmesh import (BoxMesh, HierarchicalSpec, MeshError, MeshRectangle, build_hierarchical, central_spec,
                      diagonal_spec, dump_mesh, insert_meshline, load_mesh, tensor_mesh)
from .geometry import Box
from .harness import ConfigError, RunRecord, Scenario, boundary_study, build_space, make_spec, run_scenario
from .kernels import BACKEND
from .lrspace import LRSpace, dump_space, lr_construct, lr_hierarchical, refine_region, tensor_space
from .overload import (OverloadReport, TMeshIncompatible, UnsupportedDegree, diagonal_modify, lrb1_modify,
                       lrbno_modify, overload_report, tlrbno_modify)
from .splinecore import (LocalKnotVector, TensorBSpline, eval_tensor, eval_univariate,
                         eval_univariate_deriv, grad_tensor, split_univariate)
from .svg import render_mesh_svg
from .thbspace import THBSpace, dump_thb, thb_construct, two_scale

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Box",
    "BoxMesh",
    "ConfigError",
    "EigenSummary",
    "HierarchicalSpec",
    "LRSpace",
    "LocalKnotVector",
    "MeshError",
    "MeshRectangle",
    "NumericalError",
    "OverloadReport",
    "RunRecord",
    "Scenario",
    "SymmetricOperator",
    "THBSpace",
    "TMeshIncompatible",
    "TensorBSpline",
    "UnsupportedDegree",
    "assemble",
    "assemble_pair",
    "boundary_study",
    "build_hierarchical",
    "build_space",
    "central_spec",
    "condition_estimate",
    "diagonal_modify",
    "diagonal_spec",
    "dump_mesh",
    "dump_space",
    "dump_thb",
    "eigensolve",
    "eigvec_heatmap",
    "eval_tensor",
    "eval_univariate",
    "eval_univariate_deriv",
    "grad_tensor",
    "insert_meshline",
    "l2_project",
    "load_mesh",
    "lr_construct",
    "lr_hierarchical",
    "lrb1_modify",
    "lrbno_modify",
    "overload_report",
    "refine_region",
    "render_mesh_svg",
    "make_spec",
    "run_scenario",
    "split_univariate",
    "tensor_mesh",
    "tensor_space",
    "thb_construct",
    "tlrbno_modify",
    "two_scale",
]
