"""pnsubd: point-normal subdivision for curves and surfaces.

Control points together with unit control normals are refined by nonlinear
generalizations of classical subdivision schemes (B-splines, 4/6-point,
Catmull-Clark, Doo-Sabin, Loop, Kobbelt, Butterfly).  Circles, circular
cylinders and spheres sampled with matching normals are reproduced exactly;
constant or absent normals reduce every scheme to its linear original.
Eigenvalue-tuned variants move curvature continuity to extraordinary
vertices.
"""

from .analysis import (
    CurvatureField,
    PrimitiveFit,
    compare_meshes,
    decay_rate,
    discrete_curvature,
    primitive_residual,
)
from .curves import (
    PNPolygon,
    PointNormal,
    curvature_comb,
    difference_tensor,
    linear_refine,
    load_polyline,
    pn_height,
    pn_refine_curve,
    save_polyline,
    spherical_refine,
    subdivide_curve,
)
from .errors import PNSubdError
from .meshes import MeshReport, PNMesh, load_obj, obj_dumps, save_obj, validate
from .refine import (
    estimate_normals,
    linear_refine_mesh,
    pn_refine_mesh,
    subdivide_surface,
)
from .spectra import (
    EigenSpectrum,
    LocalConfig,
    assemble_local_matrix,
    limit_point_and_normal,
    modified_stencils,
    pn_modified_refine,
    spectrum,
    tune,
)
from .stencils import (
    StencilSet,
    build_stencils,
    stencils_butterfly,
    stencils_catmull_clark,
    stencils_doo_sabin,
    stencils_kobbelt,
    stencils_loop,
)
from .symbols import (
    LaurentSymbol,
    Mask,
    bspline_mask,
    certify_smoothness,
    contractivity_factor,
    curve_mask,
    dd_interpolatory_mask,
    divide_smoothing_factor,
)

__version__ = "0.1.0"

__all__ = [
    "CurvatureField", "PrimitiveFit", "compare_meshes", "decay_rate",
    "discrete_curvature", "primitive_residual",
    "PNPolygon", "PointNormal", "curvature_comb", "difference_tensor",
    "linear_refine", "load_polyline", "pn_height", "pn_refine_curve",
    "save_polyline", "spherical_refine", "subdivide_curve",
    "PNSubdError",
    "MeshReport", "PNMesh", "load_obj", "obj_dumps", "save_obj", "validate",
    "estimate_normals", "linear_refine_mesh", "pn_refine_mesh",
    "subdivide_surface",
    "EigenSpectrum", "LocalConfig", "assemble_local_matrix",
    "limit_point_and_normal", "modified_stencils", "pn_modified_refine",
    "spectrum", "tune",
    "StencilSet", "build_stencils", "stencils_butterfly",
    "stencils_catmull_clark", "stencils_doo_sabin", "stencils_kobbelt",
    "stencils_loop",
    "LaurentSymbol", "Mask", "bspline_mask", "certify_smoothness",
    "contractivity_factor", "curve_mask", "dd_interpolatory_mask",
    "divide_smoothing_factor",
    "__version__",
]
