"""Numerical curvature toolkit for Finsler metrics built from split Riemannian data.

The package computes fundamental/Cartan tensors, geodesic sprays, Berwald
and Landsberg tensors, Busemann-Hausdorff densities, distortion and
S-curvature for four metric families (Riemannian, Randers, profile and
split-quadratic norms); constructs adapted charts on geometry models; and
ships verification suites that cross-check closed-form results against the
generic jet pipeline.
"""

from finslerkit import (
    cli,
    config,
    curvature,
    expressions,
    jets,
    landsberg,
    linalg,
    manifolds,
    metrics,
    sampling,
    verify,
)
from finslerkit.curvature import (
    aligned_closed_forms,
    berwald_landsberg_tensors,
    bh_density,
    cartan_tensor,
    distortion,
    fundamental_tensor,
    s_curvature_direct,
    s_curvature_formula,
    s_vanishing_chart_identities,
    spray,
)
from finslerkit.jets import MultiOrder, PartialTable, cross_check, fd_partial, taylor_eval
from finslerkit.landsberg import (
    FiberField,
    LinearMap,
    block_rotation,
    invariance_check,
    isometry_action,
    landsberg_residual,
    spray_operator,
    spray_source_field,
)
from finslerkit.manifolds import (
    ManifoldModel,
    check_chart_identities,
    flat_product,
    hopf_sphere,
    normal_chart,
    polar_plane,
    product_structure_criterion,
)
from finslerkit.metrics import (
    Alpha1Alpha2Spec,
    AlphaBetaSpec,
    Generator,
    MetricSpec,
    RandersSpec,
    RawNormSpec,
    RiemannianSpec,
    euclidean_spec,
    generator,
    metric_from_model,
    norm_value,
    validate_norm,
)
from finslerkit.verify import (
    classify,
    indicatrix_cartan_trace,
    non_landsberg_certificate,
    s_curvature_dual_check,
    s_vanishing_equivalence,
)

__version__ = "0.1.0"
