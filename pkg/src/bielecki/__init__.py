"""Weighted sup-metric (Bielecki-type) renorming for integral and functional equations.

The package builds grids, quadrature measures and relations
(:mod:`bielecki.grid`), weights and contraction certificates
(:mod:`bielecki.renorm`), certified Picard solvers (:mod:`bielecki.solver`),
mixed-derivative Cauchy problems (:mod:`bielecki.cauchy`) and a small
expression language used by the command line (:mod:`bielecki.exprlang`).
"""

from .cauchy import (
    BoundaryReport,
    CauchyProblem,
    DiagonalProjector,
    boundary_to_forcing,
    check_boundary,
    enumerate_pi_n,
    mixed_partial_residual,
    solve_cauchy,
    to_integral_problem,
)
from .errors import (
    AdmissibilityError,
    BieleckiError,
    CertificateError,
    ConvergenceError,
    DivergenceError,
    GridError,
    InfeasibleError,
    InterpolationError,
    KernelEvaluationError,
    RelationStructureError,
    ShapeError,
)
from .grid import (
    Grid,
    Measure,
    Relation,
    RelationReport,
    as_grid_function,
    build_tensor_grid,
    relation_from_sets,
    relation_full,
    relation_volterra,
    trapezoid_measure,
    uniform_grid,
    validate_relation,
)
from .renorm import (
    Certificate,
    Modulus,
    RadiusEstimate,
    Weight,
    bielecki_distance,
    build_weight_constant_lipschitz,
    build_weight_general,
    contraction_factor,
    core_map_apply,
    exponential_weight,
    iterate_metric_distance,
    presic_contraction_factor,
    product_weight_f2,
    retarded_contraction_factor,
    spectral_radius_sequence,
    sup_distance,
    volterra_core_closed_form,
)
from .solver import (
    ConvergenceReport,
    IntegralProblem,
    PresicProblem,
    Retardation,
    SolverConfig,
    picard_step,
    presic_step,
    solve_integral,
    solve_linear_fredholm,
    solve_linear_volterra,
    solve_presic,
)

__version__ = "0.1.0"
