from .estimates import (
    AhlforsReport,
    LineEstimateReport,
    SupEstimateReport,
    ahlfors_decay_check,
    ahlfors_epsilon1,
    line_estimate_check,
    manufactured_subsolution,
    poisson_solve,
    sup_estimate_verify,
)
from .exhaustion import ExhaustionFamily, exhaustion_family
from .grid import (
    DIRICHLET,
    PERIODIC,
    TWISTED,
    Axis,
    FormField,
    GridGeometry,
    ReducedAxis,
    boundary,
    build_instanton_domain,
    build_monopole_domain,
    erode,
    integrate,
    interior,
    kahler_form,
    lambda_contract,
    laplacian,
)
from .io import load_field, save_field
from .weights import WeightField, weight_field

__all__ = [name for name in dir() if not name.startswith("_")]
