"""Numerical laboratory for curvature-coupled connection fields on closed surfaces.

Two halves: a mesh pipeline (discrete exterior calculus, Hodge theory,
cubic coefficient fields, a convex variational solver for the coupled
curvature system) and a chart oracle that verifies every connection-level
identity with exact pointwise derivatives.
"""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    GeometryError,
    LineSearchError,
    MeshError,
    MlcError,
    PreconditionError,
    UsageError,
)
from .mesh import (
    EdgeLengthMetric,
    TriMesh,
    builtin_mesh_path,
    euler_characteristic,
    flat_torus,
    generate_genus,
    load_off,
    save_off,
)
from .solver import (
    ProblemData,
    SolveConfig,
    SolveReport,
    SubstitutedData,
    functional_value,
    gradient,
    hessian_apply,
    route_agreement,
    solve,
    substitute,
)
from .jets import Jet2Scalar
from .charts import (
    CHART_TOLERANCES,
    SCENARIOS,
    ChartTriple,
    ConnectionField,
    levi_civita,
    liouville,
    minimality_residual,
    projective_change,
    random_triple,
    ricci_split_and_schouten,
    riemann_and_ricci,
    run_chart_suite,
    run_scenario,
    trace_identity_residual,
    twisted_connection,
)

# mlc.cli and mlc.report import lazily (matplotlib); use them as submodules.
