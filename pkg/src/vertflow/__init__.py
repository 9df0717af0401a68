"""vertflow: exact computation on interval exchanges and translation flows."""

__version__ = "0.1.0"

from .exact_linalg import (  # noqa: F401
    QVector,
    Rational,
    default_basis_values,
    evaluate_numeric,
    rank_over_Q,
    rationally_independent,
)
from .permutations import (  # noqa: F401
    LabeledPermutation,
    find_acceptable_symbols,
    iet_apply,
    rauzy_class,
    translation_matrix,
)
from .suspension import (  # noqa: F401
    SuspensionDatum,
    polygon_vertices,
    polygonal_rv_left,
    polygonal_rv_right,
    roof_from_tau,
    triangulate,
)
from .circle_dynamics import (  # noqa: F401
    ContinuedFraction,
    StepFunction,
    birkhoff_sum,
    distribution,
    rigidity_indices,
    tower_difference,
)
from .pipeline import RotationSpecialFlow, VerdictReport, run_pipeline  # noqa: F401
from .transport import (  # noqa: F401
    PCDensity,
    bisection_transport,
    elementary_H,
    surface_transport,
)
