"""Fixed points of pointwise nonexpansive operators on discretised
finite-measure function spaces."""

from .diagnostics import (
    EgoroffReport,
    ResidualChainReport,
    ZolezziReport,
    egoroff_split,
    indicator_densities,
    verify_residual_chain,
    zolezzi_check,
)
from .errors import (
    CertificationError,
    FixpointError,
    InvalidArgument,
    OperatorEvaluationError,
    PreconditionViolation,
    SetViolation,
)
from .expr import EvaluationError, ParseError, eval_ast, lipschitz_bound_in_u, parse, pretty
from .grid import (
    GridFunction,
    MeasureGrid,
    discrete_lipschitz,
    integrate_abs_diff,
    make_uniform_grid,
    norm_p,
    norm_sup,
)
from .operators import (
    BoxSet,
    CertificateReport,
    PointwiseOperator,
    apply,
    certify_strong_nonexpansive,
    compose,
    convex_combine,
    from_expression,
    identity,
    scale,
    translate_problem,
)
from .solver import (
    DampingSchedule,
    SolvePath,
    SolveResult,
    aitken_limit,
    approx_fixed_point_path,
    extract_pointwise_limit,
    picard_path,
    picard_solve,
    resolvent,
)

__version__ = "0.1.0"
