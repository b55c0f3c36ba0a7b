"""Certified lower and closed-form upper bounds for the norms of
lattice expressions over finite-dimensional l_p spaces (p = inf models
the sup-norm truncations of c_0)."""

from .errors import (
    CapacityError,
    CertificationError,
    DegenerateFamilyError,
    DimensionError,
    ExponentDomainError,
    FBLNormError,
    ParseError,
    SpecFileError,
)
from .expressions import (
    Abs,
    Atom,
    Join,
    LatticeExpr,
    Meet,
    Scale,
    Sum,
    format_expr,
    generator,
    match_moduli_combination,
    neg_part,
    pos_part,
)
from .parser import parse
from .spaces import (
    INF,
    SpaceSpec,
    dual_exponent,
    ell_r_exponent,
    format_exponent,
    norm,
    parse_exponent,
)
from .engine import (
    FunctionalFamily,
    NormEstimate,
    OptimizerConfig,
    constraint_norm_exact,
    constraint_norm_heuristic,
    lower_bound_sweep,
    normalized_value,
    objective,
    optimize_family,
    sample_constraint_lower,
)
from .witnesses import (
    BoundCertificate,
    WalshMatrix,
    allsign_witness,
    certify_moduli_norm,
    grothendieck_constant,
    krivine_upper,
    moduli_expression,
    triangle_upper,
    walsh_matrix,
    walsh_row,
    walsh_witness,
)
from .experiments import (
    ExperimentSpec,
    LambdaSource,
    ReportRow,
    lambda_digest,
    parse_spec_file,
    parse_spec_text,
    run_scan,
    write_csv,
)
from .verify import (
    SUITE_ORDER,
    VerifyOptions,
    VerifyReport,
    run_verification,
)

__version__ = "0.1.0"
