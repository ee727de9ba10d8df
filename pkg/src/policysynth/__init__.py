"""policysynth: synthesis, repair, and simulation of dimensionally-typed
action selection policies from demonstrations."""

from .dimensions import (
    BOOL,
    DIMENSIONLESS,
    BoolType,
    Dimension,
    OpRule,
    OpSignature,
    ScalarType,
    TypeEnv,
    ValueType,
    VectorType,
    builtin_signatures,
    check_expr,
    check_policy,
    dim_add,
    dim_sub,
    register_operator,
)
from .dsl import (
    ActionEq,
    And,
    BinaryOp,
    Branch,
    Const,
    FalseP,
    Gt,
    HoleExpr,
    HoleParam,
    HolePred,
    InputVar,
    Lt,
    Or,
    Param,
    Policy,
    Pred,
    TrueP,
    UnaryOp,
    collect_holes,
    collect_pred_holes,
    parse_policy,
    parse_pred,
    print_expr,
    print_policy,
    print_pred,
)
from .enumeration import (
    ERROR,
    Candidate,
    EnumConfig,
    enum_count_report,
    enum_features,
    signatures_match,
)
from .errors import (
    UNSAT,
    CapacityExceeded,
    DivisionByZero,
    EmptyCandidates,
    EvalError,
    ParseError,
    PolicyError,
    SchemaError,
    TypeCheckError,
    UnknownAction,
    UnknownInput,
    UnknownOperator,
    Unsat,
)
from .interp import WorldState, eval_expr, eval_policy, eval_pred, partial_eval
from .paramsolve import (
    ParamConstraintSystem,
    apply_adjustments,
    build_system,
    policy_params,
    rank_assignment,
    repair,
    solve,
)
from .synth import (
    L2,
    L3,
    Demonstration,
    SubProblem,
    divide_problem,
    enum_predicates,
    fill_expressions,
    make_policy,
)
from .worldio import (
    DomainDef,
    InputSpec,
    load_demos,
    load_domain,
    load_policy,
    save_demos,
    save_policy,
)

__version__ = "0.1.0"
