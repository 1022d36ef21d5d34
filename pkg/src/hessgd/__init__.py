"""Hessian-aware scaled gradient descent."""

from ._kernels import BACKEND
from .errors import (
    ConfigError,
    ContractViolation,
    HessGDError,
    InternalContradiction,
    LineSearchStall,
    NumericalFailure,
    ParseError,
    TuningFailed,
    ZeroDirection,
)
from .inexact import SubsampleConfig, SubsampledCurvature, hessian_error_check, sample_size, subsampled_hvp
from .linesearch import ArmijoParams, LineSearchOutcome, armijo_holds, backtrack, forward_track
from .optimizers import (
    MomentumParams,
    PoNoParams,
    ResetScheme,
    adam,
    compute_theory_params,
    fixed_gd,
    heavy_ball,
    nesterov,
    pono_ls,
    scaled_gd,
    unit_step_iterates,
    vanilla_ls_gd,
    wolfe_diagnostic,
)
from .oracle import OracleCounter, Problem, FunctionProblem, as_param, eval_gradient, eval_hvp, eval_value, fd_hvp
from .scaling import (
    AlternationState,
    CurvatureProbe,
    Flag,
    Rule,
    ScalingConfig,
    ScalingDecision,
    classify_curvature,
    select_scaling,
    spc_scaling,
)
from .trace import IterateRecord, RunConfig, Status, Trace

__version__ = "0.1.0"
