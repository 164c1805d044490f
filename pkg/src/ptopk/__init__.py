"""Rank probabilities and probabilistic top-k queries over x-Relations."""

from .baseline import BaselineStats, baseline_pij, dp_step, recompute_r
from .condprob import (
    CondProbScanner,
    CondProbStats,
    StepOutput,
    apply_rc,
    cond_step,
    condprob_pij,
    solve_c,
)
from .datagen import GenConfig, generate, generate_with_report
from .errors import (
    IllConditioned,
    InfeasibleConfig,
    ParseError,
    PtopkError,
    QueryError,
    ValidationError,
    WorldCapExceeded,
)
from .queries import (
    QueryAnswer,
    global_topk,
    pk_topk,
    ptk,
    ptk_scan,
    topk_generator,
    ukranks,
    upper_bound,
)
from .rankmatrix import RankMatrix
from .worlds import PossibleWorld, enumerate_worlds, oracle_pij, oracle_tkp
from .xrelation import (
    TupleRecord,
    XRelation,
    XTuple,
    dumps_xrelation,
    iter_by_score,
    load_xrelation,
    prefix_existence,
    read_xrelation,
    relation_from_probs,
)

__version__ = "0.1.0"
