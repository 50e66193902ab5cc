"""Contiguity-preserving districting with composite-move tabu search."""

from .contiguity import BlockCutTree, CompositeMove, analyze_district, composite_moves, minimal_move_oracle
from .estimator import TabuDistricting, check_instance
from .harness import ExperimentConfig, RunStats, rank_sum_test, run_experiment, summarize, validate_plan
from .instance import (
    Edge, Instance, InstanceError, Unit, generate_grid, load_instance, read_instance, validate_instance,
)
from .moves import CandidatePool, Move, best_switch, enumerate_candidates, switch_valid
from .objective import ObjectiveConfig, ObjectiveValue, evaluate, pop_dev, ppi, score_move, score_switch
from .plan import InfeasibleMoveError, Plan, apply_move, apply_switch
from .search import SearchConfig, TabuSearch, init_plan, multi_restart, run

__version__ = "0.1.0"
