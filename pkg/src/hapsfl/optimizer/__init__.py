from .blocks import (bandwidth_root, evaluate_delay, min_upload_time, solve_sub1, solve_sub2,
                     solve_sub3, solve_sub4)
from .feasibility import FeasibilityReport, check_allocation, feasibility_check
from .simplex import LpResult, solve_lp
from .solver import SolveOutcome, initial_allocation, kkt_residuals, repair, solve, solve_problem
from .types import Allocation, DelayBreakdown, Problem, SolverOptions, SolverState
