from .bound import (BoundConditionError, FlHyperparams, RoundHistory, bound_trace,
                    contraction_factor, convergence_bound)
from .data import generate_noniid_data
from .local import (LocalDivergenceError, LocalUpdate, ModelState, aggregate, local_sgd,
                    local_sgd_many, surrogate_gradient, surrogate_minimizer, surrogate_value)
from .losses import LossModel
from .loop import FlRun, RoundPlan, fixed_planner, random_planner, run_ccra_fl
