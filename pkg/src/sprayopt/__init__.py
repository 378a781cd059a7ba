"""Multi-objective optimization of HVOF thermal-spray parameters.

Gamma log-linear property models, Pareto tools, and three solvers:
weighted-sum SQP, desirability direct search and NSGA-II.
"""

from .desirability import (
    DesirabilitySpec, DesirabilityTarget, DirectSearchConfig, desirability_max, desirability_min,
    maximize_desirability, overall_desirability,
)
from .glm import (
    DEFAULT_REGISTRY, MODEL_NAMES, PARAM_NAMES, WC_CO_CR_SPACE, GammaLogLinearModel, ModelRegistry,
    ModelTerm, ParameterSpace, ParameterVector, convexity_report, denormalize, get_model, normalize,
)
from .nsga2 import NsgaConfig
from .nsga2 import run as run_nsga2
from .pareto import (
    Candidate, ObjectiveVector, SolutionSet, crowding_distance, hypervolume_2d, ideal_vector,
    non_dominated_sort, pareto_filter, strongly_dominates, weakly_dominates,
)
from .problems import FunctionProblem, ObjectiveSpec, ProblemSpec, builtin, evaluate, validate_published
from .weighted_sum import SqpConfig, sqp_minimize, weight_lattice, weighted_sum_sweep

__version__ = "0.1.0"
