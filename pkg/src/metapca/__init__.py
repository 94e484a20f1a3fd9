"""metapca: pooled support-union recovery for sparse PCA.

Pools samples from auxiliary tasks to recover the support union of a
principal-component matrix via l1-penalized Fantope optimisation, then
solves a dimension-reduced novel task restricted to that support.
"""

from .baselines import independent_union, multitask_solve
from .errors import (AssumptionViolated, InvalidCovariance, InvalidData,
                     InvalidIndex, InvalidMatrix, InvalidSpec, MetapcaError,
                     SolverDiverged)
from .estimate import PooledCov, pooled_cov, sample_cov, submatrix
from .experiments import (ExperimentGrid, ResultRow, SummaryRow, emit_results,
                          preset_grids, run_experiment, summarize)
from .fantope import (SolveReport, SolverConfig, extract_support,
                      project_fantope, solve_penalized)
from .genmodel import (GroundTruth, ModelSpec, TaskData, generate_tasks,
                       make_base_cov, make_task_cov, sample_task_data, stream)
from .matcore import (TOL, EigPair, SymMat, eig_sym, load_matrix_csv, norm,
                      project_l1_ball, save_matrix_csv, soft_threshold)
from .meta import MetaResult, default_rho, recover_support_union
from .novel import NovelResult, default_novel_rho, recover_novel_support
from .theory import (TheoryReport, compute_thresholds, epsilon_for_bound,
                     tail_bound_check)

__version__ = "0.1.0"
