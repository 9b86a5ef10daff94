"""Mixed-data matrix completion under generalized latent factor models.

Entries of a partially observed matrix follow per-column exponential
families (normal, binomial, poisson) whose natural parameters form a
low-rank signal matrix.  The package provides two initial estimators
(a constrained joint MLE over factors and a nuclear-norm-ball MLE over the
signal matrix), three entrywise refinement methods built on refitting the
score equations against SVD loadings, a seeded simulation benchmark, and a
held-out likelihood evaluation pipeline.
"""

from .data import (DataFormatError, ObservedMatrix, from_dense, from_triplets,
                   read_dense_csv, read_triplets, write_dense_csv,
                   write_triplets)
from .evaluate import HoldoutSplit, holdout_split, ingest_movielens, test_loglik
from .families import (Family, binomial, cumulant, log_density, mean, normal,
                       parse_family, poisson, sample, variance)
from .initial import (CjmleConfig, NbeConfig, NoProgressError, cjmle_fit,
                      init_from_data, nbe_fit, project_max_norm,
                      project_nuclear_ball)
from .likelihood import score_col, score_row, weighted_loglik
from .linalg import (FactorPair, SvdTriple, max_norm_error,
                     project_two_to_inf, scaled_frobenius_error, top_r_svd,
                     two_to_inf_norm)
from .refine import (RefineConfig, RowSplit, default_c2, refine_multi_split,
                     refine_no_split, refine_split, split_rows)
from .solvers import (EmptyColumnError, EmptyRowError, NewtonConfig,
                      SingularHessianError, SolveReport, solve_all_cols,
                      solve_all_rows, solve_col, solve_row)
from .simbench import (RunResult, SimSetting, generate_observation,
                       generate_truth, run_procedures, settings_registry)

__version__ = "0.1.0"
