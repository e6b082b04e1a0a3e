"""Maximal homogeneous partitions of multi-resolution regression data via two-part MDL."""

from .core import (Cluster, Dataset, HierarchyTree, InferenceReport, Partition, PartitionError,
                   StructureError, TreeError, Violation, restrict, validate_tree)
from .encoding import (bits_real, bits_vector, cluster_irr, model_bits, model_irr,
                       partition_code_length, residual_bits)
from .evaluation import Confusion, confusion, null_rmse, partition_rmse, pooled_rmse, prf1
from .homogeneity import FoldPlan, build_folds, eta, pearson_corr
from .regression import (FitOptions, InsufficientRows, RegressionModel, fit, fit_null, fit_ols,
                         predict, rmse, transform_exponential)
from .search import (SearchConfig, count_mrc_partitions, enumerate_mrc_partitions,
                     find_maximal_homogeneous_partition, greedy_partition, select_optimal_model)
from .simgen import GroundTruth, SimSpec, generate

__version__ = "0.1.0"
