"""Dynamic classifier and ensemble selection, kDN instance hardness, and the
statistics used to compare DS rules against K-NN."""
from .data import (Dataset, SplitSpec, apply_standardizer, fit_standardizer, generate_synthetic,
                   ingest_csv, load_fixture, stratified_split)
from .pool import ClassifierPool, OracleMatrix, bagging_generate, build_oracle_matrix, train_perceptron
from .region import KNNClassifier, knn_region, knn_search
from .selector import RULES, DynamicSelector
from .hardness import HybridClassifier, bin_by_hardness, kdn
from .evaluation import ResultsTable, friedman_ranks, sign_test_critical, win_tie_loss

__version__ = "0.1.0"
