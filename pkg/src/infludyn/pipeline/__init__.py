"""Windowing, oversampling, training, evaluation and grid search."""
from .evaluation import AucSummary, EvalReport, evaluate, report_from_scores, score_table
from .metrics import BootstrapCI, auc, bootstrap_ci
from .search import GRID_FIELDS, GridResult, GridSpec, grid_search, select_best, write_results_csv
from .smote import SmoteSample, smote_oversample, smote_samples
from .training import EarlyStopping, TrainConfig, TrainResult, make_validator, train_model, window_scores
from .windows import WindowSpec, make_windows, split_seen_unseen, validation_groups
