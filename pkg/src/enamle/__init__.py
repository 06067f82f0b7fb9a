"""Energy-aware ensemble inference under concurrent sensor failures.

Sub-models are trained on rotating halves of correlated sensor groups; at
inference the number of voting sub-models adapts to the missing-data rate.
"""

from .correlation import GroupSet, build_groups, pearson
from .dataset import Dataset, load_csv, normalize, split, synthesize
from .engine import (
    EnamleConfig,
    InferenceOutcome,
    InferenceRequest,
    enamle_infer,
    find_suitable,
    impute,
    missing_rate,
    secoe_infer,
    select_models,
    vote,
)
from .failure import FailureSchedule, inject, run_sweep
from .learners import ClassifierSpec, TrainedEnsemble, fit_imputer, predict_one, train
from .metering import EnergyModel, MeterReport, account, accuracy, joules, throughput
from .plan import EnsemblePlan, build_feature_sets, compute_min_m

__version__ = "0.1.0"
