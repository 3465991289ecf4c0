"""Stacked logistic combination of base-model class scores with per-class threshold moving."""

from ._accel import BACKEND, HAVE_NUMBA
from .bounds import BoundInterval, ClassNorms, bound_interval, class_norms, verify_class, verify_weight_bounds
from .combiner import (
    CombinerModel,
    TrainingConfig,
    TrainingMeta,
    combined_scores,
    predict_combined,
    train_br_combiners,
    train_class_combiner,
)
from .core import CombinerParams, assign_class, biased_sigmoid, combine_scores, sigmoid
from .data_io import GoldLabels, PredictionTable, binary_mapping, load_gold, load_predictions
from .errors import (
    DataError,
    DegenerateClassError,
    DegenerateDataError,
    DimensionError,
    MappingError,
    MetacombError,
    ParameterError,
    SingularityError,
)
from .metrics import accuracy, confusion, evaluate, f1_value, grouped_evaluate, macro_f1
from .synth import SyntheticSpec, flip_distribution, generate
from .thresholds import ThresholdVector, apply_thresholds, make_grid, train_cs_cut, train_threshold

__version__ = "0.1.0"
