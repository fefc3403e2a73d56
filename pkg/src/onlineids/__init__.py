"""Online linear classifiers and prequential evaluation for imbalanced intrusion-detection streams."""

from .binary import BINARY_LEARNERS, StepOutcome, make_binary_learner
from .core import (
    PARAM_GRID,
    ConfigurationError,
    CostMatrix,
    DimensionError,
    FeatureVector,
    GaussianLinearModel,
    Hyperparams,
    LabeledExample,
    LinearModel,
    MulticlassModel,
    NumericalError,
    dot,
    hinge_loss,
    margin,
    predict_binary,
)
from .data import (
    Dataset,
    DataFormatError,
    SyntheticSpec,
    cost_matrix_from_counts,
    generate_synthetic,
    load_csv,
    load_sparse,
    write_sparse,
)
from .evaluation import LearnerConfig, grid_search, prequential_run, trial_suite
from .multiclass import MULTICLASS_LEARNERS, make_multiclass_learner

__version__ = "0.1.0"
