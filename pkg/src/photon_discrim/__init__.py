"""Discriminate coherent from thermal light with few photon-counting measurements."""

from .classifiers import (
    AdalineModel,
    NaiveBayesModel,
    adaline_predict,
    adaline_train,
    evaluate,
    nb_classify,
)
from .dataset import FeatureVector, SubsetCollection, build_collection, featurize
from .errors import (
    CapacityError,
    ConfigurationError,
    DomainError,
    NumericError,
    PhotonDiscrimError,
    TrainingError,
)
from .harness import AccuracyReport, SweepConfig, emit_histograms, export_projection, run_sweep
from .nets import CnnModel, MnnModel, cnn_predict, cnn_train, mnn_predict, mnn_train
from .stats import (
    CANONICAL_NBARS,
    PhotonCountSequence,
    SourceKind,
    coherent_pmf,
    sample_counts,
    theoretical_feature_pmf,
    thermal_pmf,
)
from .trace import PulseShape, VoltageTrace, count_photons, synthesize_trace

__version__ = "0.1.0"
