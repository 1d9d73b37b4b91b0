"""Linearized sequence and dynamics compatibility kernels for 3D skeleton actions."""

from .classifier import EvalReport, TrainedModel, combine, evaluate, predict, train
from .datasets import Dataset, SplitSpec, cross_subject_split, load_native, synth_actions
from .dck import DckDescriptor, DckParams, dck_descriptor, dck_exact, dck_size
from .errors import ConfigError, DegenerateSegment, InvalidArgument, NumericalFailure, ParseError
from .preprocess import Preprocessor, Sequence, SkeletonTopology
from .sck import SckDescriptor, SckParams, sck_descriptor, sck_exact, sck_size

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "Dataset", "DckDescriptor", "DckParams", "DegenerateSegment",
    "EvalReport", "InvalidArgument", "NumericalFailure", "ParseError", "Preprocessor",
    "SckDescriptor", "SckParams", "Sequence", "SkeletonTopology", "SplitSpec",
    "TrainedModel", "combine", "cross_subject_split", "dck_descriptor", "dck_exact",
    "dck_size", "evaluate", "load_native", "predict", "sck_descriptor", "sck_exact",
    "sck_size", "synth_actions", "train",
]
