"""Toy-scale multi-view, multi-label classifier for the labeling pipeline.

Reads the pipeline's dataset manifest and binary sheet files, trains per-view
encoders whose features are concatenated into one sigmoid multi-label head,
and emits score-matrix CSVs the evaluator accepts unchanged.
"""

from .config import TrainConfig
from .model import MultiViewClassifier
from .train import predict, train

__version__ = "0.1.0"

__all__ = ["TrainConfig", "MultiViewClassifier", "train", "predict", "__version__"]
