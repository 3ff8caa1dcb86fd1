"""Classifiers: threshold baseline, transformer, feed-forward baseline."""

from eegarm.model.ffnn import FFNNConfig
from eegarm.model.metrics import EvalReport
from eegarm.model.training import Classifier, History, evaluate, train, window_size_study
from eegarm.model.transformer import TransformerConfig

__all__ = ["Classifier", "EvalReport", "FFNNConfig", "History", "TransformerConfig",
           "evaluate", "train", "window_size_study"]
