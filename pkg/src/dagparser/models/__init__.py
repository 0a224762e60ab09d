"""Transition classifiers: an averaged perceptron and a BiLSTM + MLP scorer."""
from .io import ModelFormatError, VersionMismatchError, load_model, save_model
from .neural import DESK_DIMS, FULL_DIMS, NeuralScorer, gradient_check, word_dropout_probability
from .optim import AMSGrad, SGD, amsgrad_step
from .perceptron import AveragedPerceptron
from .training import Parser, TrainConfig, TrainingError, train
from .vectors import VectorFormatError, load_pretrained_vectors
from .vocab import Vocabulary

__all__ = [
    "AMSGrad", "AveragedPerceptron", "DESK_DIMS", "ModelFormatError", "NeuralScorer", "FULL_DIMS",
    "Parser", "SGD", "TrainConfig", "TrainingError", "VectorFormatError", "VersionMismatchError",
    "Vocabulary", "amsgrad_step", "gradient_check", "load_model", "load_pretrained_vectors",
    "save_model", "train", "word_dropout_probability",
]
