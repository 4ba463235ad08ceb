"""Unsupervised skill discovery by maximising the mutual information between
skills and states, at desk scale."""

from .core import TrainConfig, train
from .errors import ConfigError, FormatError, InputError, NumericError

__all__ = ["TrainConfig", "train", "ConfigError", "FormatError", "InputError", "NumericError"]
__version__ = "0.1.0"
