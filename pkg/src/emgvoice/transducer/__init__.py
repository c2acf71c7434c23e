"""Recurrent EMG-to-speech-feature transduction and its training loop."""

from .model import (TransducerConfig, TransducerModel, TransducerBundle,
                    init_transducer, save_bundle, load_bundle)
from .train import (
    TrainConfig,
    ParallelExample,
    VocalizedExample,
    TrainData,
    PlateauSchedule,
    training_step,
    train_transducer,
)

__all__ = [
    "TransducerConfig",
    "TransducerModel",
    "TransducerBundle",
    "init_transducer",
    "save_bundle",
    "load_bundle",
    "TrainConfig",
    "ParallelExample",
    "VocalizedExample",
    "TrainData",
    "PlateauSchedule",
    "training_step",
    "train_transducer",
]
