"""Reverse-mode autodiff core and the sentence classifier topologies."""

from .autograd import Tensor
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradCheckResult, grad_check, relative_error
from .model import (TOPOLOGIES, ModelConfig, SequenceClassifier, attention_head, build_model,
                    forward, loss, predict_labels)
from .optim import Adam, RMSprop
from .train import EncodedSet, TrainerConfig, batch_loss, cross_validate, decide, kfold_indices, score, train

__all__ = [
    "Tensor", "ModelConfig", "SequenceClassifier", "TOPOLOGIES", "build_model", "forward",
    "attention_head", "loss", "predict_labels", "grad_check", "relative_error", "GradCheckResult",
    "Adam", "RMSprop", "TrainerConfig", "EncodedSet", "batch_loss", "train", "cross_validate",
    "kfold_indices", "decide", "score", "save_checkpoint", "load_checkpoint",
]
