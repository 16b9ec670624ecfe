"""Minimal dependency-free CNN engine (numpy arrays as tensors)."""

from .checkpoint import load_model, save_model
from .gradcheck import gradient_check
from .layers import BatchNorm, Conv2D, Dense, Flatten, MaxPool2D, ReLU
from .losses import bce_loss, cross_entropy_loss
from .model import CnnModel, ModelConfig, predict_multilabel
from .optim import Adam, AdamState, adam_step

__all__ = [
    "Adam",
    "AdamState",
    "BatchNorm",
    "CnnModel",
    "Conv2D",
    "Dense",
    "Flatten",
    "MaxPool2D",
    "ModelConfig",
    "ReLU",
    "adam_step",
    "bce_loss",
    "cross_entropy_loss",
    "gradient_check",
    "load_model",
    "predict_multilabel",
    "save_model",
]
