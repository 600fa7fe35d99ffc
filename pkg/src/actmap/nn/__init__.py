from .layers import BatchNorm3d, Conv3d, Dense, MaxPool3d, ReLU
from .loss import bce_with_logits, sigmoid
from .optim import Adam

__all__ = [
    "Adam",
    "BatchNorm3d",
    "Conv3d",
    "Dense",
    "MaxPool3d",
    "ReLU",
    "bce_with_logits",
    "sigmoid",
]
