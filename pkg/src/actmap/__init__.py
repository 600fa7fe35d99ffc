"""Typing/writing activity localisation in long session videos.

Detection streams plus per-student table regions become 3-second
spatiotemporal proposals, a low-parameter dyadic 3D-CNN classifies them,
and the results are clustered into interactive per-person activity maps.
"""

__version__ = "0.1.0"

from .family import ModelConfig, build_model, count_params, d_fr, load_weights, save_weights

__all__ = [
    "ModelConfig",
    "build_model",
    "count_params",
    "d_fr",
    "load_weights",
    "save_weights",
]
