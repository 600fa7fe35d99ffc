"""Binary cross-entropy on logits."""
from __future__ import annotations

import numpy as np


def sigmoid(z):
    """Numerically stable logistic function."""
    z = np.asarray(z, np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_with_logits(logits, labels):
    """Per-element BCE loss and d(loss)/d(logit).

    loss = softplus(-z) for label 1, softplus(z) for label 0, evaluated in
    the stable branch form max(z,0) - z*y + log1p(exp(-|z|)); the gradient
    is sigmoid(z) - y. Loss is returned in float64, the gradient in float32.
    """
    z = np.asarray(logits, np.float64)
    y = np.asarray(labels)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    y = y.astype(np.float64)
    loss = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    grad = (sigmoid(z) - y).astype(np.float32)
    return loss, grad
