"""Adam optimiser with bias correction."""
from __future__ import annotations

import numpy as np


class Adam:
    """Standard Adam; moments are kept per parameter name, updates in place."""

    def __init__(self, learning_rate: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, named_params):
        """Apply one update. ``named_params`` yields (name, param, grad) triples."""
        triples = list(named_params)
        for name, _, grad in triples:
            if not np.all(np.isfinite(grad)):
                bad = int(np.flatnonzero(~np.isfinite(np.ravel(grad)))[0])
                raise FloatingPointError(f"non-finite gradient in '{name}' at flat index {bad}")
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for name, param, grad in triples:
            m = self._m.get(name)
            if m is None:
                m = self._m[name] = np.zeros_like(param)
                self._v[name] = np.zeros_like(param)
            v = self._v[name]
            m += (1.0 - self.beta1) * (grad - m)
            v += (1.0 - self.beta2) * (grad * grad - v)
            param -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.epsilon)
