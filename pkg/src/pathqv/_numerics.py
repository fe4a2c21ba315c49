"""Small numerical helpers shared across modules."""

from __future__ import annotations

import numpy as np


def compensated_cumsum(terms) -> np.ndarray:
    """Running Neumaier-compensated sums along axis 0.

    Works column by column on plain Python floats, which keeps the loop
    cheap enough for a few million terms.
    """
    terms = np.asarray(terms, dtype=float)
    if terms.shape[0] == 0:
        return terms.copy()
    flat = terms.reshape(terms.shape[0], -1)
    out = np.empty_like(flat)
    for col in range(flat.shape[1]):
        s = 0.0
        comp = 0.0
        running = []
        append = running.append
        for v in flat[:, col].tolist():
            t = s + v
            if abs(s) >= abs(v):
                comp += (s - t) + v
            else:
                comp += (v - t) + s
            s = t
            append(s + comp)
        out[:, col] = running
    return out.reshape(terms.shape)


def running_with_origin(terms) -> np.ndarray:
    """Compensated running sums with a leading zero row."""
    terms = np.asarray(terms, dtype=float)
    zero = np.zeros((1,) + terms.shape[1:])
    return np.concatenate([zero, compensated_cumsum(terms)])


def sup_norm(a, b=None) -> float:
    """sup over time of the l2 norm of ``a - b`` (time on axis 0)."""
    a = np.asarray(a, dtype=float)
    diff = a if b is None else a - np.asarray(b, dtype=float)
    if diff.size == 0:
        return 0.0
    flat = diff.reshape(diff.shape[0], -1)
    return float(np.sqrt((flat * flat).sum(axis=1)).max())
