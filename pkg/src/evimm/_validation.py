"""Input checks shared by the estimator classes."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_sample(X) -> np.ndarray:
    """Return ``X`` as a 1-D float array; accepts shape ``(n,)`` or ``(n, 1)``."""
    arr = check_array(X, ensure_2d=False, dtype=float, ensure_all_finite=True)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single feature, got {arr.shape[1]} columns")
        arr = arr[:, 0]
    return arr


def check_probability(q) -> np.ndarray:
    qa = np.asarray(q, dtype=float)
    if np.any(~((qa >= 0) & (qa < 1))):
        raise ValueError("probabilities must satisfy 0 <= q < 1")
    return qa
