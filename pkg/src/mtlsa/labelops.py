"""Label-vector algebra: pseudo labels, temperature sharpening, interpolation.

Label vectors are 1-D float arrays on the probability simplex (entries >= 0,
sum 1, length >= 2). They are plain numpy arrays; `check_label_vector`
enforces the contract where a function's input is untrusted.
"""

import numpy as np

SIMPLEX_TOL = 1e-9
CLAMP_FLOOR = 1e-12


def check_label_vector(vec):
    """Validate and return `vec` as a float64 label vector."""
    v = np.asarray(vec, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise ValueError(f"label vector must be 1-D with length >= 2, got shape {v.shape}")
    if np.any(v < 0):
        raise ValueError("label vector has negative entries")
    if abs(float(v.sum()) - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"label vector sums to {v.sum()!r}, expected 1")
    return v


def to_pseudo(soft):
    """One-hot vector at the argmax of `soft`; ties break to the lowest index."""
    v = check_label_vector(soft)
    out = np.zeros_like(v)
    out[int(np.argmax(v))] = 1.0
    return out


def sharpen(soft, temperature):
    """Power-renormalize `soft` with exponent 1/temperature.

    Entries are clamped at 1e-12 before the power so exact zeros do not
    collapse the transform. temperature=1 returns the input unchanged.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    v = check_label_vector(soft)
    if temperature == 1.0:
        return v.copy()
    powered = np.maximum(v, CLAMP_FLOOR) ** (1.0 / temperature)
    return powered / powered.sum()


def sharpen_rows(soft_matrix, temperature):
    """Row-wise `sharpen` for a matrix whose rows are already on the simplex."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    mat = np.asarray(soft_matrix, dtype=np.float64)
    if temperature == 1.0:
        return mat.copy()
    powered = np.maximum(mat, CLAMP_FLOOR) ** (1.0 / temperature)
    return powered / powered.sum(axis=1, keepdims=True)


def interpolate(pseudo, soft_sharpened, w):
    """Convex combination w * pseudo + (1 - w) * soft_sharpened."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"interpolation weight must lie in [0, 1], got {w}")
    p = check_label_vector(pseudo)
    s = check_label_vector(soft_sharpened)
    if p.shape != s.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {s.shape}")
    return w * p + (1.0 - w) * s
