"""Compactly supported initial-data profiles"""

from typing import Callable, Dict

import numpy as np


def smooth_bump(r: np.ndarray, R: float) -> np.ndarray:
    """exp(1 - 1/(1 - (r/R)^2)) inside |r| < R, zero outside (C-infinity, peak 1 at r = 0)."""
    s = np.abs(np.asarray(r, dtype=float)) / R
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def cosine_bump(r: np.ndarray, R: float) -> np.ndarray:
    """cos^2(pi r / 2R) inside |r| < R (C^1, peak 1)."""
    s = np.abs(np.asarray(r, dtype=float)) / R
    return np.where(s < 1.0, np.cos(0.5 * np.pi * np.minimum(s, 1.0)) ** 2, 0.0)


SHAPES: Dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "bump": smooth_bump,
    "cosine": cosine_bump,
}


def radial_velocity(x: np.ndarray, R: float, shape: str = "bump") -> np.ndarray:
    """Outward profile (x/R) * shape(x); odd in x so it vanishes at the origin."""
    x = np.asarray(x, dtype=float)
    return x / R * SHAPES[shape](x, R)
