"""Finite-volume building blocks: slope limiters, MUSCL face reconstruction,
Rusanov (local Lax-Friedrichs) fluxes and SSP Runge-Kutta stages."""

from typing import Callable, Dict, Tuple

import numpy as np


def minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def monotonized_central(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = 0.5 * (a + b)
    limited = np.sign(c) * np.minimum(np.abs(c), 2.0 * np.minimum(np.abs(a), np.abs(b)))
    return np.where(a * b > 0.0, limited, 0.0)


def superbee(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    s1 = minmod(2.0 * a, b)
    s2 = minmod(a, 2.0 * b)
    return np.where(np.abs(s1) >= np.abs(s2), s1, s2)


LIMITERS: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "minmod": minmod,
    "mc": monotonized_central,
    "superbee": superbee,
}


def reconstruct(qp: np.ndarray, n_ghost: int, limiter: str = "minmod") -> Tuple[np.ndarray, np.ndarray]:
    """Left/right states at the n+1 faces bounding the interior cells.

    qp has shape (nvar, n + 2*n_ghost); face f lies between padded cells
    n_ghost-1+f and n_ghost+f.
    """
    limit = LIMITERS[limiter]
    delta = np.diff(qp, axis=1)
    slopes = np.zeros_like(qp)
    slopes[:, 1:-1] = limit(delta[:, :-1], delta[:, 1:])
    n = qp.shape[1] - 2 * n_ghost
    left_cells = slice(n_ghost - 1, n_ghost + n)
    right_cells = slice(n_ghost, n_ghost + n + 1)
    q_left = qp[:, left_cells] + 0.5 * slopes[:, left_cells]
    q_right = qp[:, right_cells] - 0.5 * slopes[:, right_cells]
    return q_left, q_right


def rusanov(f_left: np.ndarray, f_right: np.ndarray, q_left: np.ndarray, q_right: np.ndarray,
            speed: np.ndarray) -> np.ndarray:
    return 0.5 * (f_left + f_right) - 0.5 * speed * (q_right - q_left)


def ssp_rk2(u: np.ndarray, dt: float, rhs: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    u1 = u + dt * rhs(u)
    return 0.5 * u + 0.5 * (u1 + dt * rhs(u1))


def ssp_rk3(u: np.ndarray, dt: float, rhs: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    u1 = u + dt * rhs(u)
    u2 = 0.75 * u + 0.25 * (u1 + dt * rhs(u1))
    return u / 3.0 + 2.0 / 3.0 * (u2 + dt * rhs(u2))


INTEGRATORS = {"ssp2": ssp_rk2, "ssp3": ssp_rk3}


def cell_gradient(q: np.ndarray, dx: float) -> np.ndarray:
    """Largest one-sided difference quotient per interior cell."""
    d = np.abs(np.diff(q)) / dx
    if d.size == 0:
        return np.zeros_like(q)
    g = np.empty_like(q)
    g[0] = d[0]
    g[-1] = d[-1]
    g[1:-1] = np.maximum(d[:-1], d[1:])
    return g
