"""Tilted product initial states.

A tilted state is the global y-rotation U_theta applied to a basis product
state; theta controls how strongly the initial state breaks the U(1)
symmetry. States are complex unit vectors over the 2**L computational basis
(site 0 = most significant bit).
"""

from __future__ import annotations

import numpy as np


def _product_state(site_vectors) -> np.ndarray:
    psi = np.array([1.0], dtype=complex)
    for v in site_vectors:
        psi = np.kron(psi, v)
    return psi


def _check_theta(theta: float):
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")


def tilted_ferromagnet(L: int, theta: float) -> np.ndarray:
    """U_theta |00...0>: every site in (cos(theta/2), sin(theta/2))."""
    if L < 1:
        raise ValueError("L must be >= 1")
    _check_theta(theta)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return _product_state([np.array([c, s], dtype=complex)] * L)


def tilted_neel(L: int, theta: float) -> np.ndarray:
    """U_theta |0101...01>: alternating rotated up/down sites.

    Rejects odd L (the Neel pattern needs an even chain).
    """
    if L < 1 or L % 2 != 0:
        raise ValueError(f"tilted_neel requires even L >= 2, got {L}")
    _check_theta(theta)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    up = np.array([c, s], dtype=complex)       # U_theta |0>
    down = np.array([-s, c], dtype=complex)    # U_theta |1>
    return _product_state([up, down] * (L // 2))
