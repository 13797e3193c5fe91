"""Uniform position grid for first-quantised one-dimensional problems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """``2**n_qubits`` points x_j = j*dx on [0, L), dx = L/N."""

    n_qubits: int
    length: float = 14.0
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("grid needs at least one qubit")
        if self.length <= 0 or self.mass <= 0 or self.omega < 0:
            raise ValueError("length and mass must be positive, omega non-negative")

    @property
    def n_points(self) -> int:
        return 2 ** self.n_qubits

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dx

    @property
    def k(self) -> np.ndarray:
        """Centred momenta for CQFT index j: k = 2*pi*(j - N/2)/L."""
        n = self.n_points
        return 2 * np.pi * (np.arange(n) - n // 2) / self.length

    def potential(self) -> np.ndarray:
        return 0.5 * self.mass * self.omega ** 2 * (self.x - self.length / 2) ** 2

    def potential_coeffs(self) -> list:
        """V(x) = c0 + c1 x + c2 x^2 for the harmonic well centred at L/2."""
        a = 0.5 * self.mass * self.omega ** 2
        c = self.length / 2
        return [a * c * c, -2 * a * c, a]
