"""Small dense linear-algebra helpers."""

from __future__ import annotations

import math

import numpy as np

from .circuit import rotation


def zyz_angles(u: np.ndarray):
    """Return ``(theta, phi, lam, alpha)`` with u = e^{i alpha} Rz(phi) Ry(theta) Rz(lam)."""
    u = np.asarray(u, dtype=complex)
    alpha = np.angle(np.linalg.det(u)) / 2
    v = u * np.exp(-1j * alpha)
    theta = 2 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    plus = 2 * np.angle(v[1, 1])
    minus = 2 * np.angle(v[1, 0])
    phi, lam = (plus + minus) / 2, (plus - minus) / 2
    # the SU(2) square root is fixed only up to sign; absorb it into alpha
    if np.abs(zyz_matrix(theta, phi, lam, alpha) - u).max() > 1e-9:
        alpha += math.pi
    return float(theta), float(phi), float(lam), float(alpha)


def zyz_matrix(theta, phi, lam, alpha=0.0) -> np.ndarray:
    return np.exp(1j * alpha) * rotation("rz", phi) @ rotation("ry", theta) @ rotation("rz", lam)


def global_phase_of(u: np.ndarray, atol: float = 1e-9):
    """Return phase ``a`` if ``u`` equals ``e^{ia} I`` within ``atol``, else None."""
    d = u.shape[0]
    a = np.angle(np.trace(u) / d)
    if np.abs(u - np.exp(1j * a) * np.eye(d)).max() < atol:
        return float(a)
    return None


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) < atol:
        return np.abs(a).max() < atol
    ph = a[k] / b[k]
    ph /= abs(ph)
    return bool(np.abs(a - ph * b).max() < atol)


def herm_fn(h: np.ndarray, fn) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its eigenbasis."""
    w, v = np.linalg.eigh(h)
    return (v * fn(w)) @ v.conj().T


def unitarity_error(u: np.ndarray) -> float:
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())
