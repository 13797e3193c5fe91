"""Low-level tensor kernel shared by the simulator and the dense-unitary builder.

A register of ``n`` qubits is stored as a C-ordered tensor of shape
``(2,) * n + (batch,)``.  Qubit ``q`` lives on axis ``n - 1 - q`` so that the
flattened index is ``sum(b_q * 2**q)`` (little-endian).
"""

from __future__ import annotations

import numpy as np


def apply_matrix(psi, n, mat, targets, controls=(), polarity=()):
    """Apply ``mat`` to ``targets`` of ``psi`` in place, conditioned on controls.

    ``mat`` acts on ``len(targets)`` qubits with ``targets[0]`` as its least
    significant bit.  ``polarity[i]`` is 1 for a filled control and 0 for an open
    one.
    """
    k = len(targets)
    idx = [slice(None)] * (n + 1)
    for c, pol in zip(controls, polarity):
        idx[n - 1 - c] = int(pol)
    idx = tuple(idx)
    sub = psi[idx] if controls else psi

    removed = sorted(n - 1 - c for c in controls)
    def sub_axis(q):
        ax = n - 1 - q
        return ax - sum(1 for r in removed if r < ax)

    # most significant target first, matching the row-major reshape of mat
    axes = [sub_axis(q) for q in reversed(targets)]
    m = np.asarray(mat).reshape((2,) * (2 * k))
    out = np.tensordot(m, sub, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    if controls:
        psi[idx] = out
    else:
        psi[...] = out


def apply_diagonal(psi, n, diag, targets):
    """Multiply by a diagonal operator given as a vector over ``targets``."""
    k = len(targets)
    shape = [1] * (n + 1)
    d = np.asarray(diag).reshape((2,) * k)
    # d axes are most-significant-target first
    order = [n - 1 - q for q in reversed(targets)]
    perm = np.argsort(order)
    d = np.transpose(d, perm)
    for ax in sorted(order):
        shape[ax] = 2
    psi *= d.reshape(shape)
