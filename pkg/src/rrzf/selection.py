"""
Simplified semiorthogonal user selection (SUS).

The first pick is the user with the largest estimated channel norm. Each
later pick is the largest-norm user among those whose normalized
correlation with every previous pick is strictly below ``beta``. The
search stops once M users are chosen or the pool empties.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ['SelectionParams', 'SelectionResult', 'correlation',
           'correlation_matrix', 'sus_select', 'sus_from_correlations']


@dataclass(frozen=True)
class SelectionParams:
    beta: float
    m_target: int

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.m_target < 1:
            raise ValueError(f"m_target must be >= 1, got {self.m_target}")


@dataclass(frozen=True)
class SelectionResult:
    """Selected user indices in pick order.

    `pool_exhausted` is set when fewer than `m_target` users could be
    found.
    """
    order: tuple
    pool_exhausted: bool

    @property
    def n(self):
        return len(self.order)


def correlation(a, b):
    """Normalized correlation ``|a^H b| / (||a|| ||b||)`` in [0, 1]."""
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-norm vector has no direction")
    return min(abs(np.vdot(a, b)) / (na * nb), 1.0)


def correlation_matrix(h):
    """Row norms and pairwise normalized correlations of the rows of `h`.

    Zero-norm rows get correlation 1 against everything so that no
    threshold below 1 admits them; :func:`sus_from_correlations` also
    drops them from the initial pool.
    """
    h = np.asarray(h, dtype=np.complex128)
    norms = np.linalg.norm(h, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    u = h / safe[:, None]
    corr = np.minimum(np.abs(u.conj() @ u.T), 1.0)
    dead = norms == 0.0
    corr[dead, :] = 1.0
    corr[:, dead] = 1.0
    return norms, corr


def sus_from_correlations(norms, corr, beta, m_target):
    """SUS given precomputed norms and correlations.

    Lets a caller reuse one correlation matrix across a grid of `beta`.
    """
    pool = norms > 0.0
    order = []
    while len(order) < m_target and pool.any():
        pick = int(np.argmax(np.where(pool, norms, -1.0)))
        order.append(pick)
        pool[pick] = False
        pool &= corr[pick] < beta
    return SelectionResult(order=tuple(order), pool_exhausted=len(order) < m_target)


def sus_select(h_est, params):
    """Run SUS on the estimated channels (rows are users)."""
    norms, corr = correlation_matrix(h_est)
    return sus_from_correlations(norms, corr, params.beta, params.m_target)
