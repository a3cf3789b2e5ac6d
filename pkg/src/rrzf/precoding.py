"""
Linear transmit beamformers: ZF, RZF, robust RZF and matched filter.

All four are members of one family ``W = H^H (H H^H + alpha I)^-1``
built from the estimated channel rows of the selected users; the MF
corresponds to ``alpha = inf`` and is built directly as ``W = H^H``. The
power-control scalar ``rho = sqrt(P / tr(W^H W))`` makes the transmit
power exactly P.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .linalg import inverse

__all__ = ['Scheme', 'CustomAlpha', 'Precoder', 'parse_kind',
           'regularization_factor', 'build_precoder', 'build_precoders']

MF_ALPHA = math.inf


class Scheme(str, enum.Enum):
    ZF = 'ZF'
    RZF = 'RZF'
    RRZF = 'RRZF'
    MF = 'MF'

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CustomAlpha:
    """RZF with a caller-chosen regularizing factor."""
    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")

    def __str__(self):
        return f"ALPHA={self.alpha:g}"


def parse_kind(text):
    """Parse ``'ZF'``, ``'rrzf'``, ... or a bare number into a precoder kind."""
    try:
        return Scheme(text.strip().upper())
    except ValueError:
        return CustomAlpha(float(text))


def regularization_factor(kind, m_tx, p, sigma2, err_power=0.0):
    """Regularizing factor alpha for a precoder kind.

    ZF uses 0, RZF ``M sigma2 / P``, RRZF ``M (sigma2 / P + e2)`` and MF
    ``math.inf``. `m_tx` is the number of transmit antennas, also when
    fewer users end up selected.
    """
    if not p > 0.0:
        raise ValueError(f"transmit power must be positive, got {p}")
    if sigma2 < 0.0:
        raise ValueError(f"noise power must be >= 0, got {sigma2}")
    if not 0.0 <= err_power <= 1.0:
        raise ValueError(f"err_power must lie in [0, 1], got {err_power}")
    if m_tx < 1:
        raise ValueError(f"m_tx must be >= 1, got {m_tx}")
    if isinstance(kind, CustomAlpha):
        return kind.alpha
    kind = Scheme(kind)
    if kind is Scheme.ZF:
        return 0.0
    if kind is Scheme.RZF:
        return m_tx * sigma2 / p
    if kind is Scheme.RRZF:
        return m_tx * (sigma2 / p + err_power)
    return MF_ALPHA


@dataclass(frozen=True)
class Precoder:
    """Beamforming matrix `w` (M x n) with power scaling `rho`."""
    w: np.ndarray
    rho: float
    alpha_used: float


def build_precoders(h_est_sel, alphas, p):
    """Precoders for one channel and a whole vector of alphas.

    Parameters
    ----------
    h_est_sel : ndarray, shape (n, M)
        Estimated channel rows of the selected users.
    alphas : sequence of float
        Regularizing factors; ``inf`` entries give the matched filter.
    p : float
        Total transmit power.

    Returns
    -------
    w : ndarray, shape (len(alphas), M, n)
    rho : ndarray, shape (len(alphas),)

    Raises
    ------
    SingularMatrixError
        If a finite alpha leaves the regularized Gram matrix singular
        (in practice only alpha = 0).
    """
    h = np.asarray(h_est_sel, dtype=np.complex128)
    if h.ndim != 2 or not 1 <= h.shape[0] <= h.shape[1]:
        raise ValueError(f"need an n x M channel with 1 <= n <= M, got {h.shape}")
    if not p > 0.0:
        raise ValueError(f"transmit power must be positive, got {p}")
    alphas = np.asarray(alphas, dtype=float).ravel()
    if np.any(alphas < 0.0) or np.any(np.isnan(alphas)):
        raise ValueError("alphas must be >= 0")
    n, m = h.shape
    hh = h.conj().T
    w = np.empty((alphas.size, m, n), dtype=np.complex128)
    finite = np.isfinite(alphas)
    if finite.any():
        gram = h @ hh
        reg = gram[None, :, :] + alphas[finite, None, None] * np.eye(n)
        w[finite] = hh[None, :, :] @ inverse(reg)
    w[~finite] = hh
    power = np.sum(np.abs(w) ** 2, axis=(1, 2))
    rho = np.sqrt(p / power)
    return w, rho


def build_precoder(h_est_sel, alpha, p):
    """Single precoder ``W = H^H (H H^H + alpha I)^-1`` (``H^H`` for inf)."""
    w, rho = build_precoders(h_est_sel, [alpha], p)
    return Precoder(w=w[0], rho=float(rho[0]), alpha_used=float(alpha))
