"""
SINR, SNR and sum-rate quantities.

Two notions of SINR live here. :func:`physical_sinr` evaluates each
served user's SINR on the true channel for a precoder designed from the
estimate; the Monte-Carlo experiments use it. The remaining functions are
closed forms in the eigenvalues ``lambda`` of ``H_est H_est^H`` with the
CSI error folded into an effective noise ``e2 P + sigma2``: the average
SINR of a Haar-rotated channel (:func:`model_average_sinr`), the
orthogonal-channel average SNR (:func:`theorem1_avg_snr`) and the
positive term that governs its derivative in alpha
(:func:`monotonicity_term`).

Wherever a function takes `alpha` it also accepts a 1-D array of alphas
and returns an array, and ``math.inf`` stands for the matched filter.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = ['DomainError', 'SinrReport', 'EigenProfile', 'physical_sinr',
           'physical_sinr_batch', 'sum_rate', 'model_average_sinr',
           'theorem1_avg_snr', 'monotonicity_term', 'stationarity_term']


class DomainError(ValueError):
    """A closed-form expression was evaluated outside its domain."""


@dataclass(frozen=True)
class SinrReport:
    per_user_sinr: np.ndarray
    sum_rate: float


@dataclass(frozen=True)
class EigenProfile:
    """Eigenvalues of ``H_est H_est^H`` plus the link budget.

    `lambdas` must hold exactly `m` nonnegative values.
    """
    lambdas: np.ndarray
    m: int
    p: float
    sigma2: float
    err_power: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float).ravel()
        object.__setattr__(self, 'lambdas', lam)
        if lam.size != self.m:
            raise ValueError(f"expected {self.m} eigenvalues, got {lam.size}")
        if np.any(lam < 0.0) or not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite and >= 0")
        if not self.p > 0.0:
            raise ValueError(f"transmit power must be positive, got {self.p}")
        if self.sigma2 < 0.0 or not 0.0 <= self.err_power <= 1.0:
            raise ValueError("need sigma2 >= 0 and err_power in [0, 1]")

    @property
    def effective_noise(self):
        """``e2 + sigma2 / P``, the noise-to-power ratio seen by the model."""
        return self.err_power + self.sigma2 / self.p


def sum_rate(sinrs):
    """Shannon sum rate ``sum log2(1 + SINR_k)`` in bit/s/Hz."""
    sinrs = np.asarray(sinrs, dtype=float)
    if np.any(sinrs < 0.0):
        raise ValueError("SINRs must be >= 0")
    return float(np.sum(np.log2(1.0 + sinrs)))


def physical_sinr_batch(h_true_sel, w, rho, sigma2):
    """Per-user SINR for a stack of precoders on one true channel.

    Parameters
    ----------
    h_true_sel : ndarray, shape (n, M)
    w : ndarray, shape (B, M, n)
    rho : ndarray, shape (B,)
    sigma2 : float

    Returns
    -------
    ndarray, shape (B, n)
    """
    gains = np.abs(h_true_sel[None, :, :] @ w) ** 2
    gains *= (np.asarray(rho) ** 2)[:, None, None]
    n = gains.shape[-1]
    signal = np.diagonal(gains, axis1=1, axis2=2)
    off = ~np.eye(n, dtype=bool)
    interference = np.sum(np.where(off, gains, 0.0), axis=2)
    denom = interference + sigma2
    if np.any(denom <= 0.0):
        raise ValueError("zero noise and zero interference: SINR is unbounded")
    return signal / denom


def physical_sinr(h_true_sel, pre, sigma2):
    """SINR of every served user on the true channel.

    ``SINR_k = rho^2 |h_k^H w_k|^2 / (rho^2 sum_{j != k} |h_k^H w_j|^2 + sigma2)``
    """
    h = np.asarray(h_true_sel, dtype=np.complex128)
    if h.ndim != 2 or pre.w.shape != (h.shape[1], h.shape[0]):
        raise ValueError(f"channel {h.shape} does not match precoder {pre.w.shape}")
    sinr = physical_sinr_batch(h, pre.w[None], np.array([pre.rho]), sigma2)[0]
    return SinrReport(per_user_sinr=sinr, sum_rate=sum_rate(sinr))


def _alpha_grid(alpha):
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0.0) or np.any(np.isnan(a)):
        raise ValueError("alpha must be >= 0")
    return a


def _ratio_sums(lam, a, powers):
    """Sums ``sum lam^k / (lam + a)^j`` for each (k, j) in `powers`."""
    lam = lam[:, None]
    a = a.ravel()[None, :]
    return [np.sum(lam ** k / (lam + a) ** j, axis=0) for k, j in powers]


def model_average_sinr(prof, alpha):
    """Average per-user SINR of RZF in terms of the eigenvalues.

    ::

        [(S1)^2 + S2] / [c M (M + 1) T + M S2 - (S1)^2]

    with ``S1 = sum lam/(lam+a)``, ``S2 = sum lam^2/(lam+a)^2``,
    ``T = sum lam/(lam+a)^2`` and ``c = e2 + sigma2 / P``. At
    ``alpha = inf`` every term is scaled by alpha^2 and the limit is
    returned.

    Raises
    ------
    DomainError
        If the denominator is not positive.
    """
    a = _alpha_grid(alpha)
    lam = prof.lambdas
    m = prof.m
    c = prof.effective_noise
    if np.any(a == 0.0) and np.any(lam == 0.0):
        raise DomainError("alpha = 0 needs all eigenvalues > 0")
    flat = a.ravel()
    inf = np.isinf(flat)
    fin = np.where(inf, 0.0, flat)
    s1, s2, t = _ratio_sums(lam, fin, [(1, 1), (2, 2), (1, 2)])
    if inf.any():
        s1[inf] = lam.sum()
        s2[inf] = np.sum(lam ** 2)
        t[inf] = lam.sum()
    num = s1 ** 2 + s2
    den = c * m * (m + 1) * t + m * s2 - s1 ** 2
    if np.any(den <= 0.0):
        raise DomainError(f"nonpositive denominator for eigenvalues {lam.tolist()}")
    out = (num / den).reshape(a.shape)
    return float(out) if out.ndim == 0 else out


def theorem1_avg_snr(prof, alpha):
    """Average SNR of RZF on mutually orthogonal channels.

    ::

        P / (M (e2 P + sigma2)) * sum lam^2/(lam+a)^2 / sum lam/(lam+a)^2

    At ``alpha = inf`` the ratio tends to ``sum lam^2 / sum lam`` (MF).
    """
    a = _alpha_grid(alpha)
    lam = prof.lambdas
    if not np.all(lam > 0.0):
        raise DomainError("orthogonal-channel SNR needs all eigenvalues > 0")
    flat = a.ravel()
    inf = np.isinf(flat)
    num, den = _ratio_sums(lam, np.where(inf, 0.0, flat), [(2, 2), (1, 2)])
    ratio = num / den
    if inf.any():
        ratio[inf] = np.sum(lam ** 2) / lam.sum()
    scale = prof.p / (prof.m * (prof.err_power * prof.p + prof.sigma2))
    out = (scale * ratio).reshape(a.shape)
    return float(out) if out.ndim == 0 else out


def monotonicity_term(lambdas, alpha):
    """``sum_{i>j} lam_i lam_j (lam_i - lam_j)^2 / ((lam_i+a)^3 (lam_j+a)^3)``.

    Half the alpha-derivative of the SNR ratio in :func:`theorem1_avg_snr`
    times ``(sum lam/(lam+a)^2)^2``; positive unless all lambdas agree.
    """
    lam = np.asarray(lambdas, dtype=float).ravel()
    if np.any(lam <= 0.0):
        raise ValueError("eigenvalues must be > 0")
    a = float(alpha)
    x = lam / (lam + a) ** 3
    diff = (lam[:, None] - lam[None, :]) ** 2
    pair = np.outer(x, x) * diff
    return float(np.sum(np.tril(pair, -1)))


def stationarity_term(lambdas, alpha, m, c):
    """``sum_{k<l} lam_k lam_l (lam_k-lam_l)^2 (M c - alpha) / ((lam_k+a)^3 (lam_l+a)^3)``.

    The stationarity condition whose root is ``alpha = M c``. It is the
    alpha-derivative numerator of the large-system SINR
    ``(S1)^2 / (M S2 - (S1)^2 + c M^2 T)``, not of
    :func:`model_average_sinr`.
    """
    return (m * c - float(alpha)) * monotonicity_term(lambdas, alpha)
