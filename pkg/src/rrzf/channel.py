"""
Seeded Rayleigh broadcast channels with the imperfect-CSI error model.

Every Monte-Carlo trial owns an :class:`RngStream` identified by
``(seed, stream_id, substream)``. The stream wraps a counter-based Philox
generator keyed through :class:`numpy.random.SeedSequence`, so the draws
of a trial depend only on those three integers and never on which worker
process or in which order trials are executed.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = ['RngStream', 'ChannelRealization', 'std_complex_gaussian',
           'draw_channels']


@dataclass
class RngStream:
    """A reproducible random stream for one trial.

    A stream is single-consumer: successive draws advance it. Two
    streams constructed with the same identifiers produce identical
    sequences.
    """
    seed: int
    stream_id: int = 0
    substream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ('seed', 'stream_id', 'substream'):
            value = getattr(self, name)
            if not 0 <= value < 2 ** 64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, self.substream))
        self._gen = np.random.Generator(np.random.Philox(ss))

    def uniform(self, size):
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def next_substream(self):
        """Fresh stream for a redrawn trial (same seed and stream id)."""
        return RngStream(self.seed, self.stream_id, self.substream + 1)


@dataclass(frozen=True)
class ChannelRealization:
    """True and estimated channels of all K users.

    Rows are the users' channel vectors h_k^H, so both matrices are K x M.
    """
    h_true: np.ndarray
    h_est: np.ndarray
    err_power: float


def std_complex_gaussian(rng, rows, cols):
    """Draw a rows x cols matrix of i.i.d. CN(0, 1) entries.

    Box-Muller on the stream's uniforms: with u1 in (0, 1] and u2 in
    [0, 1), ``sqrt(-ln u1) * exp(2j*pi*u2)`` has independent N(0, 1/2)
    real and imaginary parts.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    u = rng.uniform((2, rows, cols))
    radius = np.sqrt(-np.log1p(-u[0]))
    return radius * np.exp(2j * np.pi * u[1])


def draw_channels(rng, k, m, err_power):
    """Draw one K x M channel realization with CSI error power `err_power`.

    The estimate is ``sqrt(1 - e2) * G1`` and the true channel adds
    ``e * G2`` with G1, G2 independent CN(0, 1) matrices, so the true
    channel keeps unit per-entry variance.
    """
    if not 1 <= m <= k:
        raise ValueError(f"need K >= M >= 1, got K={k}, M={m}")
    if not 0.0 <= err_power <= 1.0:
        raise ValueError(f"err_power must lie in [0, 1], got {err_power}")
    g1 = std_complex_gaussian(rng, k, m)
    g2 = std_complex_gaussian(rng, k, m)
    h_est = np.sqrt(1.0 - err_power) * g1
    if err_power == 0.0:
        h_true = h_est.copy()
    else:
        h_true = h_est + np.sqrt(err_power) * g2
    return ChannelRealization(h_true=h_true, h_est=h_est, err_power=float(err_power))
