"""
Monte-Carlo link-level experiments.

One trial draws a K-user channel, runs SUS on the estimate, builds the
precoder from the selected estimated rows and scores it on the matching
true rows. The engine evaluates a whole (beta x alpha) grid per trial on
the same channel draw: every grid point sees common random numbers, the
correlation matrix is computed once per trial and each distinct selected
set is inverted once for all alphas.

Trial ``t`` always uses the stream ``RngStream(seed, t)``, so results do
not depend on how trials are split across worker processes.
"""

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import RngStream, draw_channels
from .linalg import SingularMatrixError, hermitian_eigenvalues
from .metrics import EigenProfile, model_average_sinr, physical_sinr_batch
from .precoding import Scheme, build_precoders, regularization_factor
from .selection import correlation_matrix, sus_from_correlations

__all__ = ['LinkPoint', 'TrialBlock', 'MonteCarloResult', 'SearchResult',
           'ExperimentConfig', 'SweepRow', 'SweepResult', 'CSV_HEADER',
           'DEFAULT_BETA_GRID', 'DEFAULT_ALPHA_GRID', 'run_trial', 'simulate',
           'monte_carlo', 'optimize_beta', 'optimize_alpha', 'paired_difference',
           'figure1_sweep', 'figure2_sweep', 'figure3_sweep']

log = logging.getLogger(__name__)

MAX_REDRAWS = 100
DEFAULT_BETA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 21))
DEFAULT_ALPHA_GRID = tuple(np.logspace(-4, 3, 60).tolist())
CSV_HEADER = ('sweep_name', 'sweep_value', 'scheme', 'm', 'k', 'snr_db', 'e2',
              'beta_used', 'alpha_used', 'mean_sum_rate', 'stderr',
              'mean_selected_n', 'redraws', 'trials', 'seed')


@dataclass(frozen=True)
class LinkPoint:
    """One operating point. Power is fixed at P = 1, so ``sigma2 = 10^(-snr/10)``."""
    m: int
    k: int
    snr_db: float
    e2: float
    p: float = 1.0

    def __post_init__(self):
        if not 1 <= self.m <= self.k:
            raise ValueError(f"need K >= M >= 1, got K={self.k}, M={self.m}")
        if not 0.0 <= self.e2 <= 1.0:
            raise ValueError(f"e2 must lie in [0, 1], got {self.e2}")

    @property
    def sigma2(self):
        return self.p * 10.0 ** (-self.snr_db / 10.0)

    def alpha(self, scheme):
        return regularization_factor(scheme, self.m, self.p, self.sigma2, self.e2)


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxx Single trials xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def _score_selection(real, order, point, alphas, model):
    """Physical (and optionally model) sum rates of one selection for all alphas."""
    na = len(alphas)
    if not order:
        return np.zeros(na), (np.zeros(na) if model else None)
    idx = list(order)
    h_est = real.h_est[idx]
    w, rho = build_precoders(h_est, alphas, point.p)
    sinr = physical_sinr_batch(real.h_true[idx], w, rho, point.sigma2)
    rates = np.sum(np.log2(1.0 + sinr), axis=1)
    model_rates = None
    if model:
        lam = np.maximum(hermitian_eigenvalues(h_est @ h_est.conj().T), 0.0)
        prof = EigenProfile(lam, len(idx), point.p, point.sigma2, point.e2)
        model_rates = len(idx) * np.log2(1.0 + model_average_sinr(prof, np.asarray(alphas)))
    return rates, model_rates


def _evaluate_trial(seed, trial, point, betas, alphas, model):
    stream = RngStream(seed, trial)
    for redraws in range(MAX_REDRAWS + 1):
        real = draw_channels(stream, point.k, point.m, point.e2)
        norms, corr = correlation_matrix(real.h_est)
        rates = np.empty((len(betas), len(alphas)))
        model_rates = np.empty_like(rates) if model else None
        n_sel = np.empty(len(betas))
        cache = {}
        try:
            for bi, beta in enumerate(betas):
                order = sus_from_correlations(norms, corr, beta, point.m).order
                if order not in cache:
                    cache[order] = _score_selection(real, order, point, alphas, model)
                rates[bi], mrow = cache[order]
                if model:
                    model_rates[bi] = mrow
                n_sel[bi] = len(order)
        except SingularMatrixError:
            log.debug("trial %d: singular Gram matrix, redrawing", trial)
            stream = stream.next_substream()
            continue
        return rates, model_rates, n_sel, redraws
    raise RuntimeError(f"trial {trial}: gave up after {MAX_REDRAWS} redraws")


def run_trial(stream, point, scheme, beta):
    """One trial for one scheme at a fixed beta.

    Returns
    -------
    sum_rate : float
    n_selected : int
    """
    alpha = point.alpha(scheme)
    while True:
        real = draw_channels(stream, point.k, point.m, point.e2)
        norms, corr = correlation_matrix(real.h_est)
        order = sus_from_correlations(norms, corr, beta, point.m).order
        try:
            rates, _ = _score_selection(real, order, point, [alpha], False)
        except SingularMatrixError:
            stream = stream.next_substream()
            continue
        return float(rates[0]), len(order)


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxx Batches of trials xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
@dataclass
class TrialBlock:
    """Per-trial results over a (beta x alpha) grid.

    ``rates[t, i, j]`` is the sum rate of trial t at ``betas[i]`` and
    ``alphas[j]``.
    """
    betas: tuple
    alphas: tuple
    rates: np.ndarray
    n_selected: np.ndarray
    redraws: int
    model_rates: np.ndarray = None


def _run_chunk(args):
    seed, start, stop, point, betas, alphas, model = args
    out = [_evaluate_trial(seed, t, point, betas, alphas, model) for t in range(start, stop)]
    rates = np.stack([o[0] for o in out])
    model_rates = np.stack([o[1] for o in out]) if model else None
    n_sel = np.stack([o[2] for o in out])
    return rates, model_rates, n_sel, sum(o[3] for o in out)


def simulate(point, betas, alphas, trials, seed, threads=1, model=False):
    """Run `trials` independent trials over the full (beta x alpha) grid.

    With ``threads > 1`` trials are farmed out to worker processes in
    contiguous chunks; the returned arrays are identical either way.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    betas = tuple(float(b) for b in betas)
    alphas = tuple(float(a) for a in alphas)
    if not betas or not alphas:
        raise ValueError("beta and alpha grids must be nonempty")
    n_chunks = 1 if threads <= 1 else min(trials, 4 * threads)
    bounds = np.linspace(0, trials, n_chunks + 1).astype(int)
    jobs = [(seed, int(a), int(b), point, betas, alphas, model)
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if threads <= 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    return TrialBlock(
        betas=betas, alphas=alphas,
        rates=np.concatenate([p[0] for p in parts]),
        n_selected=np.concatenate([p[2] for p in parts]),
        redraws=sum(p[3] for p in parts),
        model_rates=np.concatenate([p[1] for p in parts]) if model else None)


def _mean_stderr(samples):
    samples = np.asarray(samples, dtype=float)
    mean = float(np.mean(samples))
    if samples.size < 2:
        return mean, 0.0
    return mean, float(np.std(samples, ddof=1) / math.sqrt(samples.size))


def paired_difference(a, b):
    """Mean and standard error of ``a - b`` over paired trials."""
    return _mean_stderr(np.asarray(a) - np.asarray(b))


@dataclass
class MonteCarloResult:
    mean: float
    stderr: float
    mean_selected_n: float
    redraws: int
    samples: np.ndarray = field(repr=False)


def monte_carlo(point, scheme, trials, seed, beta=1.0, threads=1):
    """Mean sum rate and its standard error for one scheme at fixed beta."""
    if trials < 2:
        raise ValueError("need at least 2 trials for a standard error")
    block = simulate(point, [beta], [point.alpha(scheme)], trials, seed, threads)
    samples = block.rates[:, 0, 0]
    mean, stderr = _mean_stderr(samples)
    return MonteCarloResult(mean, stderr, float(block.n_selected[:, 0].mean()),
                            block.redraws, samples)


@dataclass
class SearchResult:
    """Outcome of a grid search: the winner and the mean at every grid point."""
    best: float
    mean_at_best: float
    grid: tuple
    means: np.ndarray


def _grid_argmax(grid, means, allowed=None):
    """Best grid point; ties go to the smaller grid value.

    `allowed` optionally masks out grid points that may not win.
    """
    grid = np.asarray(grid, dtype=float)
    means = np.asarray(means, dtype=float)
    allowed = np.ones(grid.size, dtype=bool) if allowed is None else np.asarray(allowed)
    if not allowed.any():
        allowed = np.ones(grid.size, dtype=bool)
    candidates = np.flatnonzero(allowed)
    candidates = candidates[np.argsort(grid[candidates], kind='stable')]
    i = candidates[int(np.argmax(means[candidates]))]
    return SearchResult(float(grid[i]), float(means[i]), tuple(grid.tolist()), means)


def _full_selection_mask(block, m):
    """Betas at which SUS filled all M streams in every trial."""
    return np.all(block.n_selected == m, axis=0)


def optimize_beta(point, scheme, trials, seed, beta_grid=DEFAULT_BETA_GRID,
                  threads=1, full_selection=True):
    """Grid search of the SUS threshold that maximizes the mean sum rate.

    With `full_selection` only thresholds at which SUS found M users in
    every trial compete, so the number of served streams stays M as in
    the broadcast model; otherwise a small threshold may win by serving
    fewer users.
    """
    block = simulate(point, beta_grid, [point.alpha(scheme)], trials, seed, threads)
    allowed = _full_selection_mask(block, point.m) if full_selection else None
    return _grid_argmax(block.betas, block.rates[:, :, 0].mean(axis=0), allowed)


def optimize_alpha(point, beta, trials, seed, alpha_grid=DEFAULT_ALPHA_GRID, threads=1):
    """Grid search of the regularizing factor at a fixed SUS threshold."""
    block = simulate(point, [beta], alpha_grid, trials, seed, threads)
    return _grid_argmax(block.alphas, block.rates[:, 0, :].mean(axis=0))


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxx Sweeps xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def _as_list(value):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


@dataclass
class ExperimentConfig:
    """Parameters of a sweep.

    `m_tx`, `k_users`, `snr_db` and `err_power` may each be a scalar or a
    list; sweeps iterate over their product. ``beta='auto'`` re-optimizes
    the SUS threshold per point and scheme over `beta_grid`; with
    `full_selection` it only considers thresholds at which SUS serves M
    users in every trial. `model` adds a ``<scheme>-model`` row per scheme
    scored with :func:`~rrzf.metrics.model_average_sinr` instead of the
    true-channel SINR.
    """
    m_tx: object = 4
    k_users: object = 20
    snr_db: object = 15.0
    err_power: object = 0.1
    beta: object = 'auto'
    schemes: tuple = (Scheme.ZF, Scheme.RZF, Scheme.RRZF, Scheme.MF)
    trials: int = 2000
    seed: int = 1
    alpha_grid: tuple = DEFAULT_ALPHA_GRID
    beta_grid: tuple = DEFAULT_BETA_GRID
    threads: int = 1
    model: bool = True
    full_selection: bool = True

    def validate(self):
        if self.trials < 2:
            raise ValueError("trials must be >= 2")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        ms = _as_list(self.m_tx)
        ks = _as_list(self.k_users)
        if any(m < 1 for m in ms):
            raise ValueError("M must be >= 1")
        if any(k < min(ms) for k in ks) or max(ks) < max(ms):
            raise ValueError("every K must be >= M (with several M, pairs with K < M are skipped)")
        if any(not 0.0 <= e <= 1.0 for e in _as_list(self.err_power)):
            raise ValueError("e2 must lie in [0, 1]")
        if self.beta != 'auto':
            if any(not 0.0 <= b <= 1.0 for b in _as_list(self.beta)):
                raise ValueError("beta must lie in [0, 1]")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        if not self.alpha_grid or not self.beta_grid:
            raise ValueError("grids must be nonempty")
        if any(a < 0 for a in self.alpha_grid) or any(not 0 <= b <= 1 for b in self.beta_grid):
            raise ValueError("grid values out of range")
        return self


@dataclass
class SweepRow:
    sweep_name: str
    sweep_value: float
    scheme: str
    m: int
    k: int
    snr_db: float
    e2: float
    beta_used: float
    alpha_used: float
    mean_sum_rate: float
    stderr: float
    mean_selected_n: float
    redraws: int
    trials: int
    seed: int
    samples: np.ndarray = field(default=None, repr=False, compare=False)


def _fmt(value):
    if isinstance(value, float):
        if math.isinf(value):
            return 'inf'
        return f"{value:.10g}"
    return str(value)


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow([_fmt(getattr(row, name)) for name in CSV_HEADER])
        return buf.getvalue()

    def select(self, **criteria):
        """Rows whose attributes equal all keyword values."""
        return [r for r in self.rows
                if all(getattr(r, key) == value for key, value in criteria.items())]

    def extend(self, other):
        self.rows.extend(other.rows)
        return self


def _scheme_rows(cfg, name, value, point):
    """Rows for every configured scheme at one point, auto-optimizing beta."""
    schemes = [Scheme(s) for s in cfg.schemes]
    alphas = [point.alpha(s) for s in schemes]
    betas = list(cfg.beta_grid) if cfg.beta == 'auto' else [float(b) for b in _as_list(cfg.beta)]
    block = simulate(point, betas, alphas, cfg.trials, cfg.seed, cfg.threads, cfg.model)
    allowed = _full_selection_mask(block, point.m) if cfg.full_selection else None
    rows = []
    for j, (scheme, alpha) in enumerate(zip(schemes, alphas)):
        best = _grid_argmax(block.betas, block.rates[:, :, j].mean(axis=0), allowed)
        bi = block.betas.index(best.best)
        variants = [(str(scheme), block.rates[:, bi, j])]
        if cfg.model:
            variants.append((f"{scheme}-model", block.model_rates[:, bi, j]))
        for label, samples in variants:
            mean, stderr = _mean_stderr(samples)
            rows.append(SweepRow(
                sweep_name=name, sweep_value=float(value), scheme=label,
                m=point.m, k=point.k, snr_db=float(point.snr_db), e2=float(point.e2),
                beta_used=best.best, alpha_used=float(alpha), mean_sum_rate=mean,
                stderr=stderr, mean_selected_n=float(block.n_selected[:, bi].mean()),
                redraws=block.redraws, trials=cfg.trials, seed=cfg.seed, samples=samples))
    return rows


def figure2_sweep(cfg):
    """Sum rate against the number of users K."""
    cfg.validate()
    result = SweepResult()
    for m in _as_list(cfg.m_tx):
        for snr in _as_list(cfg.snr_db):
            for e2 in _as_list(cfg.err_power):
                for k in _as_list(cfg.k_users):
                    if k < m:
                        continue
                    point = LinkPoint(m, k, snr, e2)
                    result.rows += _scheme_rows(cfg, 'K', k, point)
    return result


def figure3_sweep(cfg):
    """Sum rate against the SNR P / sigma2 in dB."""
    cfg.validate()
    result = SweepResult()
    for m in _as_list(cfg.m_tx):
        for k in _as_list(cfg.k_users):
            if k < m:
                continue
            for e2 in _as_list(cfg.err_power):
                for snr in _as_list(cfg.snr_db):
                    point = LinkPoint(m, k, snr, e2)
                    result.rows += _scheme_rows(cfg, 'SNR', snr, point)
    return result


def figure1_sweep(cfg):
    """Grid-optimal alpha against the SUS threshold beta.

    All betas of one (M, K, SNR, e2) point share the same trials, so the
    comparison across beta uses common random numbers.
    """
    cfg.validate()
    betas = list(cfg.beta_grid) if cfg.beta == 'auto' else [float(b) for b in _as_list(cfg.beta)]
    result = SweepResult()
    for m in _as_list(cfg.m_tx):
        for k in _as_list(cfg.k_users):
            if k < m:
                continue
            for snr in _as_list(cfg.snr_db):
                for e2 in _as_list(cfg.err_power):
                    point = LinkPoint(m, k, snr, e2)
                    block = simulate(point, betas, cfg.alpha_grid, cfg.trials,
                                     cfg.seed, cfg.threads)
                    for bi, beta in enumerate(block.betas):
                        best = _grid_argmax(block.alphas, block.rates[:, bi, :].mean(axis=0))
                        ai = block.alphas.index(best.best)
                        samples = block.rates[:, bi, ai]
                        mean, stderr = _mean_stderr(samples)
                        result.rows.append(SweepRow(
                            sweep_name='beta', sweep_value=beta, scheme='ALPHA_OPT',
                            m=m, k=k, snr_db=float(snr), e2=float(e2), beta_used=beta,
                            alpha_used=best.best, mean_sum_rate=mean, stderr=stderr,
                            mean_selected_n=float(block.n_selected[:, bi].mean()),
                            redraws=block.redraws, trials=cfg.trials, seed=cfg.seed,
                            samples=samples))
    return result
