"""
Property and oracle checks behind the ``verify`` command.

Each check draws its own random instances from a fixed seed, compares the
library against an independent route (closed-form ordering, central
finite differences, a literal SUS transcription, LAPACK-free residuals)
and returns a :class:`CheckResult`.
"""

import math
import time
from dataclasses import dataclass

import mpmath
import numpy as np

from .linalg import determinant, hermitian_eigenvalues, inverse, trace_real
from .metrics import EigenProfile, model_average_sinr, monotonicity_term, theorem1_avg_snr
from .precoding import MF_ALPHA, build_precoder
from .selection import SelectionParams, sus_select

__all__ = ['CheckResult', 'literal_sus', 'check_theorem1_ordering',
           'check_monotonicity_identity', 'check_rrzf_stationarity',
           'check_zf_exactness', 'check_mf_limit', 'check_sus_oracle',
           'check_linalg_invariants', 'run_all']


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        status = 'PASS' if self.passed else 'FAIL'
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.2f} s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def _link(snr_db):
    return 1.0, 10.0 ** (-snr_db / 10.0)


@_timed
def check_theorem1_ordering(n_profiles=1000, e2=0.1, snr_db=15.0, seed=11):
    """SNR(0) < SNR(M s2/P) < SNR(M (s2/P + e2)) < SNR(inf) on orthogonal channels."""
    rng = np.random.default_rng(seed)
    p, sigma2 = _link(snr_db)
    violations = 0
    for _ in range(n_profiles):
        m = int(rng.integers(2, 7))
        prof = EigenProfile(rng.exponential(size=m), m, p, sigma2, e2)
        alphas = [0.0, m * sigma2 / p, m * (sigma2 / p + e2), MF_ALPHA]
        snr = theorem1_avg_snr(prof, np.array(alphas))
        if not np.all(np.diff(snr) > 0.0):
            violations += 1
    return CheckResult('theorem1-ordering', violations == 0,
                       f"{violations} violations over {n_profiles} profiles")


def _snr_ratio(lam, alpha):
    num = mpmath.fsum(x ** 2 / (x + alpha) ** 2 for x in lam)
    return num / mpmath.fsum(x / (x + alpha) ** 2 for x in lam)


@_timed
def check_monotonicity_identity(n_cases=500, rtol=1e-6, step=1e-6, seed=12):
    """Pairwise positive term equals the finite-difference derivative identity."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    nonpositive = 0
    for _ in range(n_cases):
        m = int(rng.integers(2, 7))
        lam = rng.uniform(0.1, 10.0, size=m)
        alpha = 10.0 ** rng.uniform(-2.0, 2.0)
        term = monotonicity_term(lam, alpha)
        # Central difference in 40-digit arithmetic: no cancellation, only O(step^2) error.
        with mpmath.workdps(40):
            lam_mp = [mpmath.mpf(float(x)) for x in lam]
            a = mpmath.mpf(alpha)
            h = mpmath.mpf(step)
            fd = (_snr_ratio(lam_mp, a + h) - _snr_ratio(lam_mp, a - h)) / (2 * h)
            scale = mpmath.fsum(x / (x + a) ** 2 for x in lam_mp) ** 2
            expected = float(fd * scale / 2)
        worst = max(worst, abs(term - expected) / abs(expected))
        if not term > 0.0:
            nonpositive += 1
    ok = worst < rtol and nonpositive == 0
    return CheckResult('monotonicity-identity', ok,
                       f"worst relative error {worst:.2e} (tol {rtol:g}), "
                       f"{nonpositive} nonpositive terms over {n_cases} cases")


def _wishart_profile(rng, m, e2, p, sigma2):
    h = math.sqrt(1.0 - e2) * _cn(rng, m, m)
    lam = np.maximum(hermitian_eigenvalues(h @ h.conj().T), 0.0)
    return EigenProfile(lam, m, p, sigma2, e2)


@_timed
def check_rrzf_stationarity(n_profiles=200, ms=(2, 4), e2s=(0.0, 0.1, 0.2),
                            snrs=(5.0, 15.0, 30.0), min_pass=0.99, seed=13):
    """Grid argmax of the average-SINR model sits one grid step from M (s2/P + e2)."""
    rng = np.random.default_rng(seed)
    grid = np.logspace(-4.0, 3.0, 2000)
    step = math.log10(grid[1] / grid[0])
    passed = total = 0
    offsets = []
    for m in ms:
        for e2 in e2s:
            for snr in snrs:
                p, sigma2 = _link(snr)
                target = m * (sigma2 / p + e2)
                for _ in range(n_profiles):
                    prof = _wishart_profile(rng, m, e2, p, sigma2)
                    best = grid[int(np.argmax(model_average_sinr(prof, grid)))]
                    offset = math.log10(best / target)
                    offsets.append(offset)
                    total += 1
                    if abs(offset) <= step * (1.0 + 1e-9):
                        passed += 1
    frac = passed / total
    offsets = np.asarray(offsets)
    return CheckResult('rrzf-stationarity', frac >= min_pass,
                       f"{passed}/{total} argmaxes within one grid step ({frac:.1%}, need "
                       f"{min_pass:.0%}); median argmax/target = {10 ** np.median(offsets):.3f}")


@_timed
def check_zf_exactness(n_channels=1000, p=1.0, seed=14):
    """Perfect-CSI ZF: no inter-user leakage and exact transmit power."""
    rng = np.random.default_rng(seed)
    worst_leak = worst_power = 0.0
    for _ in range(n_channels):
        m = int(rng.integers(2, 7))
        h = _cn(rng, m, m)
        pre = build_precoder(h, 0.0, p)
        hw = h @ pre.w
        leak = np.max(np.abs(hw[~np.eye(m, dtype=bool)]))
        power = pre.rho ** 2 * trace_real(pre.w.conj().T @ pre.w)
        worst_leak = max(worst_leak, leak)
        worst_power = max(worst_power, abs(power - p) / p)
    ok = worst_leak < 1e-9 and worst_power < 1e-10
    return CheckResult('zf-exactness', ok,
                       f"max off-diagonal {worst_leak:.2e} (tol 1e-9), "
                       f"max power error {worst_power:.2e} (tol 1e-10)")


@_timed
def check_mf_limit(n_channels=200, alpha=1e8, p=1.0, seed=15):
    """rho(alpha) W(alpha) approaches the matched filter as alpha grows."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_channels):
        m = int(rng.integers(2, 7))
        h = _cn(rng, m, m)
        big = build_precoder(h, alpha, p)
        mf = build_precoder(h, MF_ALPHA, p)
        ref = mf.rho * mf.w
        worst = max(worst, np.linalg.norm(big.rho * big.w - ref) / np.linalg.norm(ref))
    return CheckResult('mf-limit', worst < 1e-4,
                       f"max relative Frobenius gap {worst:.2e} (tol 1e-4)")


def literal_sus(h, beta, m_target):
    """Greedy SUS written out with plain Python loops.

    Kept independent of :mod:`rrzf.selection` as an oracle.
    """
    rows = [list(map(complex, row)) for row in np.asarray(h)]

    def norm(v):
        return math.sqrt(sum(abs(x) ** 2 for x in v))

    def corr(u, v):
        inner = sum(x.conjugate() * y for x, y in zip(u, v))
        return abs(inner) / (norm(u) * norm(v))

    pool = [k for k in range(len(rows)) if norm(rows[k]) > 0.0]
    chosen = []
    while pool:
        best = pool[0]
        for k in pool[1:]:
            if norm(rows[k]) > norm(rows[best]):
                best = k
        chosen.append(best)
        if len(chosen) == m_target:
            break
        pool = [k for k in pool if k != best and corr(rows[best], rows[k]) < beta]
    return chosen


@_timed
def check_sus_oracle(n_instances=10_000, seed=16):
    """Vectorized SUS agrees with the literal transcription."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(n_instances):
        m = int(rng.integers(1, 5))
        k = int(rng.integers(m, 9))
        beta = float(rng.uniform())
        h = _cn(rng, k, m)
        got = sus_select(h, SelectionParams(beta, m)).order
        if list(got) != literal_sus(h, beta, m):
            mismatches += 1
    return CheckResult('sus-oracle', mismatches == 0,
                       f"{mismatches} mismatches over {n_instances} instances")


@_timed
def check_linalg_invariants(n_cases=200, seed=17):
    """Inversion residual, eigenvalue trace/determinant identities, PSD Gram."""
    rng = np.random.default_rng(seed)
    worst_resid = worst_trace = worst_det = 0.0
    min_eig = math.inf
    for _ in range(n_cases):
        m = int(rng.integers(2, 9))
        a = _cn(rng, m, m)
        if np.linalg.cond(a) < 1e6:
            worst_resid = max(worst_resid, np.linalg.norm(a @ inverse(a) - np.eye(m)))
        g = a @ a.conj().T
        herm = 0.5 * (_cn(rng, m, m) + _cn(rng, m, m).conj().T)
        herm = 0.5 * (herm + herm.conj().T)
        lam = hermitian_eigenvalues(herm)
        tr = trace_real(herm)
        worst_trace = max(worst_trace, abs(lam.sum() - tr) / max(abs(tr), np.abs(lam).sum()))
        det = determinant(herm).real
        worst_det = max(worst_det, abs(np.prod(lam) - det) / abs(det))
        min_eig = min(min_eig, hermitian_eigenvalues(g).min())
    ok = worst_resid < 1e-10 and worst_trace < 1e-8 and worst_det < 1e-8 and min_eig >= -1e-10
    return CheckResult('linalg-invariants', ok,
                       f"residual {worst_resid:.1e}, trace {worst_trace:.1e}, "
                       f"det {worst_det:.1e}, min Gram eigenvalue {min_eig:.1e}")


def run_all():
    """Run every check at its default size."""
    return [
        check_linalg_invariants(),
        check_theorem1_ordering(),
        check_monotonicity_identity(),
        check_rrzf_stationarity(),
        check_zf_exactness(),
        check_mf_limit(),
        check_sus_oracle(),
    ]
