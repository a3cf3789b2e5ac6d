import math

import numpy as np
import pytest

from rrzf import experiments
from rrzf.channel import RngStream, draw_channels
from rrzf.experiments import (CSV_HEADER, ExperimentConfig, LinkPoint, SweepResult, SweepRow,
                              figure1_sweep, figure2_sweep, monte_carlo, optimize_alpha,
                              optimize_beta, paired_difference, run_trial, simulate)
from rrzf.linalg import SingularMatrixError
from rrzf.precoding import Scheme


def test_link_point():
    p = LinkPoint(4, 8, 15.0, 0.1)
    assert p.sigma2 == pytest.approx(10 ** -1.5)
    assert p.alpha(Scheme.RRZF) == pytest.approx(0.5264911, abs=1e-7)
    with pytest.raises(ValueError):
        LinkPoint(4, 3, 15.0, 0.1)
    with pytest.raises(ValueError):
        LinkPoint(2, 3, 15.0, -0.1)


def test_zf_trial_reduces_to_closed_form():
    point = LinkPoint(3, 3, 10.0, 0.0)
    for t in range(20):
        rate, n = run_trial(RngStream(5, t), point, Scheme.ZF, 1.0)
        h = draw_channels(RngStream(5, t), 3, 3, 0.0).h_true
        rho2 = 1.0 / np.trace(np.linalg.inv(h @ h.conj().T)).real
        assert n == 3
        assert rate == pytest.approx(3 * math.log2(1 + rho2 / point.sigma2), rel=1e-9)


def test_single_user_mf_trial():
    point = LinkPoint(1, 1, 5.0, 0.0)
    rate, n = run_trial(RngStream(8, 0), point, Scheme.MF, 1.0)
    h = draw_channels(RngStream(8, 0), 1, 1, 0.0).h_true
    assert n == 1
    assert rate == pytest.approx(math.log2(1 + abs(h[0, 0]) ** 2 / point.sigma2))


def test_run_trial_matches_simulate():
    point = LinkPoint(2, 5, 15.0, 0.1)
    block = simulate(point, [0.7], [point.alpha('RZF')], 5, seed=3)
    for t in range(5):
        rate, n = run_trial(RngStream(3, t), point, Scheme.RZF, 0.7)
        assert rate == pytest.approx(block.rates[t, 0, 0], rel=1e-12)
        assert n == block.n_selected[t, 0]


def test_monte_carlo_deterministic():
    point = LinkPoint(2, 4, 15.0, 0.1)
    a = monte_carlo(point, Scheme.RRZF, 50, seed=11)
    b = monte_carlo(point, Scheme.RRZF, 50, seed=11)
    c = monte_carlo(point, Scheme.RRZF, 50, seed=12)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert a.mean == b.mean and a.mean != c.mean
    with pytest.raises(ValueError):
        monte_carlo(point, Scheme.ZF, 1, seed=1)


def test_standard_error_scales_with_trials():
    point = LinkPoint(1, 1, 10.0, 0.0)
    small = monte_carlo(point, Scheme.ZF, 100, seed=21)
    large = monte_carlo(point, Scheme.ZF, 10_000, seed=21)
    assert 8.0 <= small.stderr / large.stderr <= 12.0


def test_rrzf_not_worse_than_zf_square():
    point = LinkPoint(4, 4, 15.0, 0.1)
    block = simulate(point, [1.0], [point.alpha('ZF'), point.alpha('RRZF')], 1000, seed=2)
    mean, se = paired_difference(block.rates[:, 0, 1], block.rates[:, 0, 0])
    assert mean >= -2 * se
    assert block.redraws == 0


def test_simulate_independent_of_worker_count():
    point = LinkPoint(2, 6, 15.0, 0.1)
    args = (point, [0.3, 0.8], [0.0, 0.1, math.inf], 23)
    one = simulate(*args, seed=4, threads=1, model=True)
    three = simulate(*args, seed=4, threads=3, model=True)
    np.testing.assert_array_equal(one.rates, three.rates)
    np.testing.assert_array_equal(one.model_rates, three.model_rates)
    np.testing.assert_array_equal(one.n_selected, three.n_selected)


def test_singular_draw_is_redrawn(monkeypatch):
    real_build = experiments.build_precoders
    calls = {'n': 0}

    def flaky(h, alphas, p):
        calls['n'] += 1
        if calls['n'] == 1:
            raise SingularMatrixError("forced")
        return real_build(h, alphas, p)

    monkeypatch.setattr(experiments, 'build_precoders', flaky)
    point = LinkPoint(2, 3, 15.0, 0.0)
    block = simulate(point, [1.0], [0.0], 1, seed=9)
    assert block.redraws == 1
    monkeypatch.setattr(experiments, 'build_precoders', real_build)
    rate, _ = run_trial(RngStream(9, 0, 1), point, Scheme.ZF, 1.0)
    assert block.rates[0, 0, 0] == pytest.approx(rate, rel=1e-12)


def test_fully_unknown_channel_serves_nobody():
    block = simulate(LinkPoint(2, 4, 10.0, 1.0), [1.0], [0.0], 3, seed=1)
    assert np.all(block.rates == 0) and np.all(block.n_selected == 0)


def test_optimize_beta_single_point_grid():
    res = optimize_beta(LinkPoint(2, 6, 15.0, 0.1), Scheme.RZF, 20, seed=1, beta_grid=[0.4])
    assert res.best == 0.4


def test_optimize_beta_square_system_keeps_everyone():
    res = optimize_beta(LinkPoint(4, 4, 15.0, 0.1), Scheme.RRZF, 2000, seed=1)
    assert res.best == 1.0


def test_optimize_beta_many_users_prefers_small_threshold():
    res = optimize_beta(LinkPoint(2, 100, 15.0, 0.1), Scheme.RRZF, 500, seed=1)
    assert res.best < 0.6


def test_optimize_alpha_single_point_grid():
    res = optimize_alpha(LinkPoint(2, 4, 15.0, 0.1), 1.0, 20, seed=1, alpha_grid=[0.7])
    assert res.best == 0.7


def test_optimize_alpha_square_system_near_rzf():
    point = LinkPoint(4, 4, 15.0, 0.0)
    res = optimize_alpha(point, 1.0, 4000, seed=1)
    step = math.log10(res.grid[1] / res.grid[0])
    assert abs(math.log10(res.best / point.alpha('RZF'))) <= step


def test_grid_argmax_ties_to_smaller_value():
    res = experiments._grid_argmax([0.5, 0.1, 0.3], [1.0, 2.0, 2.0])
    assert res.best == 0.1
    masked = experiments._grid_argmax([0.1, 0.3, 0.5], [3.0, 2.0, 1.0], [False, True, True])
    assert masked.best == 0.3


def test_config_validation():
    ExperimentConfig().validate()
    ExperimentConfig(m_tx=[2, 4], k_users=[2, 8]).validate()
    for bad in (dict(trials=1), dict(k_users=2, m_tx=4), dict(err_power=1.5),
                dict(beta=1.2), dict(schemes=()), dict(seed=-1), dict(alpha_grid=())):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad).validate()


def test_csv_header_and_format():
    assert ','.join(CSV_HEADER) == ('sweep_name,sweep_value,scheme,m,k,snr_db,e2,beta_used,'
                                    'alpha_used,mean_sum_rate,stderr,mean_selected_n,'
                                    'redraws,trials,seed')
    row = SweepRow('K', 4.0, 'MF', 2, 4, 15.0, 0.1, 1.0, math.inf, 1.25, 0.5, 2.0, 0, 10, 1)
    text = SweepResult([row]).to_csv().splitlines()
    assert text[0] == ','.join(CSV_HEADER)
    assert text[1] == 'K,4,MF,2,4,15,0.1,1,inf,1.25,0.5,2,0,10,1'


def test_figure2_sweep_rows():
    cfg = ExperimentConfig(m_tx=[2, 3], k_users=[2, 5], snr_db=10.0, err_power=0.1,
                           schemes=(Scheme.ZF, Scheme.RRZF), trials=10,
                           beta_grid=(0.5, 1.0))
    res = figure2_sweep(cfg)
    # (M, K) = (3, 2) is skipped; two schemes with model rows each.
    assert len(res.rows) == 3 * 4
    assert {r.scheme for r in res.rows} == {'ZF', 'ZF-model', 'RRZF', 'RRZF-model'}
    assert all(r.beta_used in (0.5, 1.0) for r in res.rows)


def test_figure1_sweep_rows():
    cfg = ExperimentConfig(m_tx=2, k_users=10, snr_db=20.0, err_power=0.1, beta=[0.2, 0.6],
                           trials=10, alpha_grid=(0.01, 0.1, 1.0))
    res = figure1_sweep(cfg)
    assert [r.sweep_value for r in res.rows] == [0.2, 0.6]
    assert all(r.scheme == 'ALPHA_OPT' and r.alpha_used in cfg.alpha_grid for r in res.rows)
