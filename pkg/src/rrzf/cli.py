"""Command line entry point: ``rrzf <command> [options]``.

Exit codes: 0 on success, 2 for an invalid configuration, 3 when the
verification suite reports a failure.
"""

import argparse
import configparser
import json
import logging
import sys
from dataclasses import asdict, fields

import numpy as np

from . import __version__
from .channel import RngStream, draw_channels
from .experiments import (DEFAULT_ALPHA_GRID, DEFAULT_BETA_GRID, ExperimentConfig,
                          LinkPoint, SweepResult, SweepRow, figure1_sweep,
                          figure2_sweep, figure3_sweep, simulate)
from .metrics import physical_sinr
from .precoding import Scheme, build_precoder
from .selection import SelectionParams, sus_select

log = logging.getLogger('rrzf')

EXIT_INVALID_CONFIG = 2
EXIT_VERIFY_FAILED = 3

# Default operating points per command; a config file or flags override them.
COMMAND_DEFAULTS = {
    'sweep-k': dict(m_tx=[2, 4, 6], k_users=[2, 4, 6, 8, 10, 15, 20, 30, 40, 50],
                    snr_db=15.0, err_power=0.1, beta='auto'),
    'sweep-snr': dict(m_tx=4, k_users=20, snr_db=[0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
                      err_power=[0.1, 0.2], beta='auto'),
    'opt-alpha': dict(m_tx=[2, 3, 4], k_users=500, snr_db=30.0, err_power=0.1, beta='auto'),
    'opt-beta': dict(m_tx=4, k_users=20, snr_db=15.0, err_power=0.1, beta='auto'),
    'demo': dict(m_tx=4, k_users=8, snr_db=15.0, err_power=0.1, beta=0.6),
}

# Config-file / flag spellings mapped onto ExperimentConfig fields.
ALIASES = {'m': 'm_tx', 'k': 'k_users', 'e2': 'err_power', 'snr': 'snr_db'}


class ConfigError(ValueError):
    pass


def _numbers(text, cast=float):
    try:
        values = [cast(v) for v in str(text).replace(' ', '').split(',') if v]
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc}") from None
    if not values:
        raise ConfigError(f"empty value {text!r}")
    return values[0] if len(values) == 1 else values


def _parse_value(key, text):
    if key in ('m_tx', 'k_users'):
        return _numbers(text, int)
    if key in ('trials', 'seed', 'threads'):
        return int(text)
    if key in ('snr_db', 'err_power'):
        return _numbers(text)
    if key == 'beta':
        return 'auto' if str(text).strip().lower() == 'auto' else _numbers(text)
    if key == 'schemes':
        try:
            return tuple(Scheme(s.strip().upper()) for s in str(text).split(',') if s.strip())
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if key in ('alpha_grid', 'beta_grid'):
        values = _numbers(text)
        return tuple(values) if isinstance(values, list) else (values,)
    if key in ('model', 'full_selection'):
        return str(text).strip().lower() in ('1', 'true', 'yes', 'on')
    raise ConfigError(f"unknown configuration key {key!r}")


def read_config_file(path):
    """Read flat ``key = value`` lines (``#`` comments allowed)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';'))
    try:
        with open(path) as fh:
            parser.read_string('[config]\n' + fh.read())
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    values = {}
    for raw_key, text in parser['config'].items():
        key = ALIASES.get(raw_key.replace('-', '_'), raw_key.replace('-', '_'))
        values[key] = _parse_value(key, text)
    return values


def build_config(args):
    """Command defaults, then the config file, then explicit flags."""
    values = dict(COMMAND_DEFAULTS.get(args.command, {}))
    if args.config:
        values.update(read_config_file(args.config))
    flag_map = {'m': 'm_tx', 'k': 'k_users', 'snr_db': 'snr_db', 'e2': 'err_power',
                'beta': 'beta', 'schemes': 'schemes', 'trials': 'trials',
                'seed': 'seed', 'threads': 'threads', 'alpha_grid': 'alpha_grid',
                'beta_grid': 'beta_grid'}
    for flag, key in flag_map.items():
        text = getattr(args, flag, None)
        if text is not None:
            values[key] = _parse_value(key, text)
    if getattr(args, 'no_model', False):
        values['model'] = False
    if getattr(args, 'partial_selection', False):
        values['full_selection'] = False
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    try:
        return ExperimentConfig(**values).validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _metadata(cmd, cfg):
    meta = asdict(cfg)
    meta['schemes'] = [str(s) for s in cfg.schemes]
    meta.pop('threads')
    meta.update(command=cmd, version=__version__, p=1.0,
                sigma2='10^(-snr_db/10)', default_trials=ExperimentConfig.trials,
                default_alpha_grid=len(DEFAULT_ALPHA_GRID),
                default_beta_grid=list(DEFAULT_BETA_GRID))
    return meta


def _emit(result, cmd, cfg, out):
    text = result.to_csv()
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, 'w', newline='') as fh:
        fh.write(text)
    with open(out + '.meta.json', 'w') as fh:
        json.dump(_metadata(cmd, cfg), fh, indent=2, sort_keys=True)
        fh.write('\n')
    log.info("wrote %d rows to %s", len(result.rows), out)


def _beta_curves(cfg):
    """Mean sum rate at every beta of the grid, per scheme and point."""
    result = SweepResult()
    schemes = [Scheme(s) for s in cfg.schemes]
    ms = cfg.m_tx if isinstance(cfg.m_tx, list) else [cfg.m_tx]
    ks = cfg.k_users if isinstance(cfg.k_users, list) else [cfg.k_users]
    snrs = cfg.snr_db if isinstance(cfg.snr_db, list) else [cfg.snr_db]
    e2s = cfg.err_power if isinstance(cfg.err_power, list) else [cfg.err_power]
    for m in ms:
        for k in ks:
            if k < m:
                continue
            for snr in snrs:
                for e2 in e2s:
                    point = LinkPoint(m, k, snr, e2)
                    alphas = [point.alpha(s) for s in schemes]
                    block = simulate(point, cfg.beta_grid, alphas, cfg.trials,
                                     cfg.seed, cfg.threads)
                    for bi, beta in enumerate(block.betas):
                        for j, scheme in enumerate(schemes):
                            samples = block.rates[:, bi, j]
                            result.rows.append(SweepRow(
                                'beta', beta, str(scheme), m, k, float(snr), float(e2),
                                beta, alphas[j], float(samples.mean()),
                                float(samples.std(ddof=1) / np.sqrt(samples.size)),
                                float(block.n_selected[:, bi].mean()), block.redraws,
                                cfg.trials, cfg.seed))
    return result


def _demo(cfg):
    m = cfg.m_tx if not isinstance(cfg.m_tx, list) else cfg.m_tx[0]
    k = cfg.k_users if not isinstance(cfg.k_users, list) else cfg.k_users[0]
    snr = cfg.snr_db if not isinstance(cfg.snr_db, list) else cfg.snr_db[0]
    e2 = cfg.err_power if not isinstance(cfg.err_power, list) else cfg.err_power[0]
    beta = 1.0 if cfg.beta == 'auto' else (cfg.beta[0] if isinstance(cfg.beta, list) else cfg.beta)
    point = LinkPoint(m, k, snr, e2)
    np.set_printoptions(precision=3, suppress=True, linewidth=120)
    real = draw_channels(RngStream(cfg.seed, 0), k, m, e2)
    print(f"M={m} K={k} SNR={snr} dB (P=1, sigma2={point.sigma2:.4g}) e2={e2} beta={beta}")
    print("estimated channel H_est (rows = users):\n", real.h_est)
    print("true channel H:\n", real.h_true)
    sel = sus_select(real.h_est, SelectionParams(beta, m))
    print(f"SUS order {list(sel.order)}  pool_exhausted={sel.pool_exhausted}")
    if not sel.order:
        return
    idx = list(sel.order)
    for scheme in cfg.schemes:
        alpha = point.alpha(scheme)
        pre = build_precoder(real.h_est[idx], alpha, point.p)
        rep = physical_sinr(real.h_true[idx], pre, point.sigma2)
        print(f"\n{scheme}: alpha={alpha:.4g} rho={pre.rho:.4g}")
        print(" W =\n", pre.w)
        print(" SINR per user:", rep.per_user_sinr, f" sum rate {rep.sum_rate:.4f} bit/s/Hz")


def _add_common(p):
    p.add_argument('--config', help="flat key = value file; flags override it")
    p.add_argument('--m', help="transmit antennas M (value or comma list)")
    p.add_argument('--k', help="users K (value or comma list)")
    p.add_argument('--snr-db', dest='snr_db', help="P/sigma2 in dB (value or comma list)")
    p.add_argument('--e2', help="CSI error power (value or comma list)")
    p.add_argument('--beta', help="SUS threshold, comma list, or 'auto'")
    p.add_argument('--schemes', help="comma list of ZF,RZF,RRZF,MF")
    p.add_argument('--trials', help="Monte-Carlo trials per point")
    p.add_argument('--seed', help="64-bit base seed")
    p.add_argument('--threads', help="worker processes")
    p.add_argument('--alpha-grid', dest='alpha_grid', help="comma list of alphas")
    p.add_argument('--beta-grid', dest='beta_grid', help="comma list of betas")
    p.add_argument('--out', help="CSV output path (default: stdout)")
    p.add_argument('--no-model', action='store_true',
                   help="omit the <scheme>-model rows")
    p.add_argument('--partial-selection', action='store_true',
                   help="let auto-beta pick thresholds that serve fewer than M users")


def make_parser():
    parser = argparse.ArgumentParser(
        prog='rrzf', description="Robust regularized ZF with semiorthogonal user selection")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('-v', '--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)
    helps = {
        'sweep-k': "sum rate against the number of users",
        'sweep-snr': "sum rate against the SNR",
        'opt-alpha': "grid-optimal alpha against beta",
        'opt-beta': "mean sum rate over the beta grid",
        'demo': "one trial with intermediate matrices",
    }
    for name, text in helps.items():
        _add_common(sub.add_parser(name, help=text))
    sub.add_parser('verify', help="run the property and oracle checks")
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    if args.command == 'verify':
        from .verify import run_all
        results = run_all()
        for r in results:
            print(r.line())
        return 0 if all(r.passed for r in results) else EXIT_VERIFY_FAILED
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"rrzf: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    if args.command == 'demo':
        _demo(cfg)
        return 0
    runners = {'sweep-k': figure2_sweep, 'sweep-snr': figure3_sweep,
               'opt-alpha': figure1_sweep, 'opt-beta': _beta_curves}
    _emit(runners[args.command](cfg), args.command, cfg, args.out)
    return 0


if __name__ == '__main__':
    sys.exit(main())
