import json

import pytest

from rrzf import cli, verify
from rrzf.experiments import CSV_HEADER


def _small(tmp_path, *extra):
    out = tmp_path / 'out.csv'
    args = ['sweep-k', '--m', '2', '--k', '2,4', '--trials', '5', '--beta-grid', '0.5,1',
            '--schemes', 'ZF,RRZF', '--out', str(out), *extra]
    return cli.main(args), out


def test_sweep_k_writes_csv_and_metadata(tmp_path):
    code, out = _small(tmp_path)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ','.join(CSV_HEADER)
    assert len(lines) == 1 + 2 * 4
    meta = json.loads((tmp_path / 'out.csv.meta.json').read_text())
    assert meta['trials'] == 5 and meta['command'] == 'sweep-k'
    assert 'threads' not in meta


def test_no_model_flag(tmp_path):
    code, out = _small(tmp_path, '--no-model')
    assert code == 0
    assert '-model' not in out.read_text()


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / 'run.cfg'
    conf.write_text("# small run\nm = 2\nk = 3\ntrials = 4\nsnr_db = 5\nseed = 77\n")
    args = cli.make_parser().parse_args(['sweep-snr', '--config', str(conf), '--trials', '6'])
    cfg = cli.build_config(args)
    assert (cfg.m_tx, cfg.k_users, cfg.snr_db, cfg.seed) == (2, 3, 5.0, 77)
    assert cfg.trials == 6
    # Untouched fields keep the command default.
    assert cfg.err_power == [0.1, 0.2]


@pytest.mark.parametrize('flags', [
    ['--e2', '1.5'],
    ['--m', '4', '--k', '2'],
    ['--trials', '1'],
    ['--schemes', 'ZF,XYZ'],
    ['--beta', 'often'],
])
def test_invalid_configuration_exit_code(flags, capsys):
    assert cli.main(['sweep-k', *flags]) == cli.EXIT_INVALID_CONFIG
    assert 'invalid configuration' in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    conf = tmp_path / 'bad.cfg'
    conf.write_text("colour = blue\n")
    assert cli.main(['opt-beta', '--config', str(conf)]) == cli.EXIT_INVALID_CONFIG
    assert cli.main(['opt-beta', '--config', str(tmp_path / 'missing.cfg')]) == 2


def test_verify_exit_codes(monkeypatch, capsys):
    ok = [verify.CheckResult('a', True, 'fine')]
    monkeypatch.setattr(verify, 'run_all', lambda: ok)
    assert cli.main(['verify']) == 0
    monkeypatch.setattr(verify, 'run_all', lambda: ok + [verify.CheckResult('b', False, 'no')])
    assert cli.main(['verify']) == cli.EXIT_VERIFY_FAILED
    assert '[FAIL] b' in capsys.readouterr().out


def test_opt_alpha_and_opt_beta(tmp_path):
    out = tmp_path / 'a.csv'
    assert cli.main(['opt-alpha', '--m', '2', '--k', '6', '--beta', '0.2,0.8', '--trials', '4',
                     '--alpha-grid', '0.01,1', '--out', str(out)]) == 0
    rows = out.read_text().splitlines()[1:]
    assert [r.split(',')[0] for r in rows] == ['beta', 'beta']
    out = tmp_path / 'b.csv'
    assert cli.main(['opt-beta', '--k', '4', '--trials', '4', '--beta-grid', '0.3,1',
                     '--schemes', 'RZF', '--out', str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3


def test_demo(capsys):
    assert cli.main(['demo', '--trials', '2']) == 0
    text = capsys.readouterr().out
    assert 'SUS order' in text and 'RRZF' in text
