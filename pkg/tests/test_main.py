"""Tests for the command-line entry point."""

import pytest

import main
from utils import csv_handler
from utils.logger import get_log_file_path, read_log_file, setup_logger


class TestParser:

    def test_requires_command(self):
        with pytest.raises(SystemExit):
            main.build_parser().parse_args([])

    def test_common_defaults(self):
        args = main.build_parser().parse_args(['approx', '--epsilon', '0.05', '--formula', 'leading',
                                               '--region', 'leading', '--t', '0.4'])
        assert args.command == 'approx'
        assert args.epsilon == 0.05
        assert (args.formula, args.region, args.delta) == ('leading', 'leading', 1.0)
        assert args.nc == 64

    def test_rejects_unknown_formula(self):
        with pytest.raises(SystemExit):
            main.build_parser().parse_args(['approx', '--epsilon', '0.05', '--formula', 'wkb'])

    def test_pipeline_options(self):
        args = main.build_parser().parse_args(['pipeline', '--study', 'leading', '--epsilons', '0.1', '0.05',
                                               '--workers', '2'])
        assert args.study == 'leading'
        assert args.epsilons == [0.1, 0.05]
        assert args.workers == 2


class TestCommands:

    def test_bad_epsilon_exit_code(self, capsys):
        assert main.main(['--skip-checks', 'solve', '--epsilon', '2']) == 2
        err = capsys.readouterr().err
        assert "Invalid input" in err
        assert "Hint:" in err

    def test_bad_config_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("colour = red\n")
        assert main.main(['--skip-checks', 'pipeline', '--config', str(path)]) == 2
        assert "unknown key" in capsys.readouterr().err

    def test_whitham_before_breaking(self, tmp_path, capsys):
        assert main.main(['--skip-checks', 'whitham', '--t', '0.1', '--out', str(tmp_path)]) == 0
        assert "before breaking" in capsys.readouterr().out

    def test_approx_writes_table(self, tmp_path):
        path = tmp_path / "hopf.csv"
        code = main.main(['--skip-checks', 'approx', '--epsilon', '0.05', '--t', '0.1', '--formula', 'hopf',
                          '--region', 'whole', '--nmodes', '256', '--out', str(path)])
        assert code == 0
        ok, data = csv_handler.read_table(str(path))
        assert ok
        assert data['kind'] == 'approximation'
        assert data['meta']['formula'] == 'hopf'
        assert data['columns']['x'].size == 256

    def test_solve_writes_snapshot_and_spectrum(self, tmp_path):
        code = main.main(['--skip-checks', 'solve', '--epsilon', '0.1', '--t', '0.05', '--nmodes', '512',
                          '--nsteps', '400', '--out', str(tmp_path)])
        assert code == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ['snapshot_eps0.1_t0.05.csv', 'snapshot_eps0.1_t0.05_spectrum.csv']
        ok, (field, eps) = csv_handler.read_snapshot(str(tmp_path / names[0]))
        assert ok
        assert (field.N, eps) == (512, 0.1)

    def test_environment_check_runs(self, tmp_path, capsys):
        assert main.main(['whitham', '--t', '0.1', '--out', str(tmp_path)]) == 0

    def test_painleve_rejects_symbolic_time(self, capsys):
        assert main.main(['--skip-checks', 'painleve', '--equation', 'pi2', '--t', 'tc']) == 2
        assert "Invalid input" in capsys.readouterr().err

    def test_pipeline_dry_run(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main.main(['--skip-checks', 'pipeline', '--study', 'prebreakup', '--epsilons', '0.1', '0.05',
                          '--out', str(out_dir), '--dry-run'])
        assert code == 0
        out = capsys.readouterr().out
        assert "[DRY RUN]" in out
        assert "eps=0.1: N=4096 Nt=20000" in out
        assert not out_dir.exists()

    def test_config_log_file(self, tmp_path):
        log_path = tmp_path / "study.log"
        config = tmp_path / "study.cfg"
        config.write_text(f"study = prebreakup\nepsilons = 0.1\nlog_file = {log_path}\n")
        previous = get_log_file_path()
        try:
            assert main.main(['--skip-checks', 'pipeline', '--config', str(config), '--dry-run']) == 0
            assert get_log_file_path() == str(log_path)
            assert "Dry run of 'prebreakup'" in read_log_file()
        finally:
            setup_logger(previous)
