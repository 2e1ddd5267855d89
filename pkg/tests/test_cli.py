import filecmp
import json

import numpy as np
import pytest

from reskmd.cli import cmd_analyze, cmd_roc, cmd_run_all, cmd_simulate, main
from reskmd.config import default_config_text, load_config
from reskmd.errors import ConfigurationError

SMALL_SADDLE = """
[system]
name = saddle_node
beta0 = 1.0
x0 = 1.8

[simulate]
dt = 0.01
sample_every = 20
sigma = 0.01
seed = 5
t_end = 110.0
rate_min = -0.02
rate_max = -0.012
n_tipping = 3
n_null = 3

[analysis]
max_windows = 12
indicators = reskmd_exact, variance
kernels =

[output]
directory = {outdir}
"""


def write_config(tmp_path, text=SMALL_SADDLE, name="exp.ini", outdir=None):
    outdir = outdir or (tmp_path / "out")
    p = tmp_path / name
    p.write_text(text.format(outdir=outdir))
    return p


class TestConfig:
    def test_defaults_load(self):
        cfg = load_config(None)
        assert cfg.system == "saddle_node"
        assert cfg.dt == 0.01 and cfg.sample_every == 10 and cfg.sigma == 0.01
        assert cfg.t_window is None and cfg.d_hankel is None
        assert cfg.indicator_names()[-1] == "reskmd_kernel:rbf,0.01"

    def test_default_text_round_trips(self, tmp_path):
        p = tmp_path / "defaults.ini"
        p.write_text(default_config_text())
        cfg = load_config(p)
        assert cfg.n_tipping == 20 and cfg.n_null == 20

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[simulate]\nwarp = 9\n")
        with pytest.raises(ConfigurationError):
            load_config(p)

    def test_unknown_indicator_rejected(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[analysis]\nindicators = entropy\n")
        with pytest.raises(ConfigurationError):
            load_config(p)

    def test_overrides_and_validation(self):
        cfg = load_config(None, overrides=["simulate.seed=99", "output.directory=zzz"])
        assert cfg.seed == 99 and cfg.outdir == "zzz"
        with pytest.raises(ConfigurationError):
            load_config(None, overrides=["simulate.bogus=1"])
        with pytest.raises(ConfigurationError):
            load_config(None, overrides=["nonsense"])

    def test_hopf_vector_x0(self, tmp_path):
        p = tmp_path / "h.ini"
        p.write_text("[system]\nname = hopf\nbeta0 = -1.0\nx0 = 0.1, 0.0\n")
        cfg = load_config(p)
        assert cfg.x0 == (0.1, 0.0)

    def test_tipping_rates_linspace(self):
        cfg = load_config(None, overrides=["simulate.n_tipping=3"])
        rates = cfg.tipping_rates()
        assert len(rates) == 3
        assert rates[0] == pytest.approx(-0.02) and rates[-1] == pytest.approx(-0.005)


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = load_config(write_config(tmp))
    summary = cmd_run_all(cfg)
    return tmp, cfg, summary


class TestPipelineCommands:
    def test_simulate_outputs(self, finished_run):
        tmp, cfg, _ = finished_run
        outdir = tmp / "out"
        assert (outdir / "manifest.csv").exists()
        runs = sorted((outdir / "runs").glob("*.csv"))
        assert len(runs) == 6

    def test_analyze_outputs(self, finished_run):
        tmp, cfg, _ = finished_run
        traces = sorted((tmp / "out" / "ews").glob("*.csv"))
        assert len(traces) == 12  # 6 runs x 2 indicators

    def test_roc_outputs(self, finished_run):
        tmp, cfg, summary = finished_run
        outdir = tmp / "out"
        assert set(summary) == {"reskmd_exact", "variance"}
        for name in summary:
            assert (outdir / "roc" / f"{name}.csv").exists()
            assert (outdir / "roc" / f"{name}.svg").exists()
            assert (outdir / "traces" / f"{name}.svg").exists()
        assert (outdir / "scores.csv").exists()
        loaded = json.loads((outdir / "roc" / "summary.json").read_text())
        assert loaded == summary

    def test_scores_csv_has_terminal_values(self, finished_run):
        tmp, _, _ = finished_run
        lines = (tmp / "out" / "scores.csv").read_text().strip().splitlines()
        assert lines[0] == "run_id,indicator,label,trend_score,terminal_value"
        assert len(lines) == 13

    def test_cli_equals_library_results(self, finished_run):
        # the analyze command must reproduce direct library calls bit-for-bit
        tmp, cfg, _ = finished_run
        from reskmd import auto_delay_config, compute_indicator, load_csv
        from reskmd.evaluation import read_manifest

        entry = read_manifest(tmp / "out" / "manifest.csv")[0]
        series = load_csv(tmp / "out" / entry.path, time_column=0)
        dcfg = auto_delay_config(series.n_samples, max_windows=cfg.max_windows)
        direct = compute_indicator("reskmd_exact", series, dcfg, rank=cfg.rank)
        from reskmd.indicators import read_ews_csv

        stored = read_ews_csv(tmp / "out" / "ews" / f"{entry.run_id}__reskmd_exact.csv")
        np.testing.assert_array_equal(stored.values, direct.values)
        np.testing.assert_array_equal(stored.times, direct.times)


class TestStepwiseCommands:
    def test_commands_compose_and_workers_pool(self, tmp_path):
        # run the three stages separately, analysis through the worker pool
        cfg_path = write_config(tmp_path)
        cfg = load_config(cfg_path, overrides=["output.workers=2"])
        manifest = cmd_simulate(cfg)
        cmd_analyze(cfg, manifest)
        summary = cmd_roc(cfg, manifest)
        assert set(summary) == {"reskmd_exact", "variance"}
        # pooled analysis output matches the sequential path byte-for-byte
        seq_dir = tmp_path / "seq"
        cfg_seq = load_config(
            cfg_path, overrides=[f"output.directory={seq_dir}"]
        )
        cmd_simulate(cfg_seq)
        cmd_analyze(cfg_seq)
        a = (tmp_path / "out" / "ews" / "saddle_node-000__reskmd_exact.csv").read_bytes()
        b = (seq_dir / "ews" / "saddle_node-000__reskmd_exact.csv").read_bytes()
        assert a == b


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        cfg_path = write_config(tmp_path, outdir=tmp_path / "out_a")
        cfg_a = load_config(cfg_path)
        cmd_run_all(cfg_a)
        cfg_b = load_config(cfg_path, overrides=[f"output.directory={tmp_path/'out_b'}"])
        cmd_run_all(cfg_b)
        for rel in (
            "manifest.csv",
            "scores.csv",
            "roc/summary.json",
            "roc/reskmd_exact.csv",
            "roc/reskmd_exact.svg",
            "runs/saddle_node-000.csv",
            "ews/saddle_node-000__reskmd_exact.csv",
        ):
            a, b = tmp_path / "out_a" / rel, tmp_path / "out_b" / rel
            assert filecmp.cmp(a, b, shallow=False), f"{rel} differs"


class TestMainEntry:
    def test_print_config(self, capsys):
        assert main(["print-config"]) == 0
        out = capsys.readouterr().out
        assert "[simulate]" in out and "d_hankel" in out

    def test_missing_config_file_is_config_error(self, capsys):
        code = main(["--config", "/nonexistent/exp.ini", "simulate"])
        assert code == 2
        assert "configuration error" in capsys.readouterr().err

    def test_empty_indicator_list_rejected(self, tmp_path, capsys):
        p = tmp_path / "empty.ini"
        p.write_text("[analysis]\nindicators =\nkernels =\n")
        code = main(["--config", str(p), "roc"])
        assert code == 2

    def test_roc_before_analyze_fails_cleanly(self, tmp_path, capsys):
        code = main(["--outdir", str(tmp_path / "novel"), "roc"])
        assert code != 0

    def test_full_pipeline_through_main(self, tmp_path):
        cfg_path = write_config(tmp_path)
        assert main(["--config", str(cfg_path), "run-all"]) == 0
        assert (tmp_path / "out" / "roc" / "summary.json").exists()

    def test_seed_and_outdir_flags_override(self, tmp_path):
        cfg_path = write_config(tmp_path)
        other = tmp_path / "elsewhere"
        code = main(
            ["--config", str(cfg_path), "--outdir", str(other), "--seed", "42",
             "simulate"]
        )
        assert code == 0
        manifest = (other / "manifest.csv").read_text()
        # seed 42 propagates into the derived per-run seeds
        assert str(42 * 1_000_003) in manifest
