import json
import math

import numpy as np
import pytest

from zlab import runner_io as rio
from zlab.cli import main
from zlab.errors import ConfigError

MINIMAL = "gamma = 1\nn_r = 256\nr_max = 32\ndt = 0.01\nT = 1\n"
SMALL = "gamma = 1\nn_r = 64\nr_max = 12\ndt = 0.05\nT = 0.2\n"


class TestParseConfig:
    def test_minimal_defaults(self):
        cfg = rio.parse_config(MINIMAL, env={})
        assert (cfg.gamma, cfg.n_r, cfg.r_max, cfg.dt, cfg.T) == (1.0, 256, 32.0, 0.01, 1.0)
        assert cfg.eps == 0.03 and cfg.rho_data == 1e-2 and cfg.picard_max_iter == 50
        assert cfg.solver_config().mode == "physical"
        assert cfg.solver_config("picard").mode == "paper"

    def test_gamma_range(self):
        with pytest.raises(ConfigError) as info:
            rio.parse_config(MINIMAL.replace("gamma = 1", "gamma = 2"), env={})
        assert info.value.key == "gamma"

    def test_duplicate_key(self):
        with pytest.raises(ConfigError) as info:
            rio.parse_config(MINIMAL + "dt = 0.02\n", env={})
        assert info.value.key == "dt"

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            rio.parse_config(MINIMAL + "colour = red\n", env={})
        assert info.value.key == "colour"

    def test_type_mismatch(self):
        with pytest.raises(ConfigError) as info:
            rio.parse_config(MINIMAL.replace("n_r = 256", "n_r = many"), env={})
        assert info.value.key == "n_r"

    def test_empty(self):
        with pytest.raises(ConfigError):
            rio.parse_config("# nothing here\n\n", env={})

    def test_missing_required(self):
        with pytest.raises(ConfigError) as info:
            rio.parse_config("gamma = 1\n", env={})
        assert info.value.key == "n_r"
        assert rio.parse_config("seed = 3\n", "verify symbols", env={}).seed == 3

    def test_comments_and_whitespace(self):
        cfg = rio.parse_config("  gamma=0.5   # wave order\n" + MINIMAL.split("\n", 1)[1], env={})
        assert cfg.gamma == 0.5

    def test_env_override(self):
        cfg = rio.parse_config(MINIMAL, env={"ZLAB_DT": "0.005", "ZLAB_MODE": "paper"})
        assert cfg.dt == 0.005 and cfg.mode == "paper"

    def test_resolution_margin(self):
        with pytest.raises(ConfigError) as info:
            rio.parse_config(SMALL + "u_width = 0.05\n", env={})
        assert info.value.key == "n_r"
        with pytest.raises(ConfigError) as info:
            rio.parse_config(SMALL + "u_width = 4\n", env={})
        assert info.value.key == "r_max"

    def test_smallness(self):
        with pytest.raises(ConfigError) as info:
            rio.parse_config(SMALL + "rho_data = 0.5\n", "picard", env={})
        assert info.value.key == "rho_data"
        assert rio.parse_config(SMALL + "rho_data = 0.5\n", "simulate", env={}).rho_data == 0.5

    def test_picard_needs_paper_mode(self):
        with pytest.raises(ConfigError) as info:
            rio.parse_config(SMALL + "mode = physical\n", "picard", env={})
        assert info.value.key == "mode"

    def test_cadence_divides_steps(self):
        with pytest.raises(ConfigError) as info:
            rio.parse_config(SMALL + "snapshot_every = 3\n", env={})
        assert info.value.key == "snapshot_every"

    def test_bool(self):
        assert rio.parse_config(SMALL + "nonlinear = false\n", env={}).nonlinear is False
        with pytest.raises(ConfigError):
            rio.parse_config(SMALL + "nonlinear = maybe\n", env={})


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestRun:
    def test_simulate_outputs(self, tmp_path):
        cfg = rio.parse_config(SMALL, env={})
        res = rio.run("simulate", cfg, tmp_path / "out")
        out = res.out
        for name in ("manifest.json", "conservation.csv", "convergence.csv", "trajectory.npz",
                     "snapshots/snap_00000.txt"):
            assert (out / name).exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["digest_algorithm"] == "sha256"
        assert manifest["config"]["n_r"] == 64
        assert manifest["grids"]["main"]["n_r"] == 64
        for name, digest in manifest["files"].items():
            assert rio.file_digest(out / name) == digest
        traj = rio.load_trajectory(out)
        assert len(traj) == 5 and traj.meta["solver"] == "direct-strang"

    def test_norms_from_run(self, tmp_path):
        rio.run("simulate", rio.parse_config(SMALL, env={}), tmp_path / "sim")
        text = f"input = {tmp_path / 'sim'}\nnorm_space = lebesgue\nnorm_q = 2\n"
        cfg = rio.parse_config(text, "norms", env={})
        res = rio.run("norms", cfg, tmp_path / "norms")
        rows = (res.out / "norms.csv").read_text().splitlines()
        assert rows[0] == "t,value" and len(rows) == 6
        values = [float(r.split(",")[1]) for r in rows[1:]]
        assert max(values) - min(values) < 1e-12 * values[0]

    def test_verify_symbols(self, tmp_path):
        cfg = rio.parse_config("symbol_samples = 500\n", "verify symbols", env={})
        res = rio.run("verify symbols", cfg, tmp_path)
        assert res.exit_code == 0 and res.metrics["min_ratio"] >= 1.0
        assert (tmp_path / "symbols.csv").read_text().startswith("j,case,samples,min_ratio,max_m")

    def test_verify_lp(self, tmp_path):
        cfg = rio.parse_config(SMALL + "lp_pairs = 5\n", "verify lp", env={})
        res = rio.run("verify lp", cfg, tmp_path)
        assert res.metrics["partition_deviation"] < 1e-12
        assert any(line.startswith("PASS") for line in res.lines)

    def test_unknown_subcommand(self, tmp_path):
        with pytest.raises(ConfigError):
            rio.run("launch", rio.parse_config(SMALL, env={}), tmp_path)

    def test_csvs_deterministic(self, tmp_path):
        cfg = rio.parse_config(SMALL, env={})
        a = rio.run("simulate", cfg, tmp_path / "a").out
        b = rio.run("simulate", cfg, tmp_path / "b").out
        for name in ("conservation.csv", "convergence.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_write_csv_roundtrip(self, tmp_path):
        rio.write_csv(tmp_path / "x.csv", ["a", "b"], [(0.1, None), (math.pi, 3)])
        lines = (tmp_path / "x.csv").read_text().splitlines()
        assert lines == ["a,b", "0.1,", f"{math.pi!r},3"]


class TestCli:
    def test_empty_config_usage_error(self, tmp_path, capsys):
        code = main(["simulate", "--config", str(_write(tmp_path, ""))])
        assert code == 2
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record["error"] == "ConfigError"

    def test_config_error_names_key(self, tmp_path, capsys):
        code = main(["simulate", "--config", str(_write(tmp_path, MINIMAL + "gamma = 0\n"))])
        assert code == 2
        assert json.loads(capsys.readouterr().err)["key"] == "gamma"

    def test_missing_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "absent.cfg")]) == 2

    def test_simulate(self, tmp_path, capsys):
        out = tmp_path / "o"
        code = main(["simulate", "--config", str(_write(tmp_path, SMALL)), "--out", str(out),
                     "--seed", "7"])
        assert code == 0
        assert json.loads((out / "manifest.json").read_text())["seeds"]["seed"] == 7
        assert "simulate" in capsys.readouterr().out

    def test_verify_symbols_pass(self, tmp_path, capsys):
        code = main(["verify", "symbols", "--config",
                     str(_write(tmp_path, "symbol_samples = 200\n")), "--out", str(tmp_path / "v")])
        assert code == 0
        assert "PASS" in capsys.readouterr().out

    def test_picard(self, tmp_path):
        text = "gamma = 1\nn_r = 64\nr_max = 12\ndt = 0.05\nT = 0.5\n"
        code = main(["picard", "--config", str(_write(tmp_path, text)), "--out", str(tmp_path / "p")])
        assert code == 0
        manifest = json.loads((tmp_path / "p" / "manifest.json").read_text())
        assert manifest["metrics"]["picard_converged"] is True
        assert (tmp_path / "p" / "convergence.csv").read_text().startswith("iteration,diff,factor")

    def test_numerical_failure_exit_code(self, tmp_path, capsys):
        # O(1000) data on a coarse grid push mass into the top of the spectrum
        text = SMALL.replace("T = 0.2", "T = 1") + "rho_data = 1000\n"
        out = tmp_path / "b"
        code = main(["simulate", "--config", str(_write(tmp_path, text)), "--out", str(out)])
        assert code == 3
        assert json.loads(capsys.readouterr().err)["error"] == "SpectralBlowupError"
        assert json.loads((out / "manifest.json").read_text())["exit_code"] == 3

    def test_bad_threads(self, tmp_path):
        assert main(["simulate", "--config", str(_write(tmp_path, SMALL)), "--threads", "0"]) == 2

    def test_no_subcommand(self):
        assert main([]) == 2
