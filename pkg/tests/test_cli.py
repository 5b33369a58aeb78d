import json
import re

import numpy as np
import pytest

from selfstab import PointSet, load_points, save_points
from selfstab.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, OUT_DIR_ENV, main, parse_alpha
from selfstab.errors import DomainError
from selfstab.svg import step_plot_svg, write_step_plot
from selfstab.simulate import SampledPath


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestPlan:
    def test_figure_numbers(self, capsys):
        code, out, _ = run(capsys, "plan", "--epsilon", 0.1, "--T", 1, "--b", 0.5, "--M", 1, "--K", 1)
        assert code == EXIT_OK and "N = 1478" in out
        code, out, _ = run(capsys, "plan", "--epsilon", 0.1, "--b", 0.5, "--M", 0, "--K", 1)
        assert "N = 200" in out

    def test_small_jump_cutoff_reported(self, capsys):
        code, out, _ = run(capsys, "plan", "--epsilon", 0.1, "--b", 0.5, "--M", 1)
        assert code == EXIT_OK and "small_jump_cutoff" in out and "N = 1478" in out

    def test_bad_epsilon(self, capsys):
        code, _, err = run(capsys, "plan", "--epsilon", 1.5, "--b", 0.5, "--M", 1)
        assert code == EXIT_CONFIG and "epsilon" in err

    def test_infeasible_is_numeric(self, capsys):
        code, _, err = run(capsys, "plan", "--epsilon", 0.1, "--alpha", "fig1", "--K", 1)
        assert code == EXIT_NUMERIC and "Infeasible" in err

    def test_needs_a_model(self, capsys):
        assert run(capsys, "plan", "--epsilon", 0.1)[0] == EXIT_CONFIG
        assert run(capsys, "plan", "--epsilon", 0.1, "--alpha", "0.5", "--b", 0.5, "--M", 1)[0] == EXIT_CONFIG


class TestSimulate:
    def test_preset_writes_files_and_is_reproducible(self, capsys, tmp_path):
        for sub in ("a", "b"):
            code, out, _ = run(capsys, "simulate", "--preset", "fig1", "--grid-len", 300, "--N", 500,
                               "--out-dir", tmp_path / sub)
            assert code == EXIT_OK and json.loads(out[:out.index("}") + 1])["N"] == 500
        for name in ("path.csv", "path.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        manifest = json.loads((tmp_path / "a" / "path_manifest.json").read_text())
        assert manifest["library_version"] and len(manifest["config_sha256"]) == 64
        assert manifest["paths"][0]["seed"] == 1 and manifest["prng"]

    def test_env_out_dir(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path))
        assert run(capsys, "simulate", "--preset", "fig2", "--N", 100, "--grid-len", 50)[0] == EXIT_OK
        assert (tmp_path / "path.csv").exists()

    def test_config_file_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"alpha": 0.6, "N": 200, "K": 0.5, "seed": 3, "grid_len": 40,
                                   "variant": "stable", "prefix": "s"}))
        assert run(capsys, "simulate", "--config", cfg, "--seed", 4, "--out-dir", tmp_path)[0] == EXIT_OK
        manifest = json.loads((tmp_path / "s_manifest.json").read_text())
        assert manifest["config"]["seed"] == 4

    @pytest.mark.parametrize("extra", [
        ["--variant", "subordinator", "--alpha", "0.5"],
        ["--variant", "weighted", "--alpha", "fig1", "--weight", "C"],
        ["--variant", "tempered", "--alpha", "fig2", "--n-terms", "200"],
        ["--variant", "nonautonomous", "--alpha3", "0.5 + 0.2*cos(z + g)", "--g", "t"],
    ])
    def test_variants(self, capsys, tmp_path, extra):
        code, _, err = run(capsys, "simulate", *extra, "--N", 100, "--K", 0.5, "--grid-len", 60,
                           "--out-dir", tmp_path)
        assert code == EXIT_OK, err
        rows = np.loadtxt(tmp_path / "path.csv", delimiter=",", skiprows=1)
        assert rows.shape[1] == 2 and np.all(np.diff(rows[:, 0]) > 0)

    def test_batch(self, capsys, tmp_path):
        code, _, _ = run(capsys, "simulate", "--alpha", "fig2", "--N", 50, "--n-paths", 3, "--workers", 2,
                         "--grid-len", 20, "--out-dir", tmp_path)
        assert code == EXIT_OK
        assert sorted(p.name for p in tmp_path.glob("path_*.csv")) == [f"path_{i:04d}.csv" for i in range(3)]

    def test_config_errors(self, capsys, tmp_path):
        assert run(capsys, "simulate", "--alpha", "fig1", "--out-dir", tmp_path)[0] == EXIT_CONFIG
        assert run(capsys, "simulate", "--alpha", "fig1", "--N", 10, "--epsilon", 0.1)[0] == EXIT_CONFIG
        assert run(capsys, "simulate", "--alpha", "nonsense", "--N", 10)[0] == EXIT_CONFIG
        assert run(capsys, "simulate", "--variant", "stable", "--alpha", "fig1", "--N", 10,
                   "--out-dir", tmp_path)[0] == EXIT_CONFIG
        assert run(capsys, "simulate", "--alpha", "fig1", "--N", 10, "--interval", 1, 0)[0] == EXIT_CONFIG
        assert run(capsys, "simulate", "--config", tmp_path / "missing.json")[0] == EXIT_CONFIG


class TestSolveAndPoints:
    def test_gen_then_solve(self, capsys, tmp_path):
        assert run(capsys, "points", "gen", "--K", 1, "--N", 20, "--seed", 5, "--out-dir", tmp_path)[0] == EXIT_OK
        ps = load_points(tmp_path / "points.csv", (0, 1))
        assert len(ps) > 0 and (tmp_path / "points_manifest.json").exists()
        code, out, _ = run(capsys, "solve", tmp_path / "points.csv", "--alpha", "fig1", "--out-dir", tmp_path)
        assert code == EXIT_OK and re.search(r"f\(t1-\) = ", out)
        assert (tmp_path / "solution.svg").exists()
        meta = json.loads((tmp_path / "solution_meta.json").read_text())
        assert meta["point_set_sha256"] == ps.digest()

    def test_empty_points_give_constant_path(self, capsys, tmp_path):
        save_points(PointSet(0, 1), tmp_path / "e.csv")
        code, out, _ = run(capsys, "solve", tmp_path / "e.csv", "--alpha", "0.5", "--a0", 2.5, "--no-svg",
                           "--out-dir", tmp_path)
        assert code == EXIT_OK and "f(t1-) = 2.5" in out
        assert not (tmp_path / "solution.svg").exists()

    def test_bad_row(self, capsys, tmp_path):
        (tmp_path / "b.csv").write_text("x,y\n0.1,2\n0.2,zz\n")
        code, _, err = run(capsys, "solve", tmp_path / "b.csv", "--alpha", "fig1", "--out-dir", tmp_path)
        assert code == EXIT_CONFIG and "3" in err

    def test_convert_sorts(self, capsys, tmp_path):
        (tmp_path / "u.csv").write_text("x,y\n0.7,1\n0.2,-3\n")
        assert run(capsys, "points", "convert", tmp_path / "u.csv", "--output", "s.csv",
                   "--out-dir", tmp_path)[0] == EXIT_OK
        np.testing.assert_array_equal(load_points(tmp_path / "s.csv", (0, 1)).x, [0.2, 0.7])


class TestAnalysisCommands:
    def test_localize_single_r(self, capsys, tmp_path):
        code, out, _ = run(capsys, "localize", "--alpha", "fig1", "--z0", 0, "--r-values", 0.01,
                           "--n-paths", 120, "--n-reference", 2000, "--N", 500, "--out-dir", tmp_path)
        assert code == EXIT_OK and out.count("ks=") == 1
        rep = json.loads((tmp_path / "localize_z0.json").read_text())
        assert len(rep["ks_stats"]) == 1
        assert (tmp_path / "localize_z0.csv").read_text().splitlines()[0] == "r,ks,n"

    def test_holder(self, capsys, tmp_path):
        code, out, _ = run(capsys, "holder", "--n-paths", 5, "--grid-len", 800, "--N", 1000, "--out-dir", tmp_path)
        assert code == EXIT_OK and "median slope" in out
        summary = json.loads((tmp_path / "holder.json").read_text())
        assert summary["expected_exponent"] == 2.0 and len(summary["fits"]) == 5

    def test_holder_too_few_scales(self, capsys, tmp_path):
        code = run(capsys, "holder", "--h-values", 0.1, 0.2, "--out-dir", tmp_path)[0]
        assert code == EXIT_CONFIG

    def test_tempered(self, capsys, tmp_path):
        code, _, _ = run(capsys, "tempered", "--alpha", "fig1", "--horizon", 2, "--n-terms", 300,
                         "--grid-len", 50, "--out-dir", tmp_path)
        assert code == EXIT_OK
        rows = np.loadtxt(tmp_path / "path.csv", delimiter=",", skiprows=1)
        assert rows[-1, 0] == 2.0


def test_parse_alpha():
    assert parse_alpha("0.4").a == 0.4
    assert parse_alpha("fig2").b == pytest.approx(0.95)
    assert parse_alpha(0.3).kind == "constant"
    with pytest.raises(DomainError):
        parse_alpha("1.5")


class TestSvg:
    def test_plot_is_valid_xml_with_inset(self, tmp_path):
        import xml.etree.ElementTree as ET
        from selfstab import figure_model
        path = SampledPath(np.linspace(0, 1, 50), np.cumsum(np.ones(50)) - 25, {})
        write_step_plot(tmp_path / "p.svg", path, "demo", figure_model(1))
        root = ET.parse(tmp_path / "p.svg").getroot()
        assert root.tag.endswith("svg")
        assert len(root.findall(".//{http://www.w3.org/2000/svg}polyline")) >= 2

    def test_decimates_long_paths(self):
        t = np.linspace(0, 1, 200_001)
        svg = step_plot_svg(t, np.sin(50 * t), "long")
        assert len(svg) < 400_000

    def test_constant_path(self):
        assert "<svg" in step_plot_svg(np.array([0.0, 1.0]), np.array([3.0, 3.0]), "flat")
