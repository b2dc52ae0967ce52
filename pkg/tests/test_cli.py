import json

import numpy as np
import pytest

from frontlim import read_field
from frontlim.cli import main
from frontlim.config import (build_grid, build_bistable, load_spec,
                             parse_seed, resolve_spec_path)
from frontlim.errors import SpecError


def run_cli(*argv):
    return main(list(argv))


def spec_text(**over):
    base = {
        "model": {"n1": "1", "n2": "1.5", "interface": "hyperplane v=1 b=0",
                  "rho": "0.25", "k": "0.25", "epsilon": "0.05",
                  "scaling": "one"},
        "grid": {"origin": "-1", "extents": "101", "h": "0.02"},
        "solver": {"t_end": "0.1", "record_every": "10"},
        "experiment": {"name": "t", "initial": "wavefront: 0.3 - x",
                       "times": "0.05,0.1"},
    }
    for key, val in over.items():
        section, opt = key.split(".")
        base.setdefault(section, {})[opt] = val
    lines = []
    for section, kv in base.items():
        lines.append("[%s]" % section)
        lines += ["%s = %s" % it for it in kv.items()]
        lines.append("")
    return "\n".join(lines)


@pytest.fixture
def spec_file(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text(spec_text())
    return p


class TestConfig:
    def test_bundled_specs_resolve_and_parse(self):
        for name in ("default", "refraction-1d", "refraction-2d",
                     "wave-speed-1d", "shrink-circle", "mcf-circle",
                     "gen-time-1d", "gen-time-1d-two", "bracket-1d"):
            cfg = load_spec(name)
            build_grid(cfg)
        with pytest.raises(SpecError):
            resolve_spec_path("no-such-spec")

    def test_overrides(self, spec_file):
        cfg = load_spec(str(spec_file), ["model.epsilon=0.08", "grid.h=0.04"])
        assert cfg.get("model", "epsilon") == "0.08"
        model = build_bistable(cfg)
        assert model.epsilon == 0.08
        with pytest.raises(SpecError):
            load_spec(str(spec_file), ["not-an-override"])

    def test_invalid_values_name_the_option(self, spec_file):
        cfg = load_spec(str(spec_file), ["model.epsilon=zero"])
        with pytest.raises(SpecError, match="epsilon"):
            build_bistable(cfg)

    def test_seed_parsing(self, spec_file):
        cfg = load_spec(str(spec_file))
        grid = build_grid(cfg)
        pt = parse_seed("point:0.25", grid)
        assert pt.tolist() == [0.25]
        mask = parse_seed("region: x - 0.5", grid)
        assert mask.sum() > 0
        with pytest.raises(SpecError):
            parse_seed("blob:1", grid)
        with pytest.raises(SpecError):
            parse_seed("point:0,0", grid)


class TestCliRuns:
    def test_validate_default_passes(self, capsys):
        assert run_cli("validate") == 0
        out = capsys.readouterr().out
        assert "pass" in out and "FAIL" not in out

    def test_validate_reports_failures(self, tmp_path, capsys):
        p = tmp_path / "bad.ini"
        p.write_text(spec_text(**{"model.n1": "0.1"}))
        assert run_cli("validate", "--spec", str(p)) == 2
        assert "FAIL" in capsys.readouterr().out

    def test_rd_run_artifacts_and_determinism(self, spec_file, tmp_path):
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        assert run_cli("rd-run", "--spec", str(spec_file), "--out", str(out1),
                       "--no-figures") == 0
        assert run_cli("rd-run", "--spec", str(spec_file), "--out", str(out2),
                       "--no-figures") == 0
        idx1 = (out1 / "index.csv").read_bytes()
        assert idx1 == (out2 / "index.csv").read_bytes()
        lines = idx1.decode().strip().splitlines()
        assert lines[0] == "t,path,front_point_count"
        first = lines[1].split(",")
        field = read_field(out1 / first[1])
        assert field.grid.extents == (101,)
        for a, b in zip(sorted((out1 / "fields").iterdir()),
                        sorted((out2 / "fields").iterdir())):
            assert a.read_bytes() == b.read_bytes()

    def test_rd_run_cfl_violation_exits_2(self, spec_file, tmp_path, capsys):
        code = run_cli("rd-run", "--spec", str(spec_file), "--out",
                       str(tmp_path / "o"), "--override", "solver.dt=1.0",
                       "--no-figures")
        assert code == 2
        assert "CFL" in capsys.readouterr().err

    def test_hj_run_and_figures(self, tmp_path):
        p = tmp_path / "hj.ini"
        p.write_text(spec_text(**{"experiment.initial": "0.3 - x"}))
        out = tmp_path / "o"
        assert run_cli("hj-run", "--spec", str(p), "--out", str(out)) == 0
        assert (out / "index.csv").exists()
        assert (out / "figures" / "profiles.png").exists()

    def test_mcf_run_without_model_section(self, tmp_path):
        out = tmp_path / "o"
        code = run_cli("mcf-run", "--spec", "mcf-circle-pure", "--out",
                       str(out), "--no-figures",
                       "--override", "grid.extents=81,81",
                       "--override", "grid.h=0.04",
                       "--override", "solver.t_end=0.05")
        assert code == 0

    def test_arrival_with_seed(self, spec_file, tmp_path):
        out = tmp_path / "o"
        assert run_cli("arrival", "--spec", str(spec_file), "--out", str(out),
                       "--seed", "point:0.0", "--no-figures") == 0
        T = read_field(out / "arrival_time.txt")
        assert T.values.min() == 0.0
        assert (out / "arrival_time.csv").exists()

    def test_arrival_model_file_override(self, spec_file, tmp_path):
        model_file = tmp_path / "model.ini"
        model_file.write_text(
            "[model]\nn1 = 2\nn2 = 2.5\ninterface = none\n"
            "rho = 0.05\nk = 0.25\nepsilon = 0.05\n")
        out = tmp_path / "o"
        assert run_cli("arrival", "--spec", str(spec_file), "--out", str(out),
                       "--seed", "point:0.0", "--model", str(model_file),
                       "--no-figures") == 0
        T = read_field(out / "arrival_time.txt")
        x = T.grid.axis_coords(0)
        # uniform speed 2 from the origin
        assert np.abs(T.values - np.abs(x) / 2).max() < 1e-9

    def test_represent_fronts(self, tmp_path):
        p = tmp_path / "rep.ini"
        p.write_text(spec_text(**{"experiment.initial": "0.3 - x"}))
        out = tmp_path / "o"
        assert run_cli("represent", "--spec", str(p), "--out", str(out),
                       "--no-figures") == 0
        rows = (out / "fronts.csv").read_text().strip().splitlines()
        assert rows[0] == "t,x"
        assert len(rows) >= 3

    def test_bracket_gap_csv(self, tmp_path):
        out = tmp_path / "o"
        code = run_cli("bracket", "--spec", "bracket-1d", "--out", str(out),
                       "--no-figures",
                       "--override", "grid.extents=351",
                       "--override", "grid.h=0.01",
                       "--override", "solver.t_end=0.3")
        assert code == 0
        rows = (out / "gap.csv").read_text().strip().splitlines()
        assert rows[0] == "t,gap"
        gaps = [float(r.split(",")[1]) for r in rows[1:]]
        assert max(gaps) <= 2 * 0.01 + 3 * 0.02

    def test_converge_report(self, tmp_path):
        out = tmp_path / "o"
        code = run_cli("converge", "--spec", "refraction-1d", "--out", str(out),
                       "--override", "experiment.epsilons=0.2,0.15,0.1",
                       "--override", "experiment.times=0.1,0.3",
                       "--override", "experiment.beta=0.2",
                       "--no-figures")
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert len(report["entries"]) == 3
        assert (out / "hausdorff.csv").exists()
        assert (out / "gen_time.csv").exists()

    def test_no_interior_verdict(self, tmp_path, capsys):
        out = tmp_path / "o"
        code = run_cli("no-interior", "--spec", "refraction-2d", "--out",
                       str(out), "--no-figures",
                       "--override", "grid.extents=101,101",
                       "--override", "grid.h=0.04",
                       "--override", "experiment.times=0.1,0.3")
        assert code == 0
        assert "no fattening detected" in capsys.readouterr().out
        report = json.loads((out / "report.json").read_text())
        assert report["verdict"] == "no fattening detected"

    def test_gen_time_report(self, tmp_path):
        out = tmp_path / "o"
        code = run_cli("gen-time", "--spec", "gen-time-1d", "--out", str(out),
                       "--override", "experiment.epsilons=0.2,0.15,0.1",
                       "--no-figures")
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["ratio_spread"] is not None

    def test_missing_out_is_a_spec_error(self, spec_file, capsys):
        assert run_cli("rd-run", "--spec", str(spec_file)) == 2
        assert "--out" in capsys.readouterr().err

    def test_figures_rendered_for_report_path(self, tmp_path):
        out = tmp_path / "o"
        code = run_cli("gen-time", "--spec", "gen-time-1d", "--out", str(out),
                       "--override", "experiment.epsilons=0.2,0.15,0.1")
        assert code == 0
        assert (out / "figures" / "gen_time.png").exists()
