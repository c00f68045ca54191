import csv
import json
import math

import pytest

from fkmc import cli

FREE_KERNEL = """
[problem]
dim = 2
[problem.domain]
kind = "full_space"
[run]
t = 1.0
points = [[0.0, 0.0]]
targets = [[1.0, 0.0]]
n_paths = 2048
n_steps = 50
seed = 7
"""


def run(tmp_path, config_text, subcommand, *extra):
    cfgfile = tmp_path / "cfg.toml"
    cfgfile.write_text(config_text)
    out = tmp_path / "out"
    code = cli.main([subcommand, "--config", str(cfgfile), "--out", str(out), *extra])
    return code, out


def read_rows(out):
    with open(out / "results.csv") as fh:
        return list(csv.DictReader(fh))


def test_free_kernel_csv_exact(tmp_path):
    code, out = run(tmp_path, FREE_KERNEL, "kernel")
    assert code == 0
    [row] = read_rows(out)
    expect = math.exp(-0.5) / (2.0 * math.pi)
    assert float(row["re"]) == pytest.approx(expect, rel=1e-15)
    assert float(row["stderr"]) == 0.0
    assert row["seed"] == "7" and row["n_steps"] == "50"


def test_malformed_toml_exit_2_no_outputs(tmp_path):
    code, out = run(tmp_path, "problem = [broken", "kernel")
    assert code == 2
    assert not out.exists()


def test_missing_config_exit_2(tmp_path):
    code = cli.main(["kernel", "--config", str(tmp_path / "nope.toml")])
    assert code == 2


def test_bad_domain_kind_exit_2(tmp_path):
    cfg = FREE_KERNEL.replace('kind = "full_space"', 'kind = "torus"')
    code, out = run(tmp_path, cfg, "kernel")
    assert code == 2


def test_point_outside_domain_exit_2(tmp_path):
    cfg = FREE_KERNEL.replace('kind = "full_space"', 'kind = "half_space"') \
                     .replace("points = [[0.0, 0.0]]", "points = [[-1.0, 0.0]]")
    code, out = run(tmp_path, cfg, "kernel")
    assert code == 2


def test_idempotent_outputs(tmp_path):
    _, out = run(tmp_path, FREE_KERNEL, "kernel")
    first = {f.name: f.read_bytes() for f in out.iterdir()}
    code = cli.main(["kernel", "--config", str(tmp_path / "cfg.toml"), "--out", str(out)])
    assert code == 0
    assert {f.name: f.read_bytes() for f in out.iterdir()} == first


def test_seed_flag_overrides(tmp_path):
    cfg = FREE_KERNEL.replace('kind = "full_space"', 'kind = "half_space"') \
                     .replace("points = [[0.0, 0.0]]", "points = [[1.0, 0.0]]") \
                     .replace("targets = [[1.0, 0.0]]", "targets = [[1.0, 0.0]]")
    _, out1 = run(tmp_path, cfg, "kernel")
    base = read_rows(out1)[0]
    code = cli.main(["kernel", "--config", str(tmp_path / "cfg.toml"),
                     "--out", str(out1), "--seed", "99"])
    assert code == 0
    overridden = read_rows(out1)[0]
    assert overridden["seed"] == "99"
    assert overridden["re"] != base["re"]


def test_manifest_echoes_config(tmp_path):
    _, out = run(tmp_path, FREE_KERNEL, "kernel")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "kernel"
    assert manifest["config"]["run"]["seed"] == 7
    assert "numpy" in manifest["versions"]


VALIDATE_A0 = """
[problem]
dim = 2
[problem.domain]
kind = "half_space"
[run]
t = 0.5
points = [[1.0, 0.0]]
n_paths = 8192
seed = 3
[validate]
n_paths = 4096
n_steps = 150
checks = ["diamagnetic", "girsanov", "boundary"]
"""


def test_validate_all_pass_exit_0(tmp_path):
    code, out = run(tmp_path, VALIDATE_A0, "validate")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "pass"
    assert report["n_failed"] == 0
    assert len(report["checks"]) == 5  # girsanov expands to three functionals


def test_validate_failure_exit_1(tmp_path):
    # naive-mode regularity probe at the slit tip reports irregularity: exit 1
    cfg = """
[problem]
dim = 2
[problem.domain]
kind = "slit_plane"
[run]
t = 1.0
points = [[0.0, 1.0]]
seed = 5
killing = "naive"
[experiment]
kind = "regularity"
boundary_points = [[0.0, 0.0]]
tau_sequence = [0.0]
n_paths = 2048
n_steps = 100
"""
    cfgfile = tmp_path / "cfg.toml"
    cfgfile.write_text(cfg)
    out = tmp_path / "out"
    code = cli.main(["experiment", "--config", str(cfgfile), "--out", str(out)])
    assert code == 1
    report = json.loads((out / "report.json").read_text())
    assert report["pass"] is False


def test_kato_subcommand(tmp_path):
    cfg = """
[problem]
dim = 3
[problem.domain]
kind = "full_space"
[problem.scalar]
name = "coulomb"
[problem.scalar.params]
charge = 1.0
[kato]
rho = [0.5, 0.1]
probes = [[0.0, 0.0, 0.0]]
"""
    code, out = run(tmp_path, cfg, "kato")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "kato"
    rows = read_rows(out)
    assert len(rows) == 2


def test_apply_subcommand(tmp_path):
    cfg = FREE_KERNEL + """
[apply]
psi = "gaussian"
"""
    code, out = run(tmp_path, cfg, "apply")
    assert code == 0
    [row] = read_rows(out)
    assert 0.3 < float(row["re"]) < 0.7  # heat-flowed Gaussian at the origin ~ 1/2


def test_unknown_subcommand_rejected():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["fly", "--config", "x"])
