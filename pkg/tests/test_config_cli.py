"""Config parsing and the command-line front end (exit codes, artifacts)."""
import json

import numpy as np
import pytest

from rankrelax import ConfigError
from rankrelax.cli import main
from rankrelax.config import (Config, directions_from_config,
                              grid_from_config, material_from_config,
                              parse_config)

BASE = """
material.model = neohooke
material.lambda = 0.5
material.mu = 1.0
material.d0 = 0.3
material.dinf = 0.9
grid.d = 2
grid.diag_min = 1.0
grid.diag_max = 1.6
grid.diag_delta = 0.2
directions.kind = reduced
directions.k = 1
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# -- parser --------------------------------------------------------------------

def test_parse_config_basics(tmp_path):
    cfg = parse_config(write(tmp_path, """
# comment
material.model = stvk

bvp.loads = 0.1, 0.2, 0.3
flag = yes
"""))
    assert cfg.get_str("material.model") == "stvk"
    assert cfg.get_floats("bvp.loads") == [0.1, 0.2, 0.3]
    assert cfg.get_bool("flag") is True
    assert cfg.get_int("missing", 7) == 7
    with pytest.raises(ConfigError):
        cfg.get_float("material.model")
    with pytest.raises(ConfigError):
        cfg.get_str("nope")


def test_parse_config_malformed_line(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(write(tmp_path, "just a line without equals\n"))
    with pytest.raises(ConfigError):
        parse_config(write(tmp_path, "= value\n"))


def test_typed_section_builders(tmp_path):
    cfg = parse_config(write(tmp_path, BASE))
    mat = material_from_config(cfg)
    assert mat.mu == 1.0 and mat.dinf == 0.9
    grid = grid_from_config(cfg)
    assert grid.shape == (4, 1, 1, 4)
    dirs = directions_from_config(cfg, 2)
    assert len(dirs) == 16
    bad = Config(dict(cfg.entries))
    bad.entries["material.model"] = "rubber"
    with pytest.raises(ConfigError):
        material_from_config(bad)


# -- exit codes ----------------------------------------------------------------

def test_exit_0_and_artifacts(tmp_path):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["convexify", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "envelope.csv").exists()
    assert (out / "convergence.csv").exists()


def test_exit_2_config_error(tmp_path):
    cfg = write(tmp_path, BASE.replace("neohooke", "rubber"))
    assert main(["convexify", "--config", cfg,
                 "--out", str(tmp_path / "o")]) == 2
    cfg2 = write(tmp_path, "material.model = neohooke\n", "short.cfg")
    assert main(["convexify", "--config", cfg2,
                 "--out", str(tmp_path / "o2")]) == 2


def test_exit_3_numerical_failure(tmp_path):
    cfg = write(tmp_path, BASE + "tree.f = 9.0, 0.0, 0.0, 9.0\n")
    assert main(["tree", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_exit_4_io_error(tmp_path):
    # missing config file
    assert main(["convexify", "--config", str(tmp_path / "absent.cfg"),
                 "--out", str(tmp_path / "o")]) == 4
    # output path collides with an existing file
    blocker = tmp_path / "blocked"
    blocker.write_text("")
    cfg = write(tmp_path, BASE)
    assert main(["convexify", "--config", cfg, "--out", str(blocker)]) == 4


def test_bvp_empty_load_program(tmp_path):
    cfg = write(tmp_path, """
material.model = neohooke
material.lambda = 0.5
material.mu = 1.0
material.d0 = 0.3
material.dinf = 0.9
bvp.kind = uniaxial
bvp.kappa = 0.5
""")
    out = tmp_path / "out"
    assert main(["bvp", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "fd.csv").read_text() == "u,f\n"


def test_bvp_curve_artifact(tmp_path):
    cfg = write(tmp_path, """
material.model = neohooke
material.lambda = 0.5
material.mu = 1.0
material.d0 = 0.3
material.dinf = 0.9
bvp.kind = uniaxial
bvp.kappa = 0.4
bvp.loads = 0.02, 0.05
bvp.epsilon = 0.0
bvp.solver = newton
""")
    out = tmp_path / "out"
    assert main(["bvp", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "fd.csv").read_text().strip().splitlines()
    assert lines[0] == "u,f"
    assert len(lines) == 3
    assert float(lines[1].split(",")[0]) == 0.02
    log = (out / "solver_log.csv").read_text().strip().splitlines()
    assert log[0] == "step,iterations,residual"


def test_tree_artifact_leaves_partition(tmp_path):
    cfg = write(tmp_path, BASE + "tree.f = 1.3, 0.0, 0.0, 1.3\n")
    out = tmp_path / "out"
    assert main(["tree", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads((out / "tree.json").read_text())
    xis = [leaf["xi"] for leaf in payload["leaves"]]
    assert sum(xis) == pytest.approx(1.0, abs=1e-12)
    assert payload["tree"]["F"] == [[1.3, 0.0], [0.0, 1.3]]


def test_scaling_artifact(tmp_path):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["scaling", "--config", cfg, "--out", str(out),
                 "--threads", "2"]) == 0
    lines = (out / "scaling.csv").read_text().strip().splitlines()
    assert lines[0] == "threads,seconds,efficiency"
    assert [int(l.split(",")[0]) for l in lines[1:]] == [1, 2]


def test_lines_artifact(tmp_path):
    cfg = write(tmp_path, BASE + """
lines.path = rank2
lines.s_min = 0.0
lines.s_max = 0.6
lines.s_count = 4
""")
    out = tmp_path / "out"
    assert main(["lines", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "lines.csv").read_text().strip().splitlines()
    assert lines[0] == "s,w,w_envelope"
    assert len(lines) == 5


def test_artifacts_deterministic_and_thread_invariant(tmp_path):
    cfg = write(tmp_path, BASE)
    outs = []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "4")):
        out = tmp_path / name
        assert main(["convexify", "--config", cfg, "--out", str(out),
                     "--threads", threads]) == 0
        outs.append((out / "envelope.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_invalid_thread_count(tmp_path):
    cfg = write(tmp_path, BASE)
    assert main(["convexify", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--threads", "0"]) == 2
