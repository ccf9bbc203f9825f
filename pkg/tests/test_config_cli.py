import os

import numpy as np
import pytest

from bidomain.cli import load_state_csv, main, write_state_csv
from bidomain.config import ConfigError, echo_config, parse_config_text
from bidomain.dynamics import ModalState
from bidomain.reporting import CheckLog, fmt_float, read_csv, write_csv

MINIMAL = """
[grid]
dimension = 1
extents = 1.0
counts = 33

[model]
variant = fitzhugh_nagumo
a = 0.1
eps = 0.01

[forcing]
period = 10.0
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config_text(MINIMAL)
    assert cfg.grid.counts == (33,)
    assert cfg.conductivity.sigma_i == 1.0
    assert cfg.solver.k == 16
    assert cfg.solver.scheme == "dopri5"
    assert cfg.output.directory == "out"


def test_range_error_names_key_and_line():
    text = MINIMAL.replace("a = 0.1", "a = 1.5")
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert "model.a" in str(exc.value)
    assert "line" in str(exc.value)


def test_aliev_panfilov_threshold_at_parse_time():
    text = MINIMAL.replace(
        "variant = fitzhugh_nagumo",
        "variant = aliev_panfilov\nb = 1.0\nk = 2.0\nd = 0.5",
    )
    with pytest.raises(ConfigError, match="model.b"):
        parse_config_text(text)


def test_unknown_key_is_hard_error():
    with pytest.raises(ConfigError, match="grid.spacing"):
        parse_config_text(MINIMAL + "\n[grid]\nspacing = 0.1\n")


def test_unknown_section_is_hard_error():
    with pytest.raises(ConfigError, match="mesh"):
        parse_config_text(MINIMAL + "\n[mesh]\nn = 4\n")


def test_duplicate_key_rejected():
    text = MINIMAL.replace("a = 0.1", "a = 0.1\na = 0.2")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text(text)


def test_type_error_reported():
    text = MINIMAL.replace("counts = 33", "counts = thirty")
    with pytest.raises(ConfigError, match="grid.counts"):
        parse_config_text(text)


def test_missing_file_reported(tmp_path):
    text = MINIMAL + "\n[conductivity]\ncsv_i = nowhere.csv\n"
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config_text(text, base_dir=str(tmp_path))


def test_echo_round_trip():
    cfg = parse_config_text(MINIMAL)
    again = parse_config_text(echo_config(cfg))
    assert again == cfg


def test_fmt_float_round_trip():
    values = [1.0 / 3.0, 1e-300, 123456.789, -0.1]
    for v in values:
        assert float(fmt_float(v)) == v


def test_csv_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    rows = [(1, 0.1, -2.5e-8), (2, 1.0 / 3.0, 7.0)]
    write_csv(path, ["j", "x", "y"], rows)
    header, data = read_csv(path)
    assert header == ["j", "x", "y"]
    np.testing.assert_array_equal(data[:, 1], [0.1, 1.0 / 3.0])


def test_state_csv_round_trip(tmp_path):
    path = tmp_path / "state.csv"
    state = ModalState(np.array([0.1, -0.2, 1.0 / 3.0]), np.array([4.0, 5.0, 6.0]))
    write_state_csv(path, state)
    loaded = load_state_csv(path, 3)
    np.testing.assert_array_equal(loaded.alpha, state.alpha)
    np.testing.assert_array_equal(loaded.beta, state.beta)
    with pytest.raises(ConfigError, match="modes"):
        load_state_csv(path, 5)


def test_check_log_rejects_duplicates():
    log = CheckLog()
    log.add("a", True)
    with pytest.raises(ValueError, match="duplicate"):
        log.add("a", False)
    assert log.all_passed


@pytest.fixture(scope="module")
def cli_config(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    cfg = base / "run.ini"
    cfg.write_text(MINIMAL + "\n[solver]\nk = 8\ntol = 1e-7\nn_samples = 65\n")
    return str(cfg)


def test_cli_eigens(cli_config, tmp_path):
    out = str(tmp_path / "eig")
    assert main(["eigens", "--config", cli_config, "--out", out, "--quiet"]) == 0
    header, data = read_csv(os.path.join(out, "eigens.csv"))
    assert header == ["j", "lambda"]
    assert data[0, 1] <= 1e-8
    assert os.path.exists(os.path.join(out, "report.txt"))


def test_cli_eigens_deterministic(cli_config, tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    main(["eigens", "--config", cli_config, "--out", out1, "--quiet"])
    main(["eigens", "--config", cli_config, "--out", out2, "--quiet"])
    with open(os.path.join(out1, "eigens.csv"), "rb") as f1, \
         open(os.path.join(out2, "eigens.csv"), "rb") as f2:
        assert f1.read() == f2.read()


def test_cli_check_assumptions(cli_config, tmp_path):
    out = str(tmp_path / "chk")
    assert main(["check-assumptions", "--config", cli_config, "--out", out,
                 "--quiet"]) == 0
    with open(os.path.join(out, "certificate.csv")) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "name,value"
    values = dict(line.split(",") for line in lines[1:])
    assert float(values["C1"]) == 0.5
    assert float(values["r"]) == 1.0


def test_cli_report_echo_reparses(cli_config, tmp_path):
    out = str(tmp_path / "echo")
    main(["eigens", "--config", cli_config, "--out", out, "--quiet"])
    with open(os.path.join(out, "report.txt")) as fh:
        text = fh.read()
    echo = text.split("[config-echo]\n", 1)[1]
    cfg = parse_config_text(echo)
    assert cfg.solver.k == 8


def test_cli_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text(MINIMAL.replace("a = 0.1", "a = 2.0"))
    assert main(["eigens", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_cli_solve_and_verify_pipeline(cli_config, tmp_path):
    out = str(tmp_path / "per")
    assert main(["solve-periodic", "--config", cli_config, "--out", out,
                 "--quiet"]) == 0
    for name in ("residuals.csv", "fixed_point.csv", "orbit.csv"):
        assert os.path.exists(os.path.join(out, name))
    out2 = str(tmp_path / "ve")
    assert main(["verify-energy", "--config", cli_config, "--out", out2,
                 "--state", os.path.join(out, "fixed_point.csv"), "--quiet"]) == 0
    header, data = read_csv(os.path.join(out2, "dissipation.csv"))
    assert np.all(data[:, 1] >= 0.0)


def test_cli_solve_ivp(cli_config, tmp_path):
    out = str(tmp_path / "ivp")
    assert main(["solve-ivp", "--config", cli_config, "--out", out, "--quiet"]) == 0
    header, data = read_csv(os.path.join(out, "trajectory.csv"))
    assert header[0] == "t" and header[-1] == "slack"
    assert data.shape[0] == 65


def test_cli_emit_plots(cli_config, tmp_path):
    out = str(tmp_path / "plots")
    main(["solve-periodic", "--config", cli_config, "--out", out, "--quiet"])
    assert main(["emit-plots", "--config", cli_config, "--out", out, "--quiet"]) == 0
    assert os.path.exists(os.path.join(out, "residual_history.svg"))
    assert os.path.exists(os.path.join(out, "u_probes.svg"))
