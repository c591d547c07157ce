import logging

import pytest

import main
from simulation.errors import ConsistencyError
from simulation.harness import SweepRunner

QUICK = ["--pt-db", "10", "--trials", "20"]


@pytest.fixture(autouse=True)
def isolated_logging(monkeypatch):
    monkeypatch.setenv("LOG_FILE", "")
    monkeypatch.setenv("LOG_LEVEL", "WARNING")
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def test_main_writes_csv_to_stdout(capsys):
    assert main.main(QUICK) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("# tool = relay-ofdm-im")
    assert "bler" in captured.out


def test_main_writes_csv_file(tmp_path):
    out = tmp_path / "p2p.csv"
    assert main.main(QUICK + ["--out", str(out)]) == 0
    assert "throughput_bpcu" in out.read_text()


@pytest.mark.parametrize("argv", [
    ["--structure", "serial", "--rs", "bulk"],
    ["--not-a-flag"],
    ["--pt-db", "x"],
])
def test_main_usage_errors_exit_2(argv, capsys):
    assert main.main(argv) == 2
    assert "Usage error" in capsys.readouterr().err


def test_main_unwritable_output_exits_4(tmp_path):
    assert main.main(QUICK + ["--out", str(tmp_path / "missing" / "out.csv")]) == 4


def test_main_simulation_failure_exits_3(monkeypatch, capsys):
    def fail(self, spec):
        raise ConsistencyError("accumulators diverged")

    monkeypatch.setattr(SweepRunner, "run", fail)
    assert main.main(QUICK) == 3
    assert "accumulators diverged" in capsys.readouterr().err


def test_main_interrupt_exits_130(monkeypatch):
    def interrupt(self, spec):
        raise KeyboardInterrupt

    monkeypatch.setattr(SweepRunner, "run", interrupt)
    assert main.main(QUICK) == 130


def test_setup_logging_without_file_uses_console_only():
    main.setup_logging("DEBUG", None)
    root = logging.getLogger()
    assert root.level == logging.DEBUG
    assert len(root.handlers) == 1
    assert isinstance(root.handlers[0], logging.StreamHandler)
