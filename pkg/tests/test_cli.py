import json

import pytest

from stepnet import cli, scenario
from stepnet.cli import main
from stepnet.topology import StepSpec


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", "--scenario", "uncongested", "--duration", "2", "--out", str(out)]) == 0
    for name in ("series.csv", "summary.json", "effective-scenario"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["duration_s"] == 2.0
    assert "conservation: ok" in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path):
    args = ["run", "--scenario", "overload", "--duration", "5", "--qdisc", "wfq"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("series.csv", "summary.json", "effective-scenario"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_set_overrides(tmp_path):
    out = tmp_path / "o"
    main(["run", "--scenario", "uncongested", "--set", "run.duration=1",
          "--set", "voip.0.payload_bytes=80", "--out", str(out)])
    assert "payload_bytes = 80" in (out / "effective-scenario").read_text()


def test_compare_exit_codes(tmp_path, monkeypatch, capsys):
    args = ["compare", "--scenario", "uncongested", "--duration", "2", "--out", str(tmp_path)]
    assert main(args) == 0
    assert (tmp_path / "report.json").exists()
    out = capsys.readouterr().out
    assert "drops_ordering: PASS (tie)" in out

    real = scenario.compare_disciplines

    def failing(*a, **kw):
        report = real(*a, **kw)
        report.verdicts[0].passed = False
        return report

    monkeypatch.setattr(cli, "compare_disciplines", failing)
    assert main(args) == 1
    assert "FAIL" in capsys.readouterr().out


def test_topo_dump(capsys):
    assert main(["topo", "--scenario", "overload"]) == 0
    lines = capsys.readouterr().out.splitlines()
    s = StepSpec(steps=4, hosts_per_step=2)
    assert len(lines) == 2 * (s.steps - 1) + 2 * s.steps * s.hosts_per_step
    assert lines[0].split() == ["r0", "r1", "2000000", "5000", "0.0"]


@pytest.mark.parametrize("argv", [
    ["run", "--scenario", "no-such-file.scn"],
    ["run", "--scenario", "overload", "--set", "voip.0.colour=red"],
    ["run", "--scenario", "overload", "--set", "topology.steps=0"],
    ["run", "--scenario", "overload", "--set", "nonsense"],
])
def test_errors_exit_2(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == 2
    assert "stepnet: error:" in capsys.readouterr().err
