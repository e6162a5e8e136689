import json

import pydot
import pytest

from mtc.cli import main
from mtc.fixtures import FORK_HISTORY
from mtc.history import dump_history


@pytest.fixture
def fx(tmp_path):
    out = tmp_path / "fx"
    assert main(["fixtures", "--emit-all", str(out)]) == 0
    return out


def test_emit_all_writes_sixteen_files(fx):
    files = sorted(p.name for p in fx.iterdir())
    assert len([f for f in files if not f.endswith(".lwt.jsonl")]) == 14
    assert "lwt_linearizable.lwt.jsonl" in files
    assert files[0] == "01_thin_air_read.jsonl"


def test_fixture_files_are_byte_stable(tmp_path, fx):
    main(["fixtures", "--emit-all", str(tmp_path / "again")])
    for p in fx.iterdir():
        assert (tmp_path / "again" / p.name).read_bytes() == p.read_bytes()


def test_check_ser_on_fork_shape(tmp_path, capsys):
    path = tmp_path / "fork.jsonl"
    dump_history(FORK_HISTORY, path)
    assert main(["check", "--level", "ser", str(path)]) == 1
    out = json.loads(capsys.readouterr().out)
    assert out["ok"] is False
    assert out["counterexample"]["type"] == "cycle"
    assert {e["label"] for e in out["counterexample"]["edges"]} == {"RW(x)"}


def test_check_si_on_fork_shape_reports_fork(tmp_path, capsys):
    path = tmp_path / "fork.jsonl"
    dump_history(FORK_HISTORY, path)
    assert main(["check", "--level", "si", str(path)]) == 1
    assert capsys.readouterr().out == (
        '{"level":"si","ok":false,"counterexample":{"type":"fork","writer":1,"readers":[2,3],"key":"x"}}\n'
    )


def test_run_then_check(tmp_path, capsys):
    path = tmp_path / "good.jsonl"
    assert main(["run", "--sessions", "4", "--txns", "200", "--seed", "2", "-o", str(path)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["committed"] > 0
    assert main(["check", "--level", "si", str(path)]) == 0
    assert capsys.readouterr().out == '{"level":"si","ok":true}\n'


def test_run_from_workload_file(tmp_path):
    wl = tmp_path / "wl.jsonl"
    assert main(["generate", "--txns", "50", "--seed", "4", "-o", str(wl)]) == 0
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["run", "--workload", str(wl), "--seed", "4", "-o", str(a)])
    main(["run", "--txns", "50", "--seed", "4", "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_env_seed_overrides_flag(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("MTC_SEED", "9")
    main(["generate", "--seed", "1", "-o", str(a)])
    monkeypatch.delenv("MTC_SEED")
    main(["generate", "--seed", "9", "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_bad_env_seed(monkeypatch, capsys):
    monkeypatch.setenv("MTC_SEED", "x")
    assert main(["generate"]) == 2


def test_screen(fx, capsys):
    assert main(["screen", str(fx / "01_thin_air_read.jsonl")]) == 1
    rec = json.loads(capsys.readouterr().out)
    assert rec["kind"] == "ThinAirRead"
    assert main(["screen", str(fx / "14_write_skew.jsonl")]) == 0
    assert capsys.readouterr().out == ""


def test_write_skew_levels(fx):
    path = str(fx / "14_write_skew.jsonl")
    assert main(["check", "--level", "ser", path]) == 1
    assert main(["check", "--level", "si", path]) == 0


def test_lin(fx, capsys):
    assert main(["check", "--level", "lin", str(fx / "lwt_linearizable.lwt.jsonl")]) == 0
    assert main(["check", "--level", "lin", str(fx / "lwt_not_linearizable.lwt.jsonl")]) == 1


def test_dot_output_parses(fx, capsys):
    files = [str(p) for p in sorted(fx.glob("*.jsonl")) if not p.name.endswith(".lwt.jsonl")]
    assert main(["check", "--level", "ser", "--format", "dot", *files]) == 1
    graphs = pydot.graph_from_dot_data(capsys.readouterr().out)
    assert len(graphs) == 14
    main(["check", "--level", "lin", "--format", "dot", str(fx / "lwt_not_linearizable.lwt.jsonl")])
    assert pydot.graph_from_dot_data(capsys.readouterr().out)


def test_text_format(fx, capsys):
    main(["check", "--level", "si", "--format", "text", str(fx / "13_lost_update.jsonl")])
    assert capsys.readouterr().out == "si: VIOLATION fork writer=T0 readers=T1,T2 key=x\n"


def test_jobs_match_sequential(fx, capsys):
    files = [str(p) for p in sorted(fx.glob("*.jsonl")) if not p.name.endswith(".lwt.jsonl")]
    rc1 = main(["check", "--level", "si", *files])
    seq = capsys.readouterr().out
    rc2 = main(["check", "--level", "si", "--jobs", "2", *files])
    assert capsys.readouterr().out == seq
    assert rc1 == rc2 == 1
    assert all(json.loads(line)["file"] for line in seq.splitlines())


def test_oracle(fx, capsys):
    assert main(["oracle", "--level", "si", str(fx / "14_write_skew.jsonl")]) == 0
    assert main(["oracle", "--level", "ser", str(fx / "14_write_skew.jsonl")]) == 1
    assert main(["oracle", "--level", "lin", str(fx / "lwt_linearizable.lwt.jsonl")]) == 0
    capsys.readouterr()


def test_oracle_refusal_exits_2(tmp_path, capsys):
    path = tmp_path / "big.jsonl"
    assert main(["run", "--txns", "30", "-o", str(path)]) == 0
    assert main(["oracle", "--level", "ser", str(path)]) == 2
    assert "refused" in capsys.readouterr().err


class TestInputErrors:
    def test_unknown_flag(self, capsys):
        assert main(["check", "--level", "si", "--frobnicate", "x"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_missing_subcommand(self, capsys):
        assert main([]) == 2

    def test_malformed_file(self, tmp_path, capsys):
        p = tmp_path / "bad.jsonl"
        p.write_text('{"id":1,"session":"s","ops":[]}\n{oops\n')
        assert main(["check", "--level", "ser", str(p)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_file(self, capsys):
        assert main(["check", "--level", "ser", "/nonexistent.jsonl"]) == 2

    def test_not_mt(self, tmp_path, capsys):
        p = tmp_path / "blind.jsonl"
        p.write_text('{"id":1,"session":"s","ops":[{"t":"w","k":"x","v":1}]}\n')
        assert main(["screen", str(p)]) == 2

    def test_sser_without_timestamps(self, tmp_path, capsys):
        p = tmp_path / "nots.jsonl"
        p.write_text('{"id":1,"session":"s","ops":[{"t":"r","k":"x","v":0}]}\n')
        assert main(["check", "--level", "sser", str(p)]) == 2
        assert main(["check", "--level", "ser", str(p)]) == 0
