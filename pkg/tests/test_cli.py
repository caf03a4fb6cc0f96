"""Exit codes and printed output of the command line front door."""

import pytest

from lob.service.cli import main

COUNTER = """\
rule grow:
  when less-than(size(scope-entries("log")), 3)
  then put(7, "log")
"""

SOCIAL = """\
entity alice:
  behavior or:
    rule ack-alert:
      when present(aggregate(list("kind", "alert")), "space-team")
      then post(aggregate(list("kind", "ack")), "team")

entity bob:
  memory { "note" = "quiet" }

community team:
  member alice
  member bob

workspace board:
  source feed:
    record { "n" = 1 }
    record { "n" = 5 }
  filter sieve:
    keep greater-than(n: integer, 4)
  viewer panel
  wire feed -> sieve
  wire sieve -> panel

scenario:
  post bob team { "kind" = "alert" }
  round team
  propagate board
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, "utf-8")
    return str(p)


class TestValidate:
    def test_ok_files_exit_zero(self, tmp_path, capsys):
        path = write(tmp_path, "good.lob", COUNTER)
        assert main(["validate", path]) == 0
        assert f"{path}: ok" in capsys.readouterr().out

    def test_any_broken_file_exits_one(self, tmp_path, capsys):
        good = write(tmp_path, "good.lob", COUNTER)
        bad = write(tmp_path, "bad.lob", "rule r:\n  when add(1,\n")
        assert main(["validate", good, bad]) == 1
        out = capsys.readouterr().out
        assert f"{good}: ok" in out
        assert f"{bad}:" in out and ": error:" in out

    def test_unreadable_file_exits_two(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            main(["validate", str(tmp_path / "ghost.lob")])
        assert e.value.code == 2


class TestFmt:
    def test_prints_canonical_form(self, tmp_path, capsys):
        original = 'rule grow:\n  when equals(1,1)\n  then put(7,"log")\n'
        path = write(tmp_path, "p.lob", original)
        assert main(["fmt", path]) == 0
        out = capsys.readouterr().out
        assert 'put(7, "log")' in out
        # stdout mode leaves the file alone
        assert (tmp_path / "p.lob").read_text("utf-8") == original

    def test_write_is_idempotent(self, tmp_path):
        path = write(tmp_path, "p.lob", COUNTER)
        assert main(["fmt", "--write", path]) == 0
        once = (tmp_path / "p.lob").read_text("utf-8")
        assert main(["fmt", "--write", path]) == 0
        assert (tmp_path / "p.lob").read_text("utf-8") == once

    def test_invalid_program_exits_one(self, tmp_path, capsys):
        path = write(tmp_path, "bad.lob", "operator f(x integer) = x\n")
        with pytest.raises(SystemExit) as e:
            main(["fmt", path])
        assert e.value.code == 1
        assert f"{path}:1" in capsys.readouterr().err


class TestRun:
    def test_counter_reaches_quiescence(self, tmp_path, capsys):
        path = write(tmp_path, "grow.lob", COUNTER)
        assert main(["run", path]) == 0
        out = capsys.readouterr().out
        assert "fired grow (iteration 0): log e1" in out
        assert "log e3 = 7" in out
        assert "quiescent after 3 firings" in out

    def test_iteration_cap_exits_three(self, tmp_path, capsys):
        path = write(tmp_path, "grow.lob", COUNTER)
        assert main(["run", path, "--max-iterations", "2"]) == 3
        assert "still eligible after 2 firings" in capsys.readouterr().err

    def test_cap_falls_back_to_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LOB_MAX_ITERATIONS", "2")
        path = write(tmp_path, "grow.lob", COUNTER)
        assert main(["run", path]) == 3

    def test_no_controls_is_fine(self, tmp_path, capsys):
        path = write(tmp_path, "quiet.lob", "operand limit = 3\n")
        assert main(["run", path]) == 0
        assert "nothing to run" in capsys.readouterr().out


class TestScenario:
    def test_declared_steps_print_a_transcript(self, tmp_path, capsys):
        path = write(tmp_path, "social.lob", SOCIAL)
        assert main(["scenario", path]) == 0
        out = capsys.readouterr().out
        assert "post bob -> team" in out
        assert "round team: alice fired" in out
        assert "propagate board" in out
        assert "team f-bob-1 (bob): kind='alert'" in out
        assert "team f-alice-1 (alice): kind='ack'" in out
        assert "board panel: 1 rows" in out

    def test_non_member_post_exits_three(self, tmp_path, capsys):
        # mallory is declared but never joins the community
        text = 'entity mallory:\n  memory { "m" = 1 }\n\n' + SOCIAL
        text = text.replace("post bob team", "post mallory team")
        path = write(tmp_path, "social.lob", text)
        assert main(["scenario", path]) == 3
        assert "error:" in capsys.readouterr().err

    def test_no_scenario_is_fine(self, tmp_path, capsys):
        path = write(tmp_path, "quiet.lob", COUNTER)
        assert main(["scenario", path]) == 0
        assert "nothing to do" in capsys.readouterr().out


class TestServe:
    def test_unusable_store_path_exits_two(self, tmp_path, capsys):
        flat = tmp_path / "flat"
        flat.write_text("x")
        assert main(["serve", "--store", str(flat)]) == 2
        assert "error:" in capsys.readouterr().err
