"""Command line driver behaviour and exit codes."""

import pathlib

import pytest

from fp2trs import cli, trs_io

from conftest import PROGRAMS

REV = str(PROGRAMS / "rev.fp")


def test_compile_to_file(tmp_path, capsys):
    out = tmp_path / "rev.trs"
    code = cli.main(["compile", REV, "-o", str(out)])
    assert code == 0
    text = out.read_text()
    assert "(RULES" in text
    parsed = trs_io.parse_trs(text)
    assert len(parsed.rules) == 6


def test_compile_stdout_deterministic(capsys):
    assert cli.main(["compile", REV]) == 0
    first = capsys.readouterr().out
    assert cli.main(["compile", REV]) == 0
    second = capsys.readouterr().out
    assert first == second


def test_compile_dump_stage(capsys):
    code = cli.main(["compile", REV, "--dump", "defunctionalized", "--format", "applicative_trs"])
    assert code == 0
    out = capsys.readouterr().out
    assert "== defunctionalized ==" in out
    assert "rev @ l" in out


def test_compile_dump_grammar(capsys):
    code = cli.main(["compile", REV, "--dump", "grammar"])
    assert code == 0
    out = capsys.readouterr().out
    assert "S -> main(*)" in out


def test_compile_list_stages(capsys):
    assert cli.main(["compile", REV, "--list-stages"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "defunctionalized"
    assert out[-1] == "final"


def test_compile_single_pass(capsys):
    assert cli.main(["compile", REV, "--pass", "inline(match)"]) == 0
    out = capsys.readouterr().out
    assert "main:" in out


def test_compile_custom_strategy(capsys):
    code = cli.main(
        ["compile", REV, "--strategy", "custom:exhaustive inline(match)",
         "--format", "applicative_trs"]
    )
    assert code == 0


def test_eval_counts_steps(capsys):
    code = cli.main(["eval", REV, "--input", "1::2::[]", "--count-steps"])
    assert code == 0
    out = capsys.readouterr().out
    assert "S(S(0))::S(0)::[]" in out
    assert "steps: 20" in out  # hand-checkable on the two-element list


def test_eval_at_final_stage(capsys):
    code = cli.main(["eval", REV, "--input", "1::2::[]", "--stage", "final", "--count-steps"])
    assert code == 0
    out = capsys.readouterr().out
    assert "S(S(0))::S(0)::[]" in out


def test_eval_pcf_oracle_agrees(capsys):
    assert cli.main(["eval", REV, "--input", "1::[]", "--count-steps"]) == 0
    atrs_out = capsys.readouterr().out
    assert cli.main(["eval", REV, "--input", "1::[]", "--count-steps", "--oracle", "pcf"]) == 0
    pcf_out = capsys.readouterr().out
    assert atrs_out == pcf_out


def test_check_passes(capsys):
    code = cli.main(["check", REV, "--inputs", "lists:0..4"])
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5
    assert "FAIL" not in out


def test_missing_file_is_user_error(capsys):
    assert cli.main(["compile", "no-such-file.fp"]) == 1


def test_parse_error_is_user_error(tmp_path, capsys):
    bad = tmp_path / "bad.fp"
    bad.write_text("let main x = ;;")
    assert cli.main(["compile", str(bad)]) == 1


def test_classic_format_on_applicative_is_user_error(capsys):
    assert cli.main(["compile", REV, "--strategy", "none", "--format", "classic_trs"]) == 1


def test_head_variable_error_is_pipeline_error(tmp_path, capsys):
    # uncurrying the raw defunctionalized system hits head variables
    assert cli.main(["compile", REV, "--strategy", "custom:uncurry"]) == 2


def test_bad_input_term(capsys):
    assert cli.main(["eval", REV, "--input", "Bogus(1)"]) == 1
