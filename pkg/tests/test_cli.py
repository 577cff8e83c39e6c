from __future__ import annotations

import json
import sys

import pytest

from strsat.cli import main
from strsat.core import requirement_set_to_json, Requirement, RequirementSet, Polarity

EMAIL_R1_SMT = (
    '(and (str.contains s "@") (not (str.in.re s (re.++ (re.* re.allchar) '
    '(str.to.re "@") (re.* re.allchar) (str.to.re "@") (re.* re.allchar)))))'
)
EMAIL_R2_SMT = '(not (str.suffixof "." s))'
EMAIL_R3_SMT = (
    '(str.in.re s (re.++ (re.* re.allchar) (str.to.re "@") (re.* re.allchar) '
    '(str.to.re ".") (re.* re.allchar)))'
)


@pytest.fixture(autouse=True)
def pin_solver(monkeypatch):
    # pin the bundled solver so CLI behavior is environment-independent
    monkeypatch.setenv("STRSAT_SOLVER", f"{sys.executable} -m strsat.minisolve")


def _write_reqs(tmp_path, bits="000", label=None):
    reqs = []
    texts = {
        "email_r1": 'The system shall require an email address to contain exactly one "@" character.',
        "email_r2": 'The system shall require an email address not to end with a "." character.',
        "email_r3": 'The system shall require an email to contain at least one "." character after the "@" character.',
    }
    for bit, rid in zip(bits, texts):
        reqs.append(
            Requirement(
                id=rid,
                category="email",
                text=texts[rid],
                polarity=Polarity.NEGATED if bit == "1" else Polarity.POSITIVE,
            )
        )
    rs = RequirementSet(requirements=tuple(reqs), label=label)
    path = tmp_path / f"email_{bits}.json"
    path.write_text(json.dumps(requirement_set_to_json(rs)))
    return path


def _write_mock(tmp_path, name="mock.json"):
    script = {
        "rules": [
            {
                "kind": "checker_smt",
                "response": "```\n{}\n```\n```\n{}\n```\n```\n{}\n```".format(
                    EMAIL_R1_SMT, EMAIL_R2_SMT, EMAIL_R3_SMT
                ),
            },
            {
                "kind": "lvo",
                "contains": "] (must NOT hold)",
                "response": "ANSWER: UNSAT",
            },
            {"kind": "lvo", "response": 'ANSWER: "ab@cd.com"'},
        ]
    }
    path = tmp_path / name
    path.write_text(json.dumps(script))
    return path


def test_verify_sat_exit_zero(tmp_path, capsys):
    reqs = _write_reqs(tmp_path, "000")
    mock = _write_mock(tmp_path)
    code = main(
        ["verify", str(reqs), "--mode", "smt", "--seed-mock", str(mock), "--split", "nosplit"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "SAT" in out and "ab@cd.com" in out
    report = json.loads(reqs.with_suffix(".report.json").read_text())
    assert report["outcome"]["kind"] == "sat"
    assert report["llm_calls_used"] == 1


def test_verify_unsat_exit_one(tmp_path):
    reqs = _write_reqs(tmp_path, "011")
    mock = _write_mock(tmp_path)
    code = main(
        ["verify", str(reqs), "--mode", "smt", "--seed-mock", str(mock), "--split", "nosplit"]
    )
    assert code == 1


def test_verify_unknown_exit_two(tmp_path):
    reqs = _write_reqs(tmp_path, "000")
    mock = tmp_path / "bad.json"
    mock.write_text(json.dumps({"default": 'ANSWER: "definitely wrong"'}))
    gen = tmp_path / "gen.json"
    gen.write_text(
        json.dumps(
            {
                "rules": [
                    {"kind": "checker_smt", "response": f"```\n{EMAIL_R1_SMT}\n```"},
                    {"kind": "lvo", "response": 'ANSWER: "nope"'},
                ]
            }
        )
    )
    code = main(["verify", str(reqs), "--mode", "smt", "--seed-mock", str(gen),
                 "--budget", "2", "--trace"])
    assert code == 2


def test_verify_without_backend_is_operational_error(tmp_path, capsys):
    reqs = _write_reqs(tmp_path)
    code = main(["verify", str(reqs), "--mode", "smt"])
    assert code == 3
    assert "seed-mock" in capsys.readouterr().err


def test_verify_smt_mode_without_solver_suggests_script(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("STRSAT_SOLVER", "none")
    reqs = _write_reqs(tmp_path)
    mock = _write_mock(tmp_path)
    code = main(["verify", str(reqs), "--mode", "smt", "--seed-mock", str(mock)])
    assert code == 3
    assert "--mode script" in capsys.readouterr().err


def test_verify_uses_checker_cache(tmp_path, capsys):
    reqs = _write_reqs(tmp_path, "000")
    mock = _write_mock(tmp_path)
    args = ["verify", str(reqs), "--mode", "smt", "--seed-mock", str(mock), "--split", "nosplit"]
    assert main(args) == 0
    cached = list(tmp_path.glob("*.checkers-smt-*.json"))
    assert len(cached) == 1
    assert main(args) == 0  # second run loads the cache


def test_gen_checkers_writes_file_and_table(tmp_path, capsys):
    reqs = _write_reqs(tmp_path)
    mock = _write_mock(tmp_path)
    out = tmp_path / "checkers.json"
    code = main(
        ["gen-checkers", str(reqs), "--kind", "smt", "-o", str(out),
         "--seed-mock", str(mock), "--split", "nosplit"]
    )
    assert code == 0
    data = json.loads(out.read_text())
    assert len(data["checkers"]) == 3
    assert all(c["syntax_ok"] for c in data["checkers"])
    assert "0 unsound" in capsys.readouterr().out


def test_gen_checkers_unsound_exit_nonzero(tmp_path, capsys):
    reqs = _write_reqs(tmp_path)
    mock = tmp_path / "bad.json"
    mock.write_text(json.dumps({"default": "```\n(nonsense s\n```"}))
    out = tmp_path / "checkers.json"
    code = main(
        ["gen-checkers", str(reqs), "--kind", "smt", "-o", str(out),
         "--seed-mock", str(mock), "--split", "nosplit"]
    )
    assert code != 0
    assert "3 unsound" in capsys.readouterr().out


def test_check_string_against_seed_ground_truth(tmp_path, capsys):
    reqs = _write_reqs(tmp_path, "000")
    code = main(["check-string", str(reqs), "ab@cd.com"])
    assert code == 0
    out = capsys.readouterr().out
    assert "satisfied" in out
    code = main(["check-string", str(reqs), "ab@cd."])
    assert code == 1
    out = capsys.readouterr().out
    assert "email_r2" in out and "false" in out


def test_check_string_with_checker_file(tmp_path, capsys):
    reqs = _write_reqs(tmp_path)
    mock = _write_mock(tmp_path)
    out = tmp_path / "checkers.json"
    main(["gen-checkers", str(reqs), "--kind", "smt", "-o", str(out),
          "--seed-mock", str(mock), "--split", "nosplit"])
    code = main(["check-string", str(reqs), "", "--checkers", str(out)])
    assert code == 1  # empty string violates R1 and R3


def test_eval_command(tmp_path, capsys):
    matrix = tmp_path / "matrix.json"
    mock = _write_mock(tmp_path)
    matrix.write_text(
        json.dumps(
            {
                "approaches": [
                    {"name": "direct", "mode": "direct", "mock": str(mock)},
                    {
                        "name": "smt_vf",
                        "mode": "smt_only",
                        "level": "vf",
                        "budget": 5,
                        "mock": str(mock),
                    },
                ]
            }
        )
    )
    out = tmp_path / "reports"
    code = main(["eval", "seed", str(matrix), "-o", str(out)])
    assert code == 0
    assert (out / "metrics_direct.csv").exists()
    assert (out / "records_smt_vf.jsonl").exists()
    stdout = capsys.readouterr().out
    assert "GSR" in stdout


def test_eval_empty_matrix_rejected(tmp_path, capsys):
    matrix = tmp_path / "matrix.json"
    matrix.write_text(json.dumps({"approaches": []}))
    assert main(["eval", "seed", str(matrix)]) == 3


def test_eval_approaches_filter(tmp_path):
    matrix = tmp_path / "matrix.json"
    mock = _write_mock(tmp_path)
    matrix.write_text(
        json.dumps({"approaches": [{"name": "direct", "mode": "direct", "mock": str(mock)}]})
    )
    assert main(["eval", "seed", str(matrix), "--approaches", "nope"]) == 3
    assert main(["eval", "seed", str(matrix), "-o", str(tmp_path / "r"),
                 "--approaches", "direct"]) == 0


def test_eval_generated_checkers_with_ratio_table(tmp_path):
    # generate an imperfect smt checker file for the email category, then
    # pair a generated-checker approach with its ground-truth baseline
    reqs = _write_reqs(tmp_path)
    mock = _write_mock(tmp_path)
    gen_dir = tmp_path / "generated"
    gen_dir.mkdir()
    weak = tmp_path / "weak_mock.json"
    weak.write_text(
        json.dumps(
            {
                "rules": [
                    {
                        "kind": "checker_smt",
                        "response": "```\ntrue\n```\n```\n{}\n```\n```\n{}\n```".format(
                            EMAIL_R2_SMT, EMAIL_R3_SMT
                        ),
                    }
                ],
                "default": "ANSWER: UNSAT",
            }
        )
    )
    code = main(
        ["gen-checkers", str(reqs), "--kind", "smt", "-o", str(gen_dir / "email_smt.json"),
         "--seed-mock", str(weak), "--split", "nosplit"]
    )
    assert code == 0
    matrix = tmp_path / "matrix.json"
    matrix.write_text(
        json.dumps(
            {
                "approaches": [
                    {"name": "gt_vf", "mode": "smt_only", "level": "vf", "mock": str(mock)},
                    {
                        "name": "gen_vf",
                        "mode": "smt_only",
                        "level": "vf",
                        "mock": str(mock),
                        "checkers": str(gen_dir),
                    },
                ]
            }
        )
    )
    out = tmp_path / "reports"
    assert main(["eval", "seed", str(matrix), "-o", str(out)]) == 0
    assert (out / "ratios.csv").exists()
    rows = (out / "ratios.csv").read_text().splitlines()
    assert rows[0].startswith("approach,baseline,metric")
    assert any(r.startswith("gen_vf,gt_vf,") for r in rows[1:])


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "[ok]" in out and "FAIL" not in out


def test_unsound_generated_checkers_are_operational_error(tmp_path, capsys):
    reqs = _write_reqs(tmp_path, "000")
    mock = tmp_path / "bad.json"
    mock.write_text(json.dumps({"default": "```\n(nonsense s\n```"}))
    code = main(["verify", str(reqs), "--mode", "smt", "--seed-mock", str(mock),
                 "--split", "nosplit", "--no-cache"])
    assert code == 3
    assert "unsound" in capsys.readouterr().err


def test_missing_file_is_usage_error(tmp_path):
    assert main(["verify", str(tmp_path / "nope.json"), "--mode", "smt"]) == 3


def test_config_file_controls_defaults(tmp_path):
    reqs = _write_reqs(tmp_path, "000")
    mock = _write_mock(tmp_path)
    config = tmp_path / "strsat.toml"
    config.write_text(
        f"""
[llm]
backend = "mock"
mock_script = "{mock.name}"

[defaults]
mode = "smt"
level = "vf"

[budgets]
verify = 4
"""
    )
    code = main(["verify", str(reqs), "--config", str(config), "--split", "nosplit"])
    assert code == 0
