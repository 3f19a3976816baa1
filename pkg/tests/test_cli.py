"""Golden-file tests for every subcommand.

Run this file as a script to rewrite the golden outputs after an
intentional format change.
"""

import json
import pathlib
import subprocess
import sys

import pytest

from ditrace import cli

ROOT = pathlib.Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"
M = ROOT / "manifests"

# name, argv, exit code, stdin
CASES = [
    ("parse_wire.json", ["parse", "-e", "pref*[a?;b!]"], 0, None),
    ("parse_celement.txt", ["parse", "--format", "text", "-e", "pref*[a?||b?;c!]"], 0, None),
    ("check_di_wire.json", ["check-di", "-e", "pref*[a?;b!]"], 0, None),
    ("check_di_and.json", ["check-di", str(GOLDEN / "and_gate.json")], 2, None),
    ("classify_sequencer.json", ["classify", "-"], 0, "pref*[a?;p!] || pref*[b?;q!] || pref*[n?;(p!|q!)]"),
    ("decompose_token_ring.json", ["decompose", str(M / "token_ring.json")], 0, None),
    ("decompose_strict.json", ["decompose", "--strict-forks", str(M / "token_ring.json")], 2, None),
    ("simulate_qelement.jsonl", ["simulate", str(M / "qelement.json"), "--seed", "0", "--horizon", "40"], 0, None),
    ("simulate_skewed.jsonl", ["simulate", str(M / "qelement_skewed.json"), "--seed", "0", "--horizon", "200"], 2, None),
    ("graph_qelement.dot", ["graph", str(GOLDEN / "simulate_qelement.jsonl")], 0, None),
    ("graph_qelement.json", ["graph", "--format", "json", str(GOLDEN / "simulate_qelement.jsonl")], 0, None),
    ("graph_skewed_order.dot",
     ["graph", "--constraints", str(M / "qelement_constraints.json"), str(GOLDEN / "simulate_skewed_log.jsonl")], 2, None),
    ("simulate_skewed_log.jsonl",
     ["simulate", str(M / "qelement_skewed.json"), "--seed", "1", "--horizon", "100", "--on-interference", "log"], 2, None),
    ("primitives_list.txt", ["primitives"], 0, None),
    ("primitives_merge.json", ["primitives", "merge"], 0, None),
    ("primitives_token_ring_manifest.json", ["primitives", "token-ring-manifest"], 0, None),
]


def run(argv, stdin=None):
    proc = subprocess.run([sys.executable, "-m", "ditrace.cli", *argv], input=stdin, capture_output=True,
                          text=True, encoding="utf-8", cwd=ROOT)
    return proc.returncode, proc.stdout, proc.stderr


@pytest.mark.parametrize("name,argv,code,stdin", CASES, ids=[c[0] for c in CASES])
def test_golden(name, argv, code, stdin):
    got_code, out, _ = run(argv, stdin)
    assert got_code == code
    assert out == (GOLDEN / name).read_text(encoding="utf-8")


@pytest.mark.parametrize("argv", [
    ["simulate", str(M / "token_ring3.json"), "--seed", "4", "--horizon", "300"],
    ["check-di", "-e", "pref*[a?;b!]"],
    ["graph", str(GOLDEN / "simulate_qelement.jsonl")],
])
def test_repeat_runs_are_byte_identical(argv):
    assert run(argv) == run(argv)


def test_reports_parse():
    doc = json.loads((GOLDEN / "check_di_wire.json").read_text(encoding="utf-8"))
    assert doc["di"] is True
    doc = json.loads((GOLDEN / "decompose_token_ring.json").read_text(encoding="utf-8"))
    assert all(doc[c]["holds"] for c in ("closed", "output_interference", "computation_interference", "boundary"))
    last = (GOLDEN / "simulate_skewed.jsonl").read_text(encoding="utf-8").splitlines()[-1]
    (r,) = json.loads(last)["interference"]
    assert r["kind"] == "computation" and r["location"] == "B"


def test_builtin_netlists_match_the_shipped_manifests(capsys):
    assert cli.main(["primitives", "q-element"]) == 0
    assert json.loads(capsys.readouterr().out) == json.loads((M / "qelement.json").read_text(encoding="utf-8"))
    assert cli.main(["primitives", "q-element", "--y-skew", "12"]) == 0
    assert json.loads(capsys.readouterr().out) == json.loads((M / "qelement_skewed.json").read_text(encoding="utf-8"))
    assert cli.main(["primitives", "token-ring", "--n", "3"]) == 0
    assert json.loads(capsys.readouterr().out) == json.loads((M / "token_ring3.json").read_text(encoding="utf-8"))


@pytest.mark.parametrize("argv", [
    ["parse", "-e", "pref*[a?;"],
    ["parse"],
    ["check-di", "no/such/file.ts"],
    ["decompose", str(M / "qelement.json")],
    ["primitives", "flip-flop"],
    ["parse", "-e", "pref*[a?] || pref*[a!]"],
])
def test_errors_exit_one(argv, capsys):
    assert cli.main(argv) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_bad_arguments_exit_one():
    code, _, err = run(["simulate", str(M / "qelement.json")])  # no seed
    assert code == 1 and "--seed" in err
    code, _, _ = run([])
    assert code == 1
    code, _, _ = run(["simulate", str(M / "qelement.json"), "--seed", "x"])
    assert code == 1


def test_output_file(tmp_path):
    out = tmp_path / "wire.json"
    assert cli.main(["check-di", "-e", "pref*[a?;b!]", "-o", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == (GOLDEN / "check_di_wire.json").read_text(encoding="utf-8")


def test_verbose_goes_to_stderr(capsys):
    assert cli.main(["decompose", "-v", str(M / "token_ring.json")]) == 0
    cap = capsys.readouterr()
    assert "holds" in cap.err and json.loads(cap.out)["first_failure"] is None


def _regenerate():
    GOLDEN.mkdir(exist_ok=True)
    # graph cases read simulation goldens, so write simulations first
    for name, argv, code, stdin in sorted(CASES, key=lambda c: c[1][0] == "graph"):
        got, out, err = run(argv, stdin)
        if got != code:
            raise SystemExit(f"{name}: exit {got}, expected {code}\n{err}")
        (GOLDEN / name).write_text(out, encoding="utf-8")
        print("wrote", name)


if __name__ == "__main__":
    _regenerate()
