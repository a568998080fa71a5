import io
import json
import random
import re
from contextlib import redirect_stderr, redirect_stdout

import pytest

from desdiag import cli
from desdiag.automata import Alphabet, enumerate_strings, fault_split, parallel_compose, project
from desdiag.diagnosability import build_verifier
from desdiag.fsm_io import FsmSyntaxError, load_fsm, parse_fsm, serialize_fsm, to_dot

from randsys import random_automaton

G1_TEXT = """\
name: g1
events:
  a u
  b u
  c o
  f u f
states:
  0 init
  1
  2
  3
trans:
  0 a 1
  0 c 0
  0 f 2
  1 c 1
  2 b 3
  3 c 3
"""


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        try:
            code = cli.main([str(a) for a in argv])
        except SystemExit as exc:
            code = exc.code
    return code, out.getvalue(), err.getvalue()


# parsing and serialization

def test_fixture_is_canonical(fixtures_dir):
    text = (fixtures_dir / "g1.fsm").read_text()
    assert text == G1_TEXT
    a = parse_fsm(text)
    assert a.n_states == 4 and len(a.transitions) == 6
    assert serialize_fsm(a) == text


def test_all_fixtures_round_trip(fixtures_dir):
    for path in sorted(fixtures_dir.glob("*.fsm")):
        text = path.read_text()
        assert serialize_fsm(parse_fsm(text)) == text, path.name


def test_comments_and_default_flags():
    a = parse_fsm("# model\nevents:\n  x\n  y o\nstates:\n  s init marked\n"
                  "trans:\n  s x s\n")
    assert not a.alphabet["x"].observable and a.alphabet["y"].observable
    assert a.marked == frozenset({0})
    assert "  x u\n" in serialize_fsm(a) and "  s init marked\n" in serialize_fsm(a)


def test_load_uses_file_stem(tmp_path):
    path = tmp_path / "plant.fsm"
    path.write_text("events:\n  a o\nstates:\n  0 init\ntrans:\n  0 a 0\n")
    assert load_fsm(path).name == "plant"


def test_random_round_trip():
    for seed in range(60):
        rng = random.Random(seed)
        a = random_automaton(rng, Alphabet.of("a b:o c:o f:f"), rng.randint(1, 4))
        again = parse_fsm(serialize_fsm(a))
        assert serialize_fsm(again) == serialize_fsm(a)
        assert enumerate_strings(again, 5) == enumerate_strings(a, 5)


def test_derived_automata_serialize():
    g1 = parse_fsm(G1_TEXT)
    for a in (parallel_compose(g1, g1), project(g1, {"c"}), fault_split(g1).automaton):
        assert serialize_fsm(parse_fsm(serialize_fsm(a))) == serialize_fsm(a)


@pytest.mark.parametrize("text, message, line", [
    ("events:\n  a o\nstates:\n  0 init\n  1 init\n", "multiple init states: 0 (line 4) and 1",
     5),
    ("events:\n  f o f\nstates:\n  0 init\n", "fault events must be unobservable", 2),
    ("events:\n  a o u\nstates:\n  0 init\n", "mutually exclusive", 2),
    ("events:\n  a\n  a\nstates:\n  0 init\n", "duplicate event 'a'", 3),
    ("events:\n  a\nstates:\n  0 init\n  0\n", "duplicate state '0'", 5),
    ("events:\n  a\nstates:\n  0 init\ntrans:\n  0 b 0\n", "undeclared event 'b'", 6),
    ("events:\n  a\nstates:\n  0 init\ntrans:\n  0 a 9\n", "undeclared state '9'", 6),
    ("events:\n  a\nstates:\n  0 init\n  1\ntrans:\n  0 a 0\n  0 a 1\n",
     "nondeterministic at (0,a)", 8),
    ("events:\n  a\nstates:\n  0\n", "no init state", 4),
    ("events:\n  a x\nstates:\n  0 init\n", "unknown event flag 'x'", 2),
    ("bogus:\n", "unknown header", 1),
    ("  a\n", "outside of a section", 1),
    ("events:\n  a\nstates:\n  0 init\ntrans:\n  0 a\n", "transition needs", 6),
])
def test_parse_errors(text, message, line):
    with pytest.raises(FsmSyntaxError) as info:
        parse_fsm(text, "m.fsm")
    assert message in info.value.message
    assert info.value.line == line
    assert str(info.value).startswith(f"m.fsm:{line}:")


def test_error_column_points_at_token():
    with pytest.raises(FsmSyntaxError) as info:
        parse_fsm("events:\n  a\nstates:\n  0 init\ntrans:\n  0 zz 0\n")
    assert info.value.column == 5


# DOT

def test_dot_of_g2(g2):
    dot = to_dot(g2)
    nodes = re.findall(r'^  "([^"]+)" \[', dot, re.M)
    edges = re.findall(r"->", dot)
    assert len(nodes) == 3 and len(edges) == 4
    assert '"0" [shape=circle, style=bold]' in dot


def test_dot_of_g1_verifier(g1):
    dot = to_dot(build_verifier(fault_split(g1), {"c"}))
    nodes = re.findall(r'^  "([^"]+)"( \[[^]]*\])?;$', dot, re.M)
    assert len(nodes) == 10
    attrs = dict(nodes)
    assert "color=red" in attrs["1N;3F"]
    assert "color=red" not in attrs["1N;1N"]
    assert '"1N;3F" -> "1N;3F" [label="c"];' in dot


def test_dot_is_stable(g1):
    v = build_verifier(fault_split(g1), {"c"})
    assert to_dot(v) == to_dot(build_verifier(fault_split(g1), {"c"}))


# command line

def test_check_local_reports_cycle(fixtures_dir):
    code, out, _ = run("check", "local", fixtures_dir / "g1.fsm")
    assert code == 1
    assert "indeterminate cycle: 1N;3F on c" in out


def test_check_virtual_exit_zero(fixtures_dir):
    code, out, _ = run("check", "virtual", fixtures_dir / "g1.fsm", fixtures_dir / "g2.fsm",
                       "--partition", "g1,g2")
    assert code == 0 and "result: diagnosable" in out


def test_check_modular_exit_one(fixtures_dir):
    code, _, _ = run("check", "modular", fixtures_dir / "g1.fsm", fixtures_dir / "g2.fsm")
    assert code == 1


def test_synthesize_text(fixtures_dir):
    code, out, _ = run("synthesize", fixtures_dir / "g1.fsm", fixtures_dir / "g2.fsm")
    assert code == 0
    assert "partition: {{g1,g2}}" in out
    assert "structural report g1 vs g2: recommend" in out
    assert "trigger: {b}  confirm: {c}" in out


def test_synthesize_exhaustive(fixtures_dir):
    code, out, _ = run("synthesize", fixtures_dir / "g1.fsm", fixtures_dir / "g2.fsm",
                       "--exhaustive", "--max-modules", "2")
    assert code == 0 and "strategy: exhaustive" in out


def test_json_schema(fixtures_dir):
    code, out, _ = run("check", "local", fixtures_dir / "g1.fsm", "--format", "json")
    doc = json.loads(out)
    assert code == 1
    assert set(doc) >= {"command", "verdicts", "witness", "partition", "reports"}
    assert doc["witness"]["cycle"] == ["c"]
    assert doc["verdicts"][0]["scope"] == {"kind": "local", "module": "g1", "block": ["g1"],
                                           "mask": ["c"]}


def test_analyze(fixtures_dir):
    code, out, _ = run("analyze", fixtures_dir / "g1.fsm", fixtures_dir / "g2.fsm",
                       "--format", "json")
    assert code == 0 and json.loads(out)["reports"][0]["verdict"] == "recommend"
    code, _, _ = run("analyze", fixtures_dir / "g1.fsm", fixtures_dir / "g2.fsm",
                     "--strict-lemma3")
    assert code == 1


def test_verifier_command(fixtures_dir, tmp_path):
    dot = tmp_path / "v.dot"
    code, out, _ = run("verifier", fixtures_dir / "g1.fsm", "--dot", dot)
    assert code == 1 and "10 states" in out
    assert dot.read_text().count("color=red") >= 1


def test_compose_and_project(fixtures_dir, tmp_path):
    comp, proj = tmp_path / "c.fsm", tmp_path / "p.fsm"
    assert run("compose", fixtures_dir / "g1.fsm", fixtures_dir / "g2.fsm", "-o", comp)[0] == 0
    assert load_fsm(comp).n_states == 5
    code, _, _ = run("project", comp, "--obs", "c,e", "-o", proj)
    assert code == 0 and load_fsm(proj).n_states == 2
    code, out, _ = run("verifier", comp, "--obs", "c,e")
    assert code == 0 and "no indeterminate cycle" in out


@pytest.mark.parametrize("argv", [
    ("check",),
    ("bogus",),
    ("check", "local", "missing.fsm"),
    ("check", "virtual", "FIX/g1.fsm", "FIX/g2.fsm", "--partition", "g1"),
    ("verifier", "FIX/g1.fsm", "--obs", "a"),
    ("synthesize", "FIX/g1.fsm", "FIX/g2.fsm", "--exhaustive", "--max-modules", "1"),
])
def test_usage_and_input_errors_exit_two(argv, fixtures_dir):
    argv = [str(a).replace("FIX", str(fixtures_dir)) for a in argv]
    code, _, err = run(*argv)
    assert code == 2 and err


def test_parse_error_reported_with_position(tmp_path):
    bad = tmp_path / "bad.fsm"
    bad.write_text("events:\n  f o f\nstates:\n  0 init\n")
    code, _, err = run("check", "local", bad)
    assert code == 2 and "bad.fsm:2:" in err
