from __future__ import annotations

import json

import pytest

from compmdp.cli import main

from conftest import TASK_TEXT


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "task.omdp").write_text(TASK_TEXT)
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def diagram(workdir, text, name="d.diag"):
    path = workdir / name
    path.write_text(text)
    return path


def test_solve_task(workdir, capsys):
    f = diagram(workdir, 'let T = load "task.omdp";\nsolve T entrance 1 exit 1\n')
    code, out, _ = run(capsys, "solve", f)
    assert code == 0
    assert out.strip() == "p=1.000000000000 r=5.000000000000"


def test_solve_component_file_directly(workdir, capsys):
    code, out, _ = run(capsys, "solve", workdir / "task.omdp")
    assert code == 0 and out.startswith("p=1.000000000000 r=5.000000000000")


def test_solve_identity(workdir, capsys):
    code, out, _ = run(capsys, "solve", diagram(workdir, "solve id[1]"))
    assert out.strip() == "p=1.000000000000 r=0.000000000000"


def test_stats_and_di(workdir, capsys):
    one = diagram(workdir, 'let T = load "task.omdp";\nsolve T ; T\n', "one.diag")
    two = diagram(workdir, 'let T1 = load "task.omdp";\nlet T2 = load "task.omdp";\nsolve T1 ; T2\n', "two.diag")
    outs = []
    for f, solves in ((one, 1), (two, 2)):
        stats = workdir / f"{f.stem}.json"
        code, out, _ = run(capsys, "solve", f, "--stats", stats)
        assert code == 0
        data = json.loads(stats.read_text())
        assert data["componentSolves"] == solves
        assert {"cacheHits", "frontSizes", "wallTime"} <= set(data)
        outs.append(out)
    assert outs[0] == outs[1]


def test_no_prune_same_answer(workdir, capsys):
    from compmdp.generators import generate_wholesale

    generate_wholesale(stages=2, hubs=1, regions=2).write(workdir / "w")
    f = workdir / "w" / "wholesale.diag"
    a = run(capsys, "solve", f)[1]
    b = run(capsys, "solve", f, "--no-prune")[1]
    assert a == b


def test_scheduler_out_plot_table_bench(workdir, capsys):
    from compmdp.generators import generate_patrol

    generate_patrol().write(workdir / "p")
    f = workdir / "p" / "patrol.diag"
    sched, plot = workdir / "s.sched", workdir / "front.png"
    code, out, _ = run(capsys, "solve", f, "--scheduler-out", sched, "--plot", plot, "--all", "--bench")
    assert code == 0
    lines = sched.read_text().splitlines()
    assert lines and all(len(x.split()) == 2 for x in lines)
    assert plot.stat().st_size > 0
    assert "entrance\texit\tp\tr" in out and "mean of 5 runs" in out


@pytest.mark.parametrize("text, code", [
    ("solve id[1] ;; id[1]", 2),
    ("solve X", 2),
    ("solve id[1] ; id[2]", 3),
    ("solve tr[1](id[2])", 3),
])
def test_exit_codes(workdir, capsys, text, code):
    got, _, err = run(capsys, "solve", diagram(workdir, text))
    assert got == code and err.startswith("error:")


def test_exit_code_validation_and_missing_file(workdir, capsys):
    bad = workdir / "bad.omdp"
    bad.write_text(TASK_TEXT.replace("0.8", "0.7"))
    code, _, err = run(capsys, "solve", diagram(workdir, 'solve load "bad.omdp"'))
    assert code == 2 and "row-sum" in err
    assert run(capsys, "solve", workdir / "nope.diag")[0] == 2


def test_exit_code_freeze_and_explosion(workdir, capsys):
    (workdir / "two.omdp").write_text(
        "mdp two { arity 1 -> 2 actions [a] positions { x reward 0 } entry 1 -> x "
        "trans x a { exit 1: 0.5, exit 2: 0.5 } }")
    code, _, err = run(capsys, "solve", diagram(workdir, 'solve freeze(load "two.omdp")'))
    assert code == 4 and "exit" in err
    from compmdp.generators import generate_patrol

    generate_patrol().write(workdir / "p")
    code, _, err = run(capsys, "solve", workdir / "p" / "patrol.diag", "--max-schedulers", "1")
    assert code == 4 and "freeze" in err


def test_check(workdir, capsys):
    code, out, _ = run(capsys, "check", workdir / "task.omdp", "--termination")
    assert code == 0 and "terminating" in out and "WARNING" not in out
    (workdir / "stuck.omdp").write_text(
        "mdp stuck { arity 1 -> 1 actions [a, b] positions { x reward 0 } entry 1 -> x "
        "trans x a { x: 1 } trans x b { exit 1: 1 } }")
    code, out, _ = run(capsys, "check", workdir / "stuck.omdp", "--termination")
    assert code == 0 and "WARNING" in out
    code, out, _ = run(capsys, "check", diagram(workdir, "solve swap[1,1]"), "--termination")
    assert code == 0 and "terminating" in out and "WARNING" not in out
    bad = workdir / "bad.omdp"
    bad.write_text(TASK_TEXT.replace("0.8", "0.7"))
    assert run(capsys, "check", bad)[0] == 2


def test_gen_and_flatten_round_trip(workdir, capsys):
    out_dir = workdir / "gen"
    code, out, _ = run(capsys, "gen", "patrol", "--di", "mid", "--buildings", "2", "-o", out_dir)
    assert code == 0 and (out_dir / "patrol.diag").exists()
    direct = run(capsys, "solve", out_dir / "patrol.diag")[1]
    flat = workdir / "flat.omdp"
    assert run(capsys, "flatten", out_dir / "patrol.diag", "-o", flat)[0] == 0
    mono = run(capsys, "solve", flat)[1]
    p1, r1 = (float(x.split("=")[1]) for x in direct.split())
    p2, r2 = (float(x.split("=")[1]) for x in mono.split())
    assert abs(p1 - p2) < 1e-9 and abs(r1 - r2) < 1e-9


def test_flatten_identity_native_and_prism(workdir, capsys):
    f = diagram(workdir, "solve id[1]")
    code, out, _ = run(capsys, "flatten", f)
    assert code == 0 and "positions {" in out and "entry 1 -> exit 1" in out
    code, out, _ = run(capsys, "flatten", f, "--format", "prism")
    assert "s : [0..1] init 0;" in out and 'label "exit1" = s=0;' in out


def test_flatten_wire_cycle_exit_code(workdir, capsys):
    assert run(capsys, "flatten", diagram(workdir, "solve tr[1](id[2])"))[0] == 3


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "--seed", "3", "--cases", "3")
    assert code == 0 and "all axioms hold" in out
    assert out.count("PASS") == 16
