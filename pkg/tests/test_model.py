from __future__ import annotations

import pytest

from compmdp.errors import IncompleteScheduler, MalformedModel
from compmdp.model import (
    Arity,
    Exit,
    OpenMDP,
    RoMDP,
    induced_mc,
    isomorphic,
    make_romdp,
    normalize_exits,
    validate,
)

from conftest import task_mdp


def test_task_is_valid():
    assert validate(task_mdp()).ok


def test_make_romdp_drops_zero_probabilities():
    a = make_romdp(1, 1, ["*"], {"q": 1}, ["q"], {("q", "*"): {"q": 0.0, Exit(1): 1.0}})
    assert a.row("q", "*") == {Exit(1): 1.0}


@pytest.mark.parametrize(
    "kwargs, rule",
    [
        (dict(transitions={("q", "*"): {Exit(1): 0.9}}), "row-sum"),
        (dict(transitions={("q", "*"): {Exit(1): 1.5, "q": -0.5}}), "probability"),
        (dict(transitions={("q", "*"): {Exit(2): 1.0}}), "transition"),
        (dict(transitions={("q", "*"): {"zz": 1.0}}), "transition"),
        (dict(entry=("zz",)), "entry"),
        (dict(entry=()), "entry"),
        (dict(rewards={"q": -1.0}), "reward"),
        (dict(actions=()), "actions"),
    ],
)
def test_validate_reports_rule(kwargs, rule):
    base = dict(m=1, n=1, actions=("*",), positions=("q",), rewards={"q": 1.0}, entry=("q",),
                transitions={("q", "*"): {Exit(1): 1.0}})
    base.update(kwargs)
    report = validate(RoMDP(**base))
    assert not report.ok
    assert rule in report.rules()


def test_validate_unique_exit_between_positions():
    a = make_romdp(1, 1, ["*"], {"p": 0, "q": 0}, ["p"],
                   {("p", "*"): {"q": 0.5, Exit(1): 0.5}, ("q", "*"): {Exit(1): 1.0}})
    assert validate(a).rules() == {"unique-exit"}


def test_validate_unique_exit_between_actions():
    a = make_romdp(1, 1, ["x", "y"], {"p": 0}, ["p"],
                   {("p", "x"): {Exit(1): 1.0}, ("p", "y"): {Exit(1): 1.0}})
    assert "unique-exit" in validate(a).rules()


def test_normalize_exits_repairs_shared_exit():
    a = make_romdp(1, 1, ["*"], {"p": 0, "q": 0}, ["p"],
                   {("p", "*"): {"q": 0.5, Exit(1): 0.5}, ("q", "*"): {Exit(1): 1.0}})
    b = normalize_exits(a)
    assert validate(b).ok
    assert "acc1" in b.positions


def test_normalize_exits_rejects_other_problems():
    a = make_romdp(1, 1, ["*"], {"p": 0}, ["p"], {("p", "*"): {Exit(1): 0.5}})
    with pytest.raises(MalformedModel):
        normalize_exits(a)


def test_open_mdp_checks_body_shape():
    body = task_mdp()
    OpenMDP(Arity(1), Arity(1), body)
    with pytest.raises(MalformedModel):
        OpenMDP(Arity(1, 1), Arity(1), body)


def test_open_mdp_rightward_flag():
    body = make_romdp(2, 2, ["*"], {}, [Exit(2), Exit(1)])
    assert not OpenMDP(Arity(1, 1), Arity(1, 1), body).rightward
    assert OpenMDP(Arity(2), Arity(2), body).rightward


def test_enabled_actions_and_scheduler_count():
    a = make_romdp(1, 2, ["x", "y", "z"], {"p": 0, "d": 0}, ["p"],
                   {("p", "x"): {Exit(1): 1.0}, ("p", "y"): {Exit(2): 1.0}})
    assert a.enabled_actions("p") == ("x", "y")
    assert a.enabled_actions("d") == ("x",)  # dead end keeps one choice
    assert a.scheduler_count() == 2
    assert len(list(a.schedulers())) == 2


def test_induced_mc():
    a = make_romdp(1, 2, ["x", "y"], {"p": 1}, ["p"],
                   {("p", "x"): {Exit(1): 1.0}, ("p", "y"): {Exit(2): 1.0}})
    mc = induced_mc(a, {"p": "y"})
    assert mc.actions == ("*",)
    assert mc.row("p", "*") == {Exit(2): 1.0}
    with pytest.raises(IncompleteScheduler):
        induced_mc(a, {})


def test_isomorphic_ignores_names_but_not_numbers():
    a = task_mdp()
    b = make_romdp(1, 1, ["*"], {"z": 4.0}, ["z"], {("z", "*"): {"z": 0.2, Exit(1): 0.8}})
    assert isomorphic(a, b) == {"q": "z"}
    assert isomorphic(a, task_mdp(reward=3.0)) is None
    assert isomorphic(a, task_mdp(loop=0.25)) is None
