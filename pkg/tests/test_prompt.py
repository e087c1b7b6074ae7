import re

import pytest
from hypothesis import given, strategies as st

from stepeval.errors import IndexOutOfRange, PlaceholderUnfilled, TemplateIncompatible
from stepeval.prompt import (
    PromptTemplate,
    builtin_templates,
    render_per_subgoal,
    render_whole_trajectory,
    template_catalog,
)
from stepeval.rubric import SubgoalRubric

from conftest import synthetic_trajectories

LEFTOVER = re.compile(r"\{[A-Za-z_][A-Za-z0-9_]*\}")


def test_whole_trajectory_lists_subgoals_in_order(transfer_water, png):
    (t,) = synthetic_trajectories([None], png, frames=3)
    tpl = template_catalog()["whole_zero_shot"]
    p = render_whole_trajectory(tpl, transfer_water, t)
    assert "1. pick up cup\n2. align cup over bowl\n3. pour water\n4. place cup down" in p.text
    assert p.image_count == 3
    assert p.subgoal_scope is None
    assert "exactly 4 values" in p.text


def test_single_subgoal_rubric(png):
    rubric = SubgoalRubric.from_entries("Lift", [("lift", "lift the block")])
    (t,) = synthetic_trajectories([None], png)
    p = render_whole_trajectory(template_catalog()["whole_zero_shot"], rubric, t)
    assert "1. lift the block" in p.text
    assert "2." not in p.text


def test_template_missing_subgoal_list(transfer_water, png):
    (t,) = synthetic_trajectories([None], png)
    per = template_catalog()["subgoal_zero_shot"]
    with pytest.raises(TemplateIncompatible):
        render_whole_trajectory(per, transfer_water, t)


def test_per_subgoal_only_mentions_k(transfer_water, png):
    (t,) = synthetic_trajectories([None], png, frames=2)
    p = render_per_subgoal(template_catalog()["subgoal_zero_shot"], transfer_water, 3, t)
    assert "pour water" in p.text
    for other in ("pick up cup", "align cup over bowl", "place cup down"):
        assert other not in p.text
    assert p.subgoal_scope == 3
    assert "`ANSWER: 1`" in p.text and "`ANSWER: 0`" in p.text
    with pytest.raises(IndexOutOfRange):
        render_per_subgoal(template_catalog()["subgoal_zero_shot"], transfer_water, 5, t)


def test_few_shot_examples_precede_query(transfer_water, png):
    (t,) = synthetic_trajectories([None], png)
    tpl = template_catalog()["subgoal_few_shot"]
    assert len(tpl.few_shot_examples) == 2
    text = render_per_subgoal(tpl, transfer_water, 1, t).text
    query_at = text.index("Subgoal to judge:")
    for scenario, _ in tpl.few_shot_examples:
        assert 0 <= text.index(scenario) < query_at


def test_builtin_catalog(transfer_water, png):
    templates = builtin_templates()
    assert len(templates) >= 4
    assert len({t.id for t in templates}) == len(templates)
    combos = {(t.whole_trajectory, t.style) for t in templates}
    assert combos >= {(True, "zero_shot"), (True, "few_shot"), (False, "zero_shot"), (False, "few_shot")}
    (t,) = synthetic_trajectories([None], png)
    for tpl in templates:
        if tpl.style == "zero_shot":
            assert tpl.few_shot_examples == ()
        if tpl.whole_trajectory:
            text = render_whole_trajectory(tpl, transfer_water, t).text
        else:
            text = render_per_subgoal(tpl, transfer_water, 2, t).text
        assert not LEFTOVER.search(text)


def test_template_invariants():
    with pytest.raises(TemplateIncompatible):
        PromptTemplate("x", "zero_shot", "{subgoal_list}")  # no answer instruction
    with pytest.raises(TemplateIncompatible):
        PromptTemplate("x", "zero_shot", "{subgoal_list} {answer_instruction} {answer_instruction}")


def test_unknown_placeholder(transfer_water, png):
    (t,) = synthetic_trajectories([None], png)
    tpl = PromptTemplate("x", "zero_shot", "{subgoal_list}\n{robot_name}\n{answer_instruction}")
    with pytest.raises(PlaceholderUnfilled) as exc:
        render_whole_trajectory(tpl, transfer_water, t)
    assert exc.value.placeholder == "robot_name"


sentinel = st.integers(0, 10**9).map(lambda i: f"SENTINEL{i:010d}")


@given(st.lists(sentinel, min_size=1, max_size=12, unique=True), st.sampled_from(["whole_zero_shot", "whole_few_shot"]))
def test_each_description_once_and_deterministic(tmp_path_factory, descriptions, template_id):
    from pathlib import Path
    from stepeval.trajectory import ImageRef

    rubric = SubgoalRubric.from_entries("Task", [(f"s{i}", d) for i, d in enumerate(descriptions)])
    ref = ImageRef(Path("/nonexistent.png"), "image/png")
    (t,) = synthetic_trajectories([None], ref, frames=2)
    tpl = template_catalog()[template_id]
    a = render_whole_trajectory(tpl, rubric, t)
    b = render_whole_trajectory(tpl, rubric, t)
    assert a == b
    for d in descriptions:
        assert a.text.count(d) == 1
    assert not LEFTOVER.search(a.text)


def test_braces_in_descriptions_not_reinterpreted(png):
    rubric = SubgoalRubric.from_entries("T", [("a", "move {subgoal_list} block")])
    (t,) = synthetic_trajectories([None], png)
    text = render_whole_trajectory(template_catalog()["whole_zero_shot"], rubric, t).text
    assert "1. move {subgoal_list} block" in text
