import random

import pytest
from hypothesis import given, strategies as st

from stepeval.config import EvalConfig
from stepeval.cost import (
    CostModel,
    CostRecord,
    batch_cost_summary,
    estimate_tokens,
    format_duration,
    format_money,
    load_pricing,
    project_budget,
    trajectory_cost,
)
from stepeval.errors import EmptyInput
from stepeval.prompt import PromptStrategy, plan_prompts, template_catalog

from conftest import synthetic_trajectories, write_json

CATALOG = template_catalog()


def test_formula_example():
    # 0.01 * 1500/1000 + 0.002 * 4 = 0.015 + 0.008
    assert trajectory_cost(CostModel(0.01, 0.002), 1500, 4) == pytest.approx(0.023, abs=1e-9)
    assert trajectory_cost(CostModel(0.01, 0.002), 0, 0) == 0
    assert trajectory_cost(CostModel(0.0, 0.05), 123456, 1) == pytest.approx(0.05, abs=1e-12)


@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 10**6), st.integers(0, 10**6),
       st.integers(0, 500), st.integers(0, 500))
def test_linearity(alpha, beta, t1, t2, m1, m2):
    model = CostModel(alpha, beta)
    whole = trajectory_cost(model, t1 + t2, m1 + m2)
    assert abs(whole - (trajectory_cost(model, t1, m1) + trajectory_cost(model, t2, m2))) <= 1e-9


def test_estimate_tokens():
    assert estimate_tokens("x" * 400) == 100
    assert estimate_tokens("x" * 401) == 101
    assert estimate_tokens("") == 0
    assert estimate_tokens("é" * 2) == 1  # 4 UTF-8 bytes


def test_batch_summary_worked_sentence():
    records = [CostRecord(f"t{i:03d}", 100, 1, 0.05, 1.8) for i in range(100)]
    s = batch_cost_summary(records)
    assert s.total_cost == 5.0
    assert s.total_latency == pytest.approx(180.0)
    assert format_money(s.total_cost) == "$5.00"
    assert format_duration(s.total_latency) == "3 minutes"
    assert s.mean_cost == 0.05


def test_batch_summary_single_and_mixed():
    one = batch_cost_summary([CostRecord("a", 10, 2, 0.125, 3.0)])
    assert one.total_cost == one.mean_cost == 0.125
    assert one.total_latency == one.mean_latency == 3.0
    rng = random.Random(11)
    recs = [CostRecord(f"r{i}", rng.randint(0, 5000), rng.randint(0, 9), round(rng.uniform(0, 0.2), 6),
                       rng.uniform(0, 5)) for i in range(57)]
    s = batch_cost_summary(recs)
    naive = 0.0
    for r in recs:
        naive += r.cost
    assert s.total_cost == pytest.approx(naive, abs=1e-6)
    assert s.total_tokens == sum(r.tokens for r in recs)
    with pytest.raises(EmptyInput):
        batch_cost_summary([])


def test_format_duration():
    assert format_duration(12.34) == "12.3 seconds"
    assert format_duration(60) == "1 minute"
    assert format_duration(90) == "1.5 minutes"


def test_project_budget_per_subgoal(transfer_water, png):
    (t,) = synthetic_trajectories([None], png, frames=3)
    model = CostModel(0.01, 0.002)
    cfg = EvalConfig(views=("front",), strategy=PromptStrategy.PER_SUBGOAL, template_id="subgoal_zero_shot",
                     cost_model=model)
    proj = project_budget(model, cfg, transfer_water, t, CATALOG)
    prompts = plan_prompts(cfg, transfer_water, t, CATALOG)
    assert proj.calls == 4
    assert proj.tokens == sum(estimate_tokens(p) for p in prompts)
    assert proj.images == 12
    # per-subgoal pattern costs the sum of its single calls
    single = sum(trajectory_cost(model, estimate_tokens(p), p.image_count) for p in prompts)
    assert proj.cost == pytest.approx(single, abs=1e-12)
    assert project_budget(model, cfg, transfer_water, t, CATALOG) == proj


def test_project_budget_image_component(transfer_water, png):
    (t,) = synthetic_trajectories([None], png, frames=3, views=("front", "wrist"))
    model = CostModel(0.0, 0.001)
    cfg = EvalConfig(views=("front", "wrist"), cost_model=model)
    proj = project_budget(model, cfg, transfer_water, t, CATALOG)
    assert proj.images == 6
    assert proj.cost == pytest.approx(0.006, abs=1e-12)


def test_pricing_file(tmp_path):
    path = write_json(tmp_path / "p.json", {"currency": "EUR", "alpha_per_1k_tokens": 0.5, "beta_per_image": 0.01})
    model = load_pricing(path)
    assert model == CostModel(0.5, 0.01, "EUR")
    assert CostModel.from_dict(model.to_dict()) == model
    with pytest.raises(ValueError):
        CostModel(-1.0, 0.0)
