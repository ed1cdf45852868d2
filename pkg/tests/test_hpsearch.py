"""Blend-search contracts: seeded corners, bounds, budget, determinism."""
import dataclasses

import numpy as np
import pytest

from semobridge import hpsearch as hp
from semobridge.errors import BadBounds, EmptyValidation, InvalidSpec
from semobridge.inference import BlendConfig
from semobridge.linalg import ProjectionPair
from semobridge.synthetic import SynthSpec, generate

SMALL_SPEC = SynthSpec(
    n_classes=4, shots=4, queries_per_class=5, val_per_class=8,
    prompts_per_class=2, dim=12, eos_dim=16, seed=4,
)


def task_and_proj(seed=4, **overrides):
    task = generate(dataclasses.replace(SMALL_SPEC, seed=seed, **overrides))
    return task, ProjectionPair.from_forward(task.w_txt)


def test_seeded_corners_lead_the_trace():
    task, proj = task_and_proj()
    res = hp.search_task(task, proj, hp.SearchSpec(budget=10, strategy="random"))
    lams = [(t.blend.lambda1, t.blend.lambda2, t.blend.lambda3) for t in res.trace[:4]]
    assert lams == [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 1.0, 1.0)]
    for entry in res.trace[:4]:
        assert (entry.blend.alpha, entry.blend.beta, entry.blend.gamma) == (1, 1, 1)
        assert entry.blend.theta == 0.0


@pytest.mark.parametrize("strategy", ["random", "coordinate", "hybrid"])
def test_best_dominates_single_logit_corners(strategy):
    task, proj = task_and_proj()
    res = hp.search_task(task, proj, hp.SearchSpec(budget=80, strategy=strategy))
    singles = [t.accuracy for t in res.trace[:3]]
    assert res.best_accuracy >= max(singles)
    assert res.best_accuracy == max(t.accuracy for t in res.trace)


def test_budget_one_returns_the_single_evaluation():
    task, proj = task_and_proj()
    res = hp.search_task(task, proj, hp.SearchSpec(budget=1))
    assert len(res.trace) == 1
    assert res.best == res.trace[0].blend
    assert res.best_accuracy == res.trace[0].accuracy


def test_separable_task_ties_resolve_to_earliest():
    task, proj = task_and_proj(image_noise=0.0, text_noise=0.0, gap_magnitude=0.0)
    res = hp.search_task(task, proj, hp.SearchSpec(budget=40, strategy="hybrid"))
    assert res.best_accuracy == 1.0
    assert res.trace[0].accuracy == 1.0
    assert res.best == res.trace[0].blend  # earliest of the all-tied evals


@pytest.mark.parametrize("strategy", ["random", "coordinate", "hybrid"])
def test_trace_within_bounds_and_budget(strategy):
    task, proj = task_and_proj()
    bounds = {
        "lambda1": (0.5, 2.0), "lambda2": (0.0, 1.0), "lambda3": (0.0, 1.0),
        "alpha": (1.0, 4.0), "beta": (1.0, 4.0), "gamma": (1.0, 4.0),
        "theta": (-2.0, 0.0),
    }
    spec = hp.SearchSpec(bounds=bounds, budget=50, strategy=strategy)
    res = hp.search_task(task, proj, spec)
    assert len(res.trace) <= 50
    assert [t.index for t in res.trace] == list(range(len(res.trace)))
    for entry in res.trace:
        for axis in hp.AXES:
            lo, hi = bounds[axis]
            assert lo <= getattr(entry.blend, axis) <= hi


def test_clamped_corners_deduplicate():
    task, proj = task_and_proj()
    bounds = dict(hp.DEFAULT_BOUNDS, lambda1=(2.0, 10.0), lambda2=(2.0, 10.0),
                  lambda3=(2.0, 10.0))
    res = hp.search_task(
        task, proj, hp.SearchSpec(bounds=bounds, budget=4, strategy="random")
    )
    # every corner clamps to the same all-2.0 config: one eval, rest random
    clamped = [t for t in res.trace
               if (t.blend.lambda1, t.blend.lambda2, t.blend.lambda3)
               == (2.0, 2.0, 2.0)]
    assert len(clamped) == 1
    assert res.trace[0] == clamped[0]
    assert len(res.trace) == 4


def test_same_seed_reproduces_trace_exactly():
    task, proj = task_and_proj()
    spec = hp.SearchSpec(budget=60, strategy="hybrid", seed=9)
    a = hp.search_task(task, proj, spec)
    b = hp.search_task(task, proj, spec)
    assert len(a.trace) == len(b.trace)
    for x, y in zip(a.trace, b.trace):
        assert x.blend == y.blend and x.accuracy == y.accuracy
    assert a.best == b.best


def test_different_seed_changes_random_phase():
    task, proj = task_and_proj()
    a = hp.search_task(task, proj, hp.SearchSpec(budget=40, strategy="random", seed=0))
    b = hp.search_task(task, proj, hp.SearchSpec(budget=40, strategy="random", seed=1))
    assert any(x.blend != y.blend for x, y in zip(a.trace, b.trace))


def test_empty_validation_rejected():
    task, proj = task_and_proj()
    task = dataclasses.replace(
        task, val_x=np.zeros((0, task.dim)), val_y=np.zeros((0,), dtype=np.int64)
    )
    with pytest.raises(EmptyValidation):
        hp.search_task(task, proj, hp.SearchSpec(budget=5))


@pytest.mark.parametrize(
    "kwargs,err",
    [
        (dict(budget=0), InvalidSpec),
        (dict(strategy="annealing"), InvalidSpec),
        (dict(bounds={k: v for k, v in hp.DEFAULT_BOUNDS.items() if k != "theta"}),
         BadBounds),
        (dict(bounds=dict(hp.DEFAULT_BOUNDS, alpha=(5.0, 5.0))), BadBounds),
        (dict(bounds=dict(hp.DEFAULT_BOUNDS, lambda1=(10.0, 0.0))), BadBounds),
        (dict(bounds=dict(hp.DEFAULT_BOUNDS, lambda2=(-1.0, 1.0))), BadBounds),
    ],
)
def test_spec_validation_rejects(kwargs, err):
    with pytest.raises(err):
        hp.SearchSpec(**kwargs).validate()


def test_noisy_task_blend_beats_every_single_logit():
    task, proj = task_and_proj(seed=11, image_noise=0.6)
    res = hp.search_task(task, proj, hp.SearchSpec(budget=150, strategy="hybrid"))
    singles = {}
    for i, axis in enumerate(("lambda1", "lambda2", "lambda3")):
        lams = {a: 1.0 if a == axis else 0.0
                for a in ("lambda1", "lambda2", "lambda3")}
        singles[axis] = res.trace[i].accuracy
        assert (res.trace[i].blend.lambda1, res.trace[i].blend.lambda2,
                res.trace[i].blend.lambda3) == tuple(lams.values())
    assert res.best_accuracy >= max(singles.values())
