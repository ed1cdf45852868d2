"""Validation-split search over the seven blend parameters.

Three single-logit corner configs and the all-equal config are always
evaluated first, so the result can never lose to a fixed one-logit
baseline. Remaining budget goes to the chosen strategy: uniform random
draws, coordinate descent over a small per-axis grid, or a hybrid that
spends a third of the budget randomly before descending from the
incumbent. Every evaluation lands in the trace in order; the best config
wins with ties going to the earliest evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BadBounds, EmptyValidation, InvalidSpec
from .inference import BlendConfig, LogitComponents, blend_components, build_state, components
from .linalg import ProjectionPair
from .task import FewShotTask
from .validation import as_labels

AXES = ("lambda1", "lambda2", "lambda3", "alpha", "beta", "gamma", "theta")

DEFAULT_BOUNDS = {
    "lambda1": (0.0, 10.0),
    "lambda2": (0.0, 10.0),
    "lambda3": (0.0, 10.0),
    "alpha": (0.0, 30.0),
    "beta": (0.0, 30.0),
    "gamma": (0.0, 30.0),
    "theta": (-10.0, 0.0),
}

GRID_POINTS_PER_AXIS = 5
STRATEGIES = ("coordinate", "random", "hybrid")


@dataclass(frozen=True)
class SearchSpec:
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    budget: int = 600
    strategy: str = "hybrid"
    seed: int = 0

    def validate(self) -> "SearchSpec":
        if self.budget < 1:
            raise InvalidSpec("budget must be >= 1")
        if self.strategy not in STRATEGIES:
            raise InvalidSpec(f"strategy must be one of {STRATEGIES}")
        for axis in AXES:
            if axis not in self.bounds:
                raise BadBounds(f"missing bounds for {axis}")
            lo, hi = self.bounds[axis]
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise BadBounds(f"bounds for {axis} must satisfy lo < hi")
            if axis != "theta" and lo < 0:
                raise BadBounds(f"{axis} bounds must be non-negative")
        return self


@dataclass(frozen=True)
class TraceEntry:
    index: int
    blend: BlendConfig
    accuracy: float


@dataclass(frozen=True)
class SearchResult:
    best: BlendConfig
    best_accuracy: float
    trace: list


def _clamp(value: float, lo: float, hi: float) -> float:
    return min(max(value, lo), hi)


def _seeded_candidates(bounds) -> list:
    """Single-logit corners plus the all-equal blend, clamped into bounds."""
    lam = {a: bounds[a] for a in ("lambda1", "lambda2", "lambda3")}
    base = {
        "alpha": _clamp(1.0, *bounds["alpha"]),
        "beta": _clamp(1.0, *bounds["beta"]),
        "gamma": _clamp(1.0, *bounds["gamma"]),
        "theta": _clamp(0.0, *bounds["theta"]),
    }
    on = {a: _clamp(1.0, *lam[a]) for a in lam}
    off = {a: _clamp(0.0, *lam[a]) for a in lam}
    corners = []
    for active in ("lambda1", "lambda2", "lambda3"):
        lams = {a: (on[a] if a == active else off[a]) for a in lam}
        corners.append(BlendConfig(**lams, **base))
    corners.append(BlendConfig(**on, **base))
    return corners


def _axis_grid(bounds, axis) -> np.ndarray:
    lo, hi = bounds[axis]
    return np.linspace(lo, hi, GRID_POINTS_PER_AXIS)


def _random_candidate(rng, bounds) -> BlendConfig:
    values = {axis: float(rng.uniform(*bounds[axis])) for axis in AXES}
    return BlendConfig(**values)


def _lambda_sum(blend: BlendConfig) -> float:
    return blend.lambda1 + blend.lambda2 + blend.lambda3


def _config_key(blend: BlendConfig) -> tuple:
    return tuple(getattr(blend, axis) for axis in AXES)


def search_blend(
    val_components: LogitComponents,
    val_labels,
    kl_matrix: np.ndarray,
    spec: SearchSpec,
) -> SearchResult:
    """Search blends against precomputed validation logit components.

    The cosine components do not depend on the blend, so each candidate
    costs one sharpening-and-mix pass. Deterministic for a fixed seed.
    """
    spec.validate()
    n_classes = kl_matrix.shape[0]
    labels = as_labels(val_labels, n_classes, "validation labels")
    if labels.size == 0:
        raise EmptyValidation("blend search requires validation queries")

    rng = np.random.default_rng(spec.seed)
    trace: list = []
    seen: set = set()
    best_idx = -1

    def try_config(blend: BlendConfig) -> bool:
        """Evaluate one config if it is new and valid; returns budget spent."""
        nonlocal best_idx
        if _lambda_sum(blend) <= 0 or _config_key(blend) in seen:
            return False
        seen.add(_config_key(blend))
        blended, _, _, _ = blend_components(val_components, blend, kl_matrix)
        acc = float(np.mean(np.argmax(blended, axis=1) == labels))
        trace.append(TraceEntry(index=len(trace), blend=blend, accuracy=acc))
        if best_idx < 0 or acc > trace[best_idx].accuracy:
            best_idx = len(trace) - 1
        return True

    def budget_left() -> int:
        return spec.budget - len(trace)

    for cand in _seeded_candidates(spec.bounds):
        if budget_left() <= 0:
            break
        try_config(cand)

    random_share = (
        spec.budget if spec.strategy == "random"
        else spec.budget // 3 if spec.strategy == "hybrid"
        else 0
    )
    attempts = 0
    while len(trace) < random_share and attempts < 20 * spec.budget:
        try_config(_random_candidate(rng, spec.bounds))
        attempts += 1

    if spec.strategy in ("coordinate", "hybrid"):
        incumbent = trace[best_idx].blend
        stalled_axes = 0
        while budget_left() > 0 and stalled_axes < len(AXES):
            for axis in AXES:
                progressed = False
                for v in _axis_grid(spec.bounds, axis):
                    if budget_left() <= 0:
                        break
                    progressed |= try_config(replace(incumbent, **{axis: float(v)}))
                stalled_axes = 0 if progressed else stalled_axes + 1
                incumbent = trace[best_idx].blend
                if budget_left() <= 0 or stalled_axes >= len(AXES):
                    break

    return SearchResult(
        best=trace[best_idx].blend,
        best_accuracy=trace[best_idx].accuracy,
        trace=trace,
    )


def search_task(
    task: FewShotTask,
    proj: ProjectionPair,
    spec: SearchSpec,
    model=None,
) -> SearchResult:
    """Build the classifier state once, then search blends on the val split."""
    if np.asarray(task.val_y).size == 0:
        raise EmptyValidation("blend search requires validation queries")
    state = build_state(
        task.train_x, task.train_y, task.prompt_eos, task.text_txt, proj,
        model=model, temperature=task.temperature,
    )
    comp = components(task.val_x, state)
    return search_blend(comp, task.val_y, state.kl_matrix, spec)
