"""Training for the learned bridge: loss graph, AdamW, warmup, best epoch.

Five loss terms over one full-batch task. Bridged support shots (bias added
before the norm rescaling) produce class centroids in EOS and shared space;
cross-entropies align image centroids with bridged-text centroids (l_img),
bridged EOS centroids with prompt EOS tokens (l_txte), bridged-text
centroids with projected text (l_txtp), and every bridged shot with the
image centroids of its own class (l_cons). A variance penalty (l_bias)
pulls per-class bias norms toward their mean. The blend is

    total = li * l_img + (1 - li) * (l_txte + l_txtp) / 2
            + lc * l_cons + lb * l_bias

Only the inverse projection and the class biases receive gradients; the
forward projection and all task data stay frozen. Everything is float64 and
free of RNG, so a fixed config reproduces bit-identical histories.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .bridge import BridgeModel, estimate_eos_norm
from .errors import (
    DivergedLoss,
    EmptyClass,
    InvalidSpec,
    NoValidationSplit,
    ZeroInverseImage,
)
from .inference import BlendConfig, build_state, class_means, evaluate
from .linalg import ProjectionPair, normalize_rows
from .task import FewShotTask
from .validation import as_labels, as_matrix

ZERO_PREIMAGE_TOL = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5000
    learning_rate: float = 0.15e-4
    warmup_epochs: int = 500
    weight_decay: float = 0.01
    adamw_beta1: float = 0.9
    adamw_beta2: float = 0.999
    adamw_eps: float = 1e-8
    lambda_it: float = 0.5
    lambda_c: float = 0.1
    lambda_b: float = 0.1
    eval_interval: int = 25
    temperature: float | None = None  # None -> use the task's logit scale
    seed: int = 0

    def validate(self) -> "TrainConfig":
        if self.epochs < 0:
            raise InvalidSpec("epochs must be >= 0")
        if not self.learning_rate > 0:
            raise InvalidSpec("learning_rate must be positive")
        if not 0 <= self.warmup_epochs <= self.epochs:
            raise InvalidSpec("warmup_epochs must lie in [0, epochs]")
        if self.weight_decay < 0:
            raise InvalidSpec("weight_decay must be >= 0")
        if not 0.0 <= self.lambda_it <= 1.0:
            raise InvalidSpec("lambda_it must lie in [0, 1]")
        if self.lambda_c < 0 or self.lambda_b < 0:
            raise InvalidSpec("loss weights must be >= 0")
        if self.eval_interval < 1:
            raise InvalidSpec("eval_interval must be >= 1")
        if self.temperature is not None and not self.temperature > 0:
            raise InvalidSpec("temperature must be positive")
        return self


def warmup_lr(cfg: TrainConfig, epoch: int) -> float:
    """lr * (epoch + 1) / warmup during warmup, then lr exactly."""
    if cfg.warmup_epochs > 0 and epoch < cfg.warmup_epochs:
        return cfg.learning_rate * (epoch + 1) / cfg.warmup_epochs
    return cfg.learning_rate


@dataclass(frozen=True)
class LossBreakdown:
    l_img: float
    l_txte: float
    l_txtp: float
    l_cons: float
    l_bias: float
    total: float

    def finite(self) -> bool:
        return all(
            np.isfinite(v)
            for v in (self.l_img, self.l_txte, self.l_txtp, self.l_cons, self.l_bias, self.total)
        )


def _loss_graph(train_x, train_y, prompt_eos, text_txt, forward, model, cfg):
    """Build the full differentiable graph; returns (breakdown, total, leaves)."""
    temperature = cfg.temperature if cfg.temperature is not None else 100.0
    forward = as_matrix(forward, "forward projection")
    train_x = as_matrix(train_x, "support shots")
    text_txt = as_matrix(text_txt, "text embeddings")
    c = text_txt.shape[0]
    train_y = as_labels(train_y, c, "support labels")
    prompt_eos = np.asarray(prompt_eos, dtype=np.float64)
    if prompt_eos.ndim == 2:  # class-level EOS rows, one per class
        prompt_eos = prompt_eos[:, None, :]

    weights = ad.Var(model.inverse_projection, needs_grad=True)
    biases = ad.Var(model.class_bias, needs_grad=True)

    pre = ad.matmul(ad.Var(train_x), weights) + ad.gather_rows(biases, train_y)
    norms = ad.row_norm(pre)
    if float(norms.value.min()) < ZERO_PREIMAGE_TOL:
        raise ZeroInverseImage("a support shot maps to zero under the learned inverse")
    shot_eos = pre * (model.eos_norm.value / norms)
    shot_txt = ad.matmul(shot_eos, ad.Var(forward))

    counts = np.bincount(train_y, minlength=c).astype(np.float64)
    if counts.min() == 0:
        raise EmptyClass("every class needs at least one support shot")
    averaging = np.zeros((c, len(train_y)))
    averaging[train_y, np.arange(len(train_y))] = 1.0 / counts[train_y]
    centroid_txt = ad.normalize(ad.matmul(ad.Var(averaging), shot_txt))
    centroid_eos = ad.normalize(ad.matmul(ad.Var(averaging), shot_eos))

    image_centroids = normalize_rows(class_means(train_x, train_y, c))
    text_n = normalize_rows(text_txt)
    prompt_n = normalize_rows(prompt_eos.mean(axis=1))
    eye = np.eye(c)

    l_img = ad.cross_entropy_mean(
        ad.matmul(ad.Var(image_centroids), ad.transpose(centroid_txt)), eye, temperature
    )
    l_txte = ad.cross_entropy_mean(
        ad.matmul(centroid_eos, ad.Var(prompt_n.T)), eye, temperature
    )
    l_txtp = ad.cross_entropy_mean(
        ad.matmul(centroid_txt, ad.Var(text_n.T)), eye, temperature
    )
    l_cons = ad.cross_entropy_mean(
        ad.matmul(ad.normalize(shot_txt), ad.Var(image_centroids.T)),
        eye[train_y],
        temperature,
    )
    bias_norms = ad.row_norm(biases)
    deviation = bias_norms - ad.vmean(bias_norms)
    l_bias = ad.vmean(deviation * deviation)

    li, lc, lb = cfg.lambda_it, cfg.lambda_c, cfg.lambda_b
    total = (
        li * l_img
        + ((1.0 - li) * 0.5) * (l_txte + l_txtp)
        + lc * l_cons
        + lb * l_bias
    )
    breakdown = LossBreakdown(
        l_img=float(l_img.value),
        l_txte=float(l_txte.value),
        l_txtp=float(l_txtp.value),
        l_cons=float(l_cons.value),
        l_bias=float(l_bias.value),
        total=float(total.value),
    )
    return breakdown, total, weights, biases


def compute_losses(
    train_x, train_y, prompt_eos, text_txt, forward, model: BridgeModel,
    cfg: TrainConfig,
) -> LossBreakdown:
    breakdown, _, _, _ = _loss_graph(
        train_x, train_y, prompt_eos, text_txt, forward, model, cfg
    )
    return breakdown


def gradients(
    train_x, train_y, prompt_eos, text_txt, forward, model: BridgeModel,
    cfg: TrainConfig,
):
    """Loss breakdown plus exact gradients for (inverse weights, class biases)."""
    breakdown, total, weights, biases = _loss_graph(
        train_x, train_y, prompt_eos, text_txt, forward, model, cfg
    )
    total.backward()
    grad_w = weights.grad if weights.grad is not None else np.zeros_like(weights.value)
    grad_b = biases.grad if biases.grad is not None else np.zeros_like(biases.value)
    return breakdown, grad_w, grad_b


class _AdamW:
    """Decoupled-weight-decay Adam over named arrays, bias-corrected."""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.step_count = 0
        self.m = {}
        self.v = {}

    def step(self, params: dict, grads: dict, lr: float, decay_names: set):
        self.step_count += 1
        b1, b2, eps = self.cfg.adamw_beta1, self.cfg.adamw_beta2, self.cfg.adamw_eps
        for name, p in params.items():
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            if name in decay_names and self.cfg.weight_decay:
                p *= 1.0 - lr * self.cfg.weight_decay
            m += (1 - b1) * (g - m)
            v += (1 - b2) * (g * g - v)
            m_hat = m / (1 - b1**self.step_count)
            v_hat = v / (1 - b2**self.step_count)
            p -= lr * m_hat / (np.sqrt(v_hat) + eps)


@dataclass(frozen=True)
class HistoryRow:
    epoch: int
    losses: LossBreakdown
    val_accuracy: float | None


@dataclass(frozen=True)
class TrainResult:
    model: BridgeModel  # best validation checkpoint; what gets saved
    final_model: BridgeModel  # parameters after the last update, for diagnostics
    history: list
    best_epoch: int
    best_val_accuracy: float


NEUTRAL_VAL_BLEND = BlendConfig(lambda1=0.0, lambda2=0.0, lambda3=1.0, theta=0.0)


def train(
    task: FewShotTask,
    proj: ProjectionPair,
    cfg: TrainConfig,
    val_blend: BlendConfig | None = None,
) -> TrainResult:
    """Full-batch training with linear warmup and best-epoch selection.

    Validation accuracy is measured every eval_interval epochs (and at the
    final epoch) with a neutral lambda3-only blend unless overridden; ties
    keep the earlier epoch. Weight decay touches only the inverse weights.
    """
    cfg.validate()
    if cfg.temperature is None:
        cfg = replace(cfg, temperature=task.temperature)
    temperature = cfg.temperature
    if len(task.val_y) == 0:
        raise NoValidationSplit("training requires validation queries")
    val_blend = (val_blend or NEUTRAL_VAL_BLEND).validate()

    eos = estimate_eos_norm(task.prompt_eos)
    model = BridgeModel.untrained(proj, task.n_classes, eos)
    params = {"weights": model.inverse_projection, "biases": model.class_bias}
    opt = _AdamW(cfg)
    history = []
    best = (-1.0, -1, model.inverse_projection.copy(), model.class_bias.copy())

    for epoch in range(cfg.epochs):
        # divergence surfaces as non-finite values; detected below, so the
        # intermediate overflow itself is not an error
        with np.errstate(over="ignore", invalid="ignore"):
            breakdown, grad_w, grad_b = gradients(
                task.train_x, task.train_y, task.prompt_eos, task.text_txt,
                proj.forward, model, cfg,
            )
        if not breakdown.finite():
            raise DivergedLoss(f"non-finite loss at epoch {epoch}")
        opt.step(
            params,
            {"weights": grad_w, "biases": grad_b},
            warmup_lr(cfg, epoch),
            decay_names={"weights"},
        )
        val_acc = None
        if (epoch + 1) % cfg.eval_interval == 0 or epoch == cfg.epochs - 1:
            val_acc = _validation_accuracy(task, proj, model, val_blend, temperature)
            if val_acc > best[0]:
                best = (val_acc, epoch, params["weights"].copy(), params["biases"].copy())
        history.append(HistoryRow(epoch=epoch, losses=breakdown, val_accuracy=val_acc))

    if cfg.epochs == 0:
        chosen = model
        best_epoch, best_acc = -1, float("nan")
    else:
        chosen = BridgeModel(best[2], best[3], eos, model.forward_projection_ref)
        best_epoch, best_acc = best[1], best[0]
    return TrainResult(
        model=chosen, final_model=model.copy(), history=history,
        best_epoch=best_epoch, best_val_accuracy=best_acc,
    )


def _validation_accuracy(task, proj, model, val_blend, temperature):
    state = build_state(
        task.train_x, task.train_y, task.prompt_eos, task.text_txt, proj,
        model=model, blend=val_blend, temperature=temperature,
    )
    return evaluate(task.val_x, task.val_y, state).accuracy


def training_free_validation_accuracy(
    task: FewShotTask, proj: ProjectionPair, val_blend: BlendConfig | None = None,
    temperature: float | None = None,
) -> float:
    """Baseline for efficacy comparisons: untrained bridge, same metric."""
    val_blend = (val_blend or NEUTRAL_VAL_BLEND).validate()
    temperature = temperature if temperature is not None else task.temperature
    eos = estimate_eos_norm(task.prompt_eos)
    model = BridgeModel.untrained(proj, task.n_classes, eos)
    return _validation_accuracy(task, proj, model, val_blend, temperature)
