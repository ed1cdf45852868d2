"""Few-shot classification by blending three logit families.

z1 compares the raw query against projected class text embeddings (the
zero-shot signal); z2 compares the bridged query against image-shot
centroids; z3 compares the raw query against centroids of bridged shots.
Each family is sharpened with phi(z, s) = exp(-s * (1 - z)), which is
strictly monotone for s > 0 and therefore argmax-preserving.

Soft labels reweight z2 and z3 by exp(theta * KL) where KL measures how far
each image centroid's text-similarity profile sits from its own class; with
theta < 0 confusable classes are damped. theta = 0 means "soft labels off":
the literal all-ones matrix would otherwise collapse every row to a constant
under right-multiplication, so neutrality is implemented exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bridge import BridgeModel, bridge_trained, estimate_eos_norm
from .errors import EmptyClass, EmptyInput, InvalidSpec, ShapeMismatch
from .linalg import ProjectionPair, cosine_matrix, normalize_rows, softmax_rows
from .validation import as_labels, as_matrix


@dataclass(frozen=True)
class BlendConfig:
    """Blend weights, sharpening strengths, and soft-label shape."""

    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    theta: float = 0.0
    kl_epsilon: float = 1e-6
    temperature: float | None = None  # soft-label softmax scale; None -> task's

    def validate(self) -> "BlendConfig":
        lambdas = (self.lambda1, self.lambda2, self.lambda3)
        if any(v < 0 for v in lambdas) or sum(lambdas) <= 0:
            raise InvalidSpec("blend weights must be >= 0 with a positive sum")
        if any(v < 0 for v in (self.alpha, self.beta, self.gamma)):
            raise InvalidSpec("sharpening strengths must be >= 0")
        if self.kl_epsilon < 0:
            raise InvalidSpec("kl_epsilon must be >= 0")
        if self.temperature is not None and not self.temperature > 0:
            raise InvalidSpec("temperature must be positive")
        return self

    def resolve_temperature(self, task_temperature: float) -> "BlendConfig":
        if self.temperature is not None:
            return self
        return replace(self, temperature=float(task_temperature))


def sharpen(z, strength: float) -> np.ndarray:
    """exp(-strength * (1 - z)) with z clamped into [-1, 1] first."""
    z = np.clip(np.asarray(z, dtype=np.float64), -1.0, 1.0)
    return np.exp(-strength * (1.0 - z))


def class_confusion_kl(
    image_centroids, text_embeddings, temperature: float, epsilon: float = 1e-6
) -> np.ndarray:
    """KL(p_i || smoothed one-hot j) for all class pairs (i, j).

    p_i is the softmax (scaled by temperature) of centroid i's cosine row
    against the class text embeddings; the one-hot labels are smoothed as
    (q + eps) / (1 + C * eps) on the label side only.
    """
    rows = cosine_matrix(image_centroids, text_embeddings)
    c = rows.shape[1]
    if rows.shape[0] != c:
        raise ShapeMismatch("need one image centroid per class")
    p = softmax_rows(rows, temperature)
    # KL(p || smooth(e_j)) = -H(p) - p_j log((1+eps)/(1+C eps)) - (1-p_j) log(eps/(1+C eps))
    neg_entropy = np.sum(p * np.log(p), axis=1, keepdims=True)
    log_hit = np.log((1.0 + epsilon) / (1.0 + c * epsilon))
    log_miss = -np.inf if epsilon == 0.0 else np.log(epsilon / (1.0 + c * epsilon))
    return neg_entropy - p * log_hit - (1.0 - p) * log_miss


def soft_label_matrix(
    image_centroids,
    text_embeddings,
    theta: float,
    temperature: float,
    epsilon: float = 1e-6,
) -> np.ndarray:
    """exp(theta * KL) over class pairs; all-ones at theta = 0, diagonally
    dominant for theta < 0 when centroids align with their own text."""
    return np.exp(
        theta * class_confusion_kl(image_centroids, text_embeddings, temperature, epsilon)
    )


@dataclass(frozen=True)
class ClassifierState:
    """Immutable per-task inference state; rows that feed cosines are unit norm."""

    forward: np.ndarray
    model: BridgeModel
    centroids_img: np.ndarray
    bridged_centroids_txt: np.ndarray
    text_embeddings: np.ndarray
    kl_matrix: np.ndarray
    soft_labels: np.ndarray
    blend: BlendConfig

    @property
    def n_classes(self) -> int:
        return self.text_embeddings.shape[0]


def class_means(x: np.ndarray, labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Raw per-class means. Every class must appear at least once."""
    counts = np.bincount(labels, minlength=n_classes)
    if np.any(counts == 0):
        raise EmptyClass(f"class {int(np.flatnonzero(counts == 0)[0])} has no rows")
    sums = np.zeros((n_classes, x.shape[1]))
    np.add.at(sums, labels, x)
    return sums / counts[:, None]


def build_state(
    train_x,
    train_y,
    prompt_eos,
    text_txt,
    proj: ProjectionPair,
    model: BridgeModel | None = None,
    blend: BlendConfig | None = None,
    temperature: float = 100.0,
) -> ClassifierState:
    """Assemble the inference state from support shots and text resources."""
    text_txt = as_matrix(text_txt, "text embeddings")
    c = text_txt.shape[0]
    train_x = as_matrix(train_x, "support shots", cols=proj.shared_dim)
    train_y = as_labels(train_y, c, "support labels")
    blend = (blend or BlendConfig()).validate().resolve_temperature(temperature)
    if model is None:
        model = BridgeModel.untrained(proj, c, estimate_eos_norm(prompt_eos))
    _, shots_txt = bridge_trained(
        train_x, model, proj.forward, class_ids=train_y, apply_bias=True
    )
    centroids_img = normalize_rows(class_means(train_x, train_y, c))
    bridged_centroids = normalize_rows(class_means(shots_txt, train_y, c))
    text_n = normalize_rows(text_txt)
    kl = class_confusion_kl(
        centroids_img, text_n, temperature=blend.temperature, epsilon=blend.kl_epsilon
    )
    return ClassifierState(
        forward=proj.forward,
        model=model,
        centroids_img=centroids_img,
        bridged_centroids_txt=bridged_centroids,
        text_embeddings=text_n,
        kl_matrix=kl,
        soft_labels=np.exp(blend.theta * kl),
        blend=blend,
    )


@dataclass(frozen=True)
class LogitComponents:
    """Raw cosine families for a query batch, before sharpening and blending."""

    cos_text: np.ndarray
    cos_bridged_query: np.ndarray
    cos_bridged_shots: np.ndarray


def components(queries, state: ClassifierState) -> LogitComponents:
    queries = as_matrix(queries, "queries", cols=state.forward.shape[1])
    if queries.shape[0] == 0:
        raise EmptyInput("no queries")
    _, bridged = bridge_trained(queries, state.model, state.forward, apply_bias=False)
    return LogitComponents(
        cos_text=cosine_matrix(queries, state.text_embeddings),
        cos_bridged_query=cosine_matrix(bridged, state.centroids_img),
        cos_bridged_shots=cosine_matrix(queries, state.bridged_centroids_txt),
    )


def blend_components(comp: LogitComponents, blend: BlendConfig, kl_matrix: np.ndarray):
    """Sharpened, soft-labeled, lambda-weighted logits: (blended, z1, z2, z3)."""
    z1 = sharpen(comp.cos_text, blend.alpha)
    z2 = sharpen(comp.cos_bridged_query, blend.gamma)
    z3 = sharpen(comp.cos_bridged_shots, blend.beta)
    if blend.theta != 0.0:
        soft = np.exp(blend.theta * kl_matrix)
        z2 = z2 @ soft
        z3 = z3 @ soft
    blended = blend.lambda1 * z1 + blend.lambda2 * z2 + blend.lambda3 * z3
    return blended, z1, z2, z3


def predict_logits(queries, state: ClassifierState):
    return blend_components(components(queries, state), state.blend, state.kl_matrix)


def predict(queries, state: ClassifierState) -> np.ndarray:
    """Class labels by blended argmax; ties break toward the lowest index."""
    blended, _, _, _ = predict_logits(queries, state)
    return np.argmax(blended, axis=1)


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # counts, rows = true class
    predictions: np.ndarray


def evaluate(queries, labels, state: ClassifierState) -> EvalResult:
    queries = as_matrix(queries, "queries")
    labels = as_labels(labels, state.n_classes, "query labels")
    if queries.shape[0] == 0:
        raise EmptyInput("no queries to evaluate")
    if queries.shape[0] != labels.shape[0]:
        raise ShapeMismatch("one label per query required")
    preds = predict(queries, state)
    c = state.n_classes
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (labels, preds), 1)
    return EvalResult(
        accuracy=float((preds == labels).mean()),
        confusion=confusion,
        predictions=preds,
    )


def confusion_rates(confusion: np.ndarray) -> np.ndarray:
    """Row-normalized confusion matrix; empty rows stay zero."""
    counts = confusion.sum(axis=1, keepdims=True)
    return confusion / np.where(counts == 0, 1, counts)
