"""Closed-form bridging of image embeddings into the text modality.

A CLIP-style text encoder produces an end-of-sequence (EOS) token that the
text projection maps into the shared space. Running that projection's
pseudo-inverse on an image embedding yields a synthetic EOS token; rescaling
it to the typical EOS norm and projecting forward again gives a text-modality
stand-in for the image. With a full-column-rank projection the round trip is
a positive rescaling of the original embedding, so query geometry survives
while class-wise statistics (means of equal-norm vectors) change.

The trained variant swaps the pseudo-inverse for a learned matrix and adds a
per-class bias to support shots before rescaling; queries never receive the
bias because their class is unknown.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyClass, ShapeMismatch, UnknownClass, ZeroInverseImage
from .linalg import ProjectionPair
from .validation import as_matrix

ZERO_PREIMAGE_TOL = 1e-12


@dataclass(frozen=True)
class EosNormEstimate:
    """Mean EOS-token norm, overall and per class."""

    value: float
    per_class: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "per_class", np.asarray(self.per_class, dtype=np.float64)
        )


def estimate_eos_norm(prompt_eos) -> EosNormEstimate:
    """Estimate the target EOS norm from per-class prompt EOS tokens.

    Accepts a (C, P, d_t) array (P prompts per class) or a (C, d_t) matrix
    treated as one prompt per class. Per-class values are prompt means; the
    overall value is the mean over all (class, prompt) pairs, which for a
    uniform prompt count equals the mean of the per-class means.
    """
    tokens = np.asarray(prompt_eos, dtype=np.float64)
    if tokens.ndim == 2:
        tokens = tokens[:, None, :]
    if tokens.ndim != 3:
        raise ShapeMismatch(f"expected (C, P, d_t) tokens, got ndim={tokens.ndim}")
    n_classes, n_prompts, _ = tokens.shape
    if n_classes == 0 or n_prompts == 0:
        raise EmptyClass("eos norm estimate needs at least one class and one prompt")
    per_class = np.linalg.norm(tokens, axis=2).mean(axis=1)
    return EosNormEstimate(value=float(per_class.mean()), per_class=per_class)


@dataclass
class BridgeModel:
    """Learned (or identity-initialized) bridge parameters.

    inverse_projection: (d, d_t), applied as ``row @ inverse_projection``.
    class_bias: (C, d_t), added to support shots of known class only.
    """

    inverse_projection: np.ndarray
    class_bias: np.ndarray
    eos_norm: EosNormEstimate
    forward_projection_ref: str = ""

    def __post_init__(self):
        self.inverse_projection = as_matrix(self.inverse_projection, "inverse_projection")
        self.class_bias = as_matrix(self.class_bias, "class_bias")
        if self.class_bias.shape[1] != self.inverse_projection.shape[1]:
            raise ShapeMismatch(
                "class_bias columns must match inverse_projection columns"
            )

    @classmethod
    def untrained(
        cls, proj: ProjectionPair, n_classes: int, eos_norm: EosNormEstimate,
        forward_projection_ref: str = "",
    ) -> "BridgeModel":
        """Identity bridge: pseudo-inverse weights, zero biases."""
        return cls(
            inverse_projection=proj.inverse.copy(),
            class_bias=np.zeros((n_classes, proj.eos_dim)),
            eos_norm=eos_norm,
            forward_projection_ref=forward_projection_ref,
        )

    @property
    def n_classes(self) -> int:
        return self.class_bias.shape[0]

    @property
    def parameter_count(self) -> int:
        return self.inverse_projection.size + self.class_bias.size

    def copy(self) -> "BridgeModel":
        return BridgeModel(
            self.inverse_projection.copy(),
            self.class_bias.copy(),
            self.eos_norm,
            self.forward_projection_ref,
        )


def _rescale_and_project(pre_images: np.ndarray, forward: np.ndarray, target_norm: float):
    norms = np.linalg.norm(pre_images, axis=1)
    if np.any(norms < ZERO_PREIMAGE_TOL):
        raise ZeroInverseImage(
            "an embedding has a numerically zero image under the inverse projection"
        )
    f_eos = pre_images * (target_norm / norms)[:, None]
    return f_eos, f_eos @ forward


def bridge_free(f_img, proj: ProjectionPair, eos_norm: EosNormEstimate):
    """Training-free bridge: rows -> (synthetic EOS tokens, text-modality rows)."""
    f_img = as_matrix(f_img, "image embeddings", cols=proj.shared_dim)
    return _rescale_and_project(f_img @ proj.inverse, proj.forward, eos_norm.value)


def bridge_trained(
    f_img,
    model: BridgeModel,
    forward: np.ndarray,
    class_ids=None,
    apply_bias: bool = False,
):
    """Bridge through learned weights, optionally adding per-class biases.

    The bias lands inside the norm rescaling (``u = row @ W + bias`` then
    ``u * eos_norm / |u|``), so every output EOS row has norm eos_norm
    exactly. With apply_bias=False the class_bias array is never touched.
    """
    forward = as_matrix(forward, "forward projection")
    f_img = as_matrix(f_img, "image embeddings", cols=model.inverse_projection.shape[0])
    pre = f_img @ model.inverse_projection
    if apply_bias:
        if class_ids is None:
            raise UnknownClass("apply_bias=True requires class ids")
        ids = np.asarray(class_ids, dtype=np.int64)
        if ids.ndim != 1 or ids.shape[0] != f_img.shape[0]:
            raise ShapeMismatch("class_ids must be one id per row")
        if ids.size and (ids.min() < 0 or ids.max() >= model.n_classes):
            raise UnknownClass(f"class ids must lie in [0, {model.n_classes})")
        pre = pre + model.class_bias[ids]
    return _rescale_and_project(pre, forward, model.eos_norm.value)
