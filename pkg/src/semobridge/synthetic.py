"""Synthetic few-shot tasks with a controllable modality gap.

The generative model places unit class directions with a fixed pairwise
cosine, then offsets each modality along its own orthogonal gap vector.
Image samples get anisotropic noise (stretched along a random fixed frame);
text prompts get small isotropic noise. Prompt EOS tokens are pre-images of
the text-side points under a randomly drawn, well-conditioned, full-column-
rank projection, plus a small component in the projection's null space so
the tokens occupy all of the EOS space.

``oracle_nearest_centroid`` is the reference classifier for equivalence
tests: plain Python loops, no code shared with the inference module.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidSpec, ShapeMismatch
from .linalg import pseudo_inverse
from .task import FewShotTask


@dataclass(frozen=True)
class SynthSpec:
    """Knobs for one synthetic task. Defaults are the calibrated test bed."""

    n_classes: int = 10
    shots: int = 16
    queries_per_class: int = 20
    val_per_class: int = 10
    prompts_per_class: int = 3
    dim: int = 32
    eos_dim: int = 48
    gap_magnitude: float = 0.8
    image_noise: float = 0.45
    text_noise: float = 0.05
    image_noise_anisotropy: float = 3.0
    inter_class_separation: float = 0.7
    temperature: float = 100.0
    seed: int = 0

    def validate(self) -> "SynthSpec":
        if self.n_classes < 2:
            raise InvalidSpec("n_classes must be >= 2")
        if self.shots < 1:
            raise InvalidSpec("shots must be >= 1")
        if self.queries_per_class < 1 or self.val_per_class < 1:
            raise InvalidSpec("query and validation splits must be non-empty")
        if self.prompts_per_class < 1:
            raise InvalidSpec("prompts_per_class must be >= 1")
        if self.dim > self.eos_dim:
            raise InvalidSpec("dim must not exceed eos_dim")
        if self.dim < self.n_classes + 3:
            raise InvalidSpec("dim must be at least n_classes + 3")
        for name in ("gap_magnitude", "image_noise", "text_noise"):
            if getattr(self, name) < 0:
                raise InvalidSpec(f"{name} must be >= 0")
        if self.image_noise_anisotropy < 1:
            raise InvalidSpec("image_noise_anisotropy must be >= 1")
        if not 0 <= self.inter_class_separation <= 1:
            raise InvalidSpec("inter_class_separation must lie in [0, 1]")
        if not self.temperature > 0:
            raise InvalidSpec("temperature must be positive")
        return self


def _orthonormal(rng, rows, cols):
    q, r = np.linalg.qr(rng.normal(size=(rows, cols)))
    # fix signs so the basis is a deterministic function of the input
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))


def generate(spec: SynthSpec) -> FewShotTask:
    """Draw one task. Same spec (including seed) -> byte-identical arrays."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    c, d, d_t = spec.n_classes, spec.dim, spec.eos_dim

    # class directions with exact pairwise cosine rho, plus two offset axes
    rho = max(0.0, 1.0 - spec.inter_class_separation)
    basis = _orthonormal(rng, d, c + 3)
    shared, residuals = basis[:, 0], basis[:, 1 : c + 1]
    directions = (math.sqrt(rho) * shared[:, None] + math.sqrt(1.0 - rho) * residuals).T
    gap_img = spec.gap_magnitude * basis[:, c + 1]
    gap_txt = spec.gap_magnitude * basis[:, c + 2]

    # anisotropic image-noise frame, RMS axis scale 1
    frame = _orthonormal(rng, d, d)
    scales = np.linspace(spec.image_noise_anisotropy, 1.0, d)
    scales = scales / math.sqrt(float(np.mean(scales**2)))

    def image_samples(n, class_id):
        noise = (rng.normal(size=(n, d)) * scales) @ frame.T
        return directions[class_id] + gap_img + spec.image_noise * noise

    per_class = spec.shots + spec.queries_per_class + spec.val_per_class
    xs = np.concatenate([image_samples(per_class, k) for k in range(c)])
    ys = np.repeat(np.arange(c), per_class)
    blocks = xs.reshape(c, per_class, d)
    train_x = blocks[:, : spec.shots].reshape(-1, d)
    val_x = blocks[:, spec.shots : spec.shots + spec.val_per_class].reshape(-1, d)
    test_x = blocks[:, spec.shots + spec.val_per_class :].reshape(-1, d)
    train_y = ys.reshape(c, per_class)[:, : spec.shots].ravel()
    val_y = ys.reshape(c, per_class)[:, spec.shots : spec.shots + spec.val_per_class].ravel()
    test_y = ys.reshape(c, per_class)[:, spec.shots + spec.val_per_class :].ravel()

    # well-conditioned full-column-rank forward projection (d_t, d)
    left = _orthonormal(rng, d_t, d)
    right = _orthonormal(rng, d, d)
    w_txt = left @ np.diag(np.linspace(0.8, 1.25, d)) @ right.T
    w_inv = pseudo_inverse(w_txt)
    null_basis = _null_space_basis(left, rng)

    targets = (
        directions[:, None, :]
        + gap_txt
        + spec.text_noise * rng.normal(size=(c, spec.prompts_per_class, d))
    )
    prompt_eos = targets @ w_inv
    if null_basis.shape[1]:
        null_coeff = spec.text_noise * rng.normal(
            size=(c, spec.prompts_per_class, null_basis.shape[1])
        )
        prompt_eos = prompt_eos + null_coeff @ null_basis.T
    text_txt = prompt_eos.mean(axis=1) @ w_txt

    return FewShotTask(
        class_names=[f"class_{k:02d}" for k in range(c)],
        shots=spec.shots,
        train_x=train_x,
        train_y=train_y,
        val_x=val_x,
        val_y=val_y,
        test_x=test_x,
        test_y=test_y,
        prompt_eos=prompt_eos,
        text_txt=text_txt,
        w_txt=w_txt,
        temperature=spec.temperature,
        seed=spec.seed,
        provenance={"synthetic": asdict(spec)},
    ).validate()


def _null_space_basis(orthonormal_cols, rng):
    """Orthonormal basis of the complement of the given column space."""
    d_t, d = orthonormal_cols.shape
    if d_t == d:
        return np.zeros((d_t, 0))
    probe = np.concatenate([orthonormal_cols, rng.normal(size=(d_t, d_t - d))], axis=1)
    q, _ = np.linalg.qr(probe)
    return q[:, d:]


def oracle_nearest_centroid(queries, centroids):
    """Reference nearest-centroid labels by cosine, ties to the lowest index.

    Deliberately naive: plain Python loops over lists so equivalence tests
    cannot share a code path with the production classifier.
    """
    q_rows = [list(map(float, row)) for row in np.asarray(queries)]
    c_rows = [list(map(float, row)) for row in np.asarray(centroids)]
    if not c_rows:
        raise ShapeMismatch("need at least one centroid")
    width = len(c_rows[0])
    for row in q_rows + c_rows:
        if len(row) != width:
            raise ShapeMismatch("queries and centroids must share a dimension")
    c_norms = [math.sqrt(sum(v * v for v in row)) for row in c_rows]
    labels = []
    for q in q_rows:
        q_norm = math.sqrt(sum(v * v for v in q))
        best, best_cos = 0, -math.inf
        for k, (c_row, c_norm) in enumerate(zip(c_rows, c_norms)):
            dot = sum(a * b for a, b in zip(q, c_row))
            cos = dot / (q_norm * c_norm)
            if cos > best_cos:
                best, best_cos = k, cos
        labels.append(best)
    return labels
