"""In-memory few-shot task: embeddings, splits, text-side resources."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadManifest, EmptyClass, LabelOutOfRange, ShapeMismatch
from .validation import as_labels, as_matrix


@dataclass
class FewShotTask:
    """Everything inference and training need, detached from any file layout.

    Image embeddings arrive already projected into the shared space (d);
    prompt EOS tokens are pre-projection (d_t). ``w_txt`` is the forward text
    projection with shape (d_t, d), applied as ``eos_row @ w_txt``.
    """

    class_names: list
    shots: int
    train_x: np.ndarray
    train_y: np.ndarray
    val_x: np.ndarray
    val_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    prompt_eos: np.ndarray
    text_txt: np.ndarray
    w_txt: np.ndarray
    temperature: float = 100.0
    seed: int = 0
    provenance: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def dim(self) -> int:
        return self.w_txt.shape[1]

    @property
    def eos_dim(self) -> int:
        return self.w_txt.shape[0]

    def validate(self) -> "FewShotTask":
        c = self.n_classes
        if c < 2:
            raise BadManifest("a task needs at least two classes")
        self.w_txt = as_matrix(self.w_txt, "w_txt")
        d, d_t = self.dim, self.eos_dim
        if d > d_t:
            raise BadManifest(f"shared dim {d} exceeds eos dim {d_t}")
        self.prompt_eos = np.asarray(self.prompt_eos, dtype=np.float64)
        if self.prompt_eos.ndim != 3 or self.prompt_eos.shape[0] != c \
                or self.prompt_eos.shape[2] != d_t:
            raise ShapeMismatch("prompt_eos must have shape (C, P, d_t)")
        if self.prompt_eos.shape[1] == 0:
            raise EmptyClass("a class has no prompts")
        self.text_txt = as_matrix(self.text_txt, "text_txt", cols=d)
        if self.text_txt.shape[0] != c:
            raise ShapeMismatch("text_txt must have one row per class")
        for split in ("train", "val", "test"):
            x = as_matrix(getattr(self, f"{split}_x"), f"{split}_x", cols=d)
            y = as_labels(getattr(self, f"{split}_y"), c, f"{split}_y")
            if x.shape[0] != y.shape[0]:
                raise ShapeMismatch(f"{split} split: {x.shape[0]} rows, {y.shape[0]} labels")
            setattr(self, f"{split}_x", x)
            setattr(self, f"{split}_y", y)
        counts = np.bincount(self.train_y, minlength=c)
        if np.any(counts == 0):
            empty = int(np.flatnonzero(counts == 0)[0])
            raise EmptyClass(f"class {empty} has zero support shots")
        if self.shots < 1 or np.any(counts != self.shots):
            raise BadManifest("every class must have exactly `shots` support rows")
        if not self.temperature > 0:
            raise BadManifest("temperature must be positive")
        return self

    def class_mean_eos(self) -> np.ndarray:
        """Per-class EOS tokens averaged over prompts, shape (C, d_t)."""
        return self.prompt_eos.mean(axis=1)
