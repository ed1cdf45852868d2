"""Similarity-distribution diagnostics and the CSV surfaces of every module.

The histogram report compares cosine similarity between same-class
("paired") and cross-class ("unpaired") combinations in three modes:

    intra    image embedding vs image embedding, each unordered pair once
    text     image embedding vs projected class text embedding
    bridged  bridged query EOS token vs class-mean prompt EOS token

Counts land in 100 uniform bins over [-1, 1]. The overlap statistic sums
the bin-wise minimum of the two normalized histograms: 1 means paired and
unpaired similarities are indistinguishable, 0 means separable. A working
bridge shows lower overlap for bridged comparisons than intra-modal ones.

All CSVs are UTF-8 with a header row; floats keep full repr precision so
identical runs produce identical bytes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bridge import BridgeModel, bridge_trained, estimate_eos_norm
from .errors import EmptyInput, ShapeMismatch
from .linalg import ProjectionPair, cosine_matrix
from .task import FewShotTask
from .validation import as_labels, as_matrix

HIST_BINS = 100
BIN_EDGES = np.linspace(-1.0, 1.0, HIST_BINS + 1)

HISTOGRAM_MODES = ("intra", "text", "bridged")


@dataclass(frozen=True)
class SimilarityHistogram:
    mode: str
    paired: np.ndarray  # bin counts, same-class comparisons
    unpaired: np.ndarray

    def overlap(self) -> float:
        """Min-sum of the normalized histograms; in [0, 1]."""
        p, u = self.paired, self.unpaired
        if p.sum() == 0 or u.sum() == 0:
            raise EmptyInput(f"{self.mode}: a histogram side has no samples")
        return float(np.minimum(p / p.sum(), u / u.sum()).sum())


def _histogram(values: np.ndarray) -> np.ndarray:
    counts, _ = np.histogram(values, bins=BIN_EDGES)
    return counts


def _from_mask(mode: str, cosines: np.ndarray, same: np.ndarray) -> SimilarityHistogram:
    return SimilarityHistogram(
        mode=mode,
        paired=_histogram(cosines[same]),
        unpaired=_histogram(cosines[~same]),
    )


def intra_modal_histogram(x, labels) -> SimilarityHistogram:
    """Cosines over unordered image pairs, split by label agreement."""
    x = as_matrix(x, "embeddings")
    if x.shape[0] < 2:
        raise EmptyInput("need at least two rows for pairwise similarities")
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != x.shape[0]:
        raise ShapeMismatch("need one label per row")
    labels = labels.astype(np.int64)
    cos = cosine_matrix(x, x)
    i, j = np.triu_indices(x.shape[0], k=1)
    return _from_mask("intra", cos[i, j], labels[i] == labels[j])


def image_text_histogram(x, labels, text_txt) -> SimilarityHistogram:
    """Image embeddings against every class text embedding."""
    x = as_matrix(x, "embeddings")
    text_txt = as_matrix(text_txt, "text embeddings")
    labels = as_labels(labels, text_txt.shape[0])
    cos = cosine_matrix(x, text_txt)
    same = labels[:, None] == np.arange(text_txt.shape[0])[None, :]
    return _from_mask("text", cos, same)


def bridged_eos_histogram(
    x, labels, prompt_eos, proj: ProjectionPair, model: BridgeModel | None = None
) -> SimilarityHistogram:
    """Bridged EOS tokens (no bias: these are queries) vs class-mean EOS."""
    prompt_eos = np.asarray(prompt_eos, dtype=np.float64)
    if prompt_eos.ndim == 2:
        prompt_eos = prompt_eos[:, None, :]
    mean_eos = prompt_eos.mean(axis=1)
    labels = as_labels(labels, mean_eos.shape[0])
    if model is None:
        model = BridgeModel.untrained(
            proj, mean_eos.shape[0], estimate_eos_norm(prompt_eos)
        )
    f_eos, _ = bridge_trained(x, model, proj.forward, apply_bias=False)
    cos = cosine_matrix(f_eos, mean_eos)
    same = labels[:, None] == np.arange(mean_eos.shape[0])[None, :]
    return _from_mask("bridged", cos, same)


def similarity_report(
    task: FewShotTask,
    proj: ProjectionPair,
    model: BridgeModel | None = None,
    split: str = "test",
) -> dict:
    """All three histograms over one split; keys are the mode names."""
    x = getattr(task, f"{split}_x")
    labels = getattr(task, f"{split}_y")
    return {
        "intra": intra_modal_histogram(x, labels),
        "text": image_text_histogram(x, labels, task.text_txt),
        "bridged": bridged_eos_histogram(x, labels, task.prompt_eos, proj, model),
    }


# -- CSV writers ----------------------------------------------------------


def _open_writer(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = path.open("w", newline="", encoding="utf-8")
    return handle, csv.writer(handle)


def write_similarity_csv(path, hist: SimilarityHistogram) -> Path:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["bin_lo", "bin_hi", "paired_count", "unpaired_count"])
        for k in range(HIST_BINS):
            writer.writerow(
                [BIN_EDGES[k], BIN_EDGES[k + 1], int(hist.paired[k]),
                 int(hist.unpaired[k])]
            )
    return Path(path)


def write_history_csv(path, history) -> Path:
    """Per-epoch losses; val_acc is empty on epochs without evaluation."""
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(
            ["epoch", "l_img", "l_txte", "l_txtp", "l_cons", "l_bias",
             "total", "val_acc"]
        )
        for row in history:
            b = row.losses
            writer.writerow(
                [row.epoch, b.l_img, b.l_txte, b.l_txtp, b.l_cons, b.l_bias,
                 b.total,
                 "" if row.val_accuracy is None else row.val_accuracy]
            )
    return Path(path)


def write_trace_csv(path, trace) -> Path:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(
            ["idx", "lambda1", "lambda2", "lambda3", "alpha", "beta", "gamma",
             "theta", "val_acc"]
        )
        for entry in trace:
            b = entry.blend
            writer.writerow(
                [entry.index, b.lambda1, b.lambda2, b.lambda3, b.alpha, b.beta,
                 b.gamma, b.theta, entry.accuracy]
            )
    return Path(path)


def write_bias_norms_csv(path, model: BridgeModel, class_names) -> Path:
    if len(class_names) != model.n_classes:
        raise EmptyInput("need one class name per bias row")
    norms = np.linalg.norm(model.class_bias, axis=1)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["class_index", "class_name", "bias_norm"])
        for idx, (name, norm) in enumerate(zip(class_names, norms)):
            writer.writerow([idx, name, float(norm)])
    return Path(path)


def write_confusion_csv(path, confusion: np.ndarray, class_names) -> Path:
    """Counts with true classes as rows and predicted classes as columns."""
    confusion = np.asarray(confusion)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["true_index", "true_name", *class_names])
        for idx, name in enumerate(class_names):
            writer.writerow([idx, name, *confusion[idx].astype(int).tolist()])
    return Path(path)
