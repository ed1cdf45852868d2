"""scikit-learn estimator wrappers around the bridge and the blended classifier.

`SemanticBridge` is a stateless transformer (fit only checks shapes): it maps
image embeddings into the text modality. `BridgeClassifier` assembles the
full few-shot inference state at fit time and predicts by blended argmax.
Both follow the usual conventions: constructor arguments are stored verbatim
so `get_params`/`clone` work, and learned attributes carry a trailing
underscore.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .bridge import BridgeModel, bridge_free, estimate_eos_norm
from .inference import BlendConfig, build_state, evaluate, predict, predict_logits
from .linalg import ProjectionPair
from .validation import as_matrix


class SemanticBridge(TransformerMixin, BaseEstimator):
    """Transformer from image embeddings to text-modality embeddings.

    Parameters
    ----------
    forward : array of shape (d_t, d)
        Text projection of the encoder pair. Must have full column rank for
        the bridged output to stay collinear with the input.
    prompt_eos : array of shape (C, P, d_t) or (C, d_t)
        EOS tokens used only to estimate the rescaling norm.
    """

    def __init__(self, forward=None, prompt_eos=None):
        self.forward = forward
        self.prompt_eos = prompt_eos

    def fit(self, X, y=None):
        forward = as_matrix(self.forward, "forward projection")
        self.projection_ = ProjectionPair.from_forward(forward)
        self.eos_norm_ = estimate_eos_norm(self.prompt_eos)
        self.n_features_in_ = forward.shape[1]
        as_matrix(X, "X", cols=self.n_features_in_)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = as_matrix(X, "X", cols=self.n_features_in_)
        _, f_txt = bridge_free(X, self.projection_, self.eos_norm_)
        return f_txt


class BridgeClassifier(ClassifierMixin, BaseEstimator):
    """Few-shot classifier over precomputed image embeddings.

    Parameters
    ----------
    forward : array of shape (d_t, d)
        Text projection of the encoder pair.
    text_embeddings : array of shape (C, d)
        One projected text embedding per class (prompt mean).
    prompt_eos : array of shape (C, P, d_t) or (C, d_t)
        Prompt EOS tokens; they set the bridge rescaling norm.
    model : BridgeModel, optional
        A trained bridge to use instead of the closed-form pseudo-inverse.
    blend : BlendConfig, optional
        Blend weights and sharpening; defaults to the uniform blend.
    temperature : float
        Softmax scale for the class-confusion statistics.
    """

    def __init__(
        self,
        forward=None,
        text_embeddings=None,
        prompt_eos=None,
        model: BridgeModel | None = None,
        blend: BlendConfig | None = None,
        temperature: float = 100.0,
    ):
        self.forward = forward
        self.text_embeddings = text_embeddings
        self.prompt_eos = prompt_eos
        self.model = model
        self.blend = blend
        self.temperature = temperature

    def fit(self, X, y):
        proj = ProjectionPair.from_forward(as_matrix(self.forward, "forward"))
        self.state_ = build_state(
            X,
            y,
            self.prompt_eos,
            self.text_embeddings,
            proj,
            model=self.model,
            blend=self.blend,
            temperature=self.temperature,
        )
        self.classes_ = np.arange(self.state_.n_classes)
        self.n_features_in_ = proj.shared_dim
        return self

    def predict(self, X):
        check_is_fitted(self)
        return predict(X, self.state_)

    def decision_function(self, X):
        """Blended logits, shape (n_queries, C)."""
        check_is_fitted(self)
        blended, _, _, _ = predict_logits(X, self.state_)
        return blended

    def evaluate(self, X, y):
        """Accuracy, confusion counts, and predictions in one pass."""
        check_is_fitted(self)
        return evaluate(X, y, self.state_)
