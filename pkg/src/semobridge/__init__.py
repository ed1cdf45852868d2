"""Few-shot classification by bridging image embeddings into the text modality."""

from .bridge import BridgeModel, EosNormEstimate, bridge_free, bridge_trained, estimate_eos_norm
from .errors import SemoBridgeError
from .hpsearch import SearchSpec, SearchResult, search_blend, search_task
from .inference import BlendConfig, ClassifierState, build_state, evaluate, predict
from .linalg import ProjectionPair, pseudo_inverse
from .synthetic import SynthSpec, generate, oracle_nearest_centroid
from .task import FewShotTask
from .training import TrainConfig, TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "BlendConfig",
    "BridgeModel",
    "ClassifierState",
    "EosNormEstimate",
    "FewShotTask",
    "ProjectionPair",
    "SearchResult",
    "SearchSpec",
    "SemoBridgeError",
    "SynthSpec",
    "TrainConfig",
    "TrainResult",
    "bridge_free",
    "bridge_trained",
    "build_state",
    "estimate_eos_norm",
    "evaluate",
    "generate",
    "oracle_nearest_centroid",
    "predict",
    "pseudo_inverse",
    "search_blend",
    "search_task",
    "train",
]
