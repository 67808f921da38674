"""Generalized category discovery on feature vectors: semi-supervised
split/merge Gaussian mixtures with prototypical contrastive refinement."""
from .config import RunConfig, default_k_init
from .datasetio import FeatureDataset, SynthSpec, gen_synth, load_features, save_features
from .estimate import estimate_k_loop, probe_k_on_labelled
from .evalmetrics import EvalReport, hungarian_acc, k_error
from .kernels import BACKEND
from .sskmeans import LabelConstraints

__version__ = "0.1.0"
