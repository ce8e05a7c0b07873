"""Compositional product-Bernoulli expert models for binary data."""

from .compose import DELTA, Rule, RuleKind, compose, compose_template
from .inference import extremal_responsibilities, lmp_infer
from .likelihood import log_likelihood, mix_uniform, truncate_template
from .model import ExpertModel, GeometricModel, Representation
from .transform import TransformGrid

__version__ = "0.1.0"
