"""Latent off-policy learning of reward-shaped policy ensembles."""

__version__ = "0.1.0"
