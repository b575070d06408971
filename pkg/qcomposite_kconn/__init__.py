"""q-composite key predistribution under on/off channels: link probabilities,
critical parameters and Monte Carlo k-connectivity experiments."""

__version__ = "0.1.0"
