"""lineup: train an AutoML-style candidate grid over tabular data and compare
the models through metrics, Shapley explanations, and pairwise probability
scatter panels, served over a read-only HTTP API."""

__version__ = "0.1.0"
