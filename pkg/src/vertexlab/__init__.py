"""vertexlab: stochastic higher spin six vertex model and q-TASEP toolkit."""

__version__ = "0.1.0"
