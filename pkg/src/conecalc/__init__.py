"""conecalc: holomorphic functional calculus for sectorial operators and cone Laplacians."""

__version__ = "0.1.0"
