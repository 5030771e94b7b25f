"""Average ph-fractal Betti and Euler numbers of self-similar fractals."""

__version__ = "1.0.0"
