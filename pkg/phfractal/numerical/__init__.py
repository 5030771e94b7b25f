"""Pre-fractal rasterization, distance transform, cubical complexes and persistence."""
