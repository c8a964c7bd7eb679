"""Numerical companion for concentrating solutions of slightly sub- and
supercritical Yamabe-type problems along a minimal submanifold K.

Subpackages and modules: ``radial`` (graded grids, mode operators), ``bubble``
(standard bubble, kernels, eigenpair), ``constants`` (projection constants),
``manifold`` (discrete K, curvature data, Omega, Jacobi operator),
``singular`` (attractive / repulsive singular equations), ``construction``
(linear theory, H1, reduced equations, residual scaling) and ``cli``.
"""

__version__ = "0.1.0"
