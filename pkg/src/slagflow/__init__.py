"""slagflow: a desk-scale laboratory for special Lagrangian geometry.

Analytic ambient structures (flat Kahler tori, the Calabi model space,
cylindrical models, decaying perturbations of them), meshed Lagrangian tori
with discrete bounded-geometry measurement, Moser-trick symplectic transport,
Lagrangian mean curvature flow with quantitative decay monitors, hyper-Kahler
rotation, and the integer monodromy / Kodaira arithmetic of two-dimensional
torus fibrations.
"""

from . import ambient  # noqa: F401
from . import lagmesh  # noqa: F401

__version__ = "0.1.0"
