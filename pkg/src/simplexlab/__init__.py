"""Numerical laboratory for truncated simplex Hilbert forms.

Modules:

- :mod:`~simplexlab.kernels`: kernels, the dyadic cutoff and truncated pieces
- :mod:`~simplexlab.gridfunc`: sampled functions on boxes
- :mod:`~simplexlab.grid_forms`: quadrature of the form, tiles and their sums
- :mod:`~simplexlab.regularity`: atomic norms, separation, regularity decomposition
- :mod:`~simplexlab.trees`: tree sums, maximal functions and tree selection
- :mod:`~simplexlab.encodings`: beta-forms, change of variables, modulated encodings
- :mod:`~simplexlab.lab_cli`: the ``simplexlab`` command line
"""

__version__ = "0.1.0"

from .gridfunc import GridFunction  # noqa: E402
from .grid_forms import QuadratureGrid, Tile, evaluate_form, evaluate_tile  # noqa: E402
from .kernels import KernelSpec, ScaleWindow, get_kernel, make_cutoff, psi, psi_window  # noqa: E402

__all__ = [
    "GridFunction",
    "KernelSpec",
    "QuadratureGrid",
    "ScaleWindow",
    "Tile",
    "evaluate_form",
    "evaluate_tile",
    "get_kernel",
    "make_cutoff",
    "psi",
    "psi_window",
]
