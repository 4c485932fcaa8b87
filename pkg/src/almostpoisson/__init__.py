"""Almost-Poisson brackets of nonholonomically constrained systems.

Layers, bottom up: ``symexpr`` (expressions), ``exterior`` (multivectors and
forms), ``framecraft`` (frames, quasi-momenta, constrained and compressed
brackets), ``jacobi`` (structure verdicts), ``dynamics`` (flows), and the
``cli`` front end with ``presets``, ``config`` and ``report``.
"""

from . import config, dynamics, exterior, framecraft, jacobi, presets, report, symexpr

__version__ = "0.1.0"

__all__ = ["config", "dynamics", "exterior", "framecraft", "jacobi", "presets", "report", "symexpr", "__version__"]
