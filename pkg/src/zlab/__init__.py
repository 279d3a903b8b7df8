"""Spectral toolkit for the radial Zakharov-type system with wave dispersion |grad|^gamma.

Modules: ``spectral`` (radial transform and propagators), ``littlewood_paley``
(dyadic projectors and paraproducts), ``bilinear`` (normal-form operators),
``norms``, ``evolution`` (direct and normal-form solvers), ``diagnostics``
and ``runner_io`` (configs, runs and manifests).
"""

__version__ = "0.1.0"
