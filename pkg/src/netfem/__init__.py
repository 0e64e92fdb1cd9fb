"""netfem: mixed finite elements for pulsatile flow on 1D vessel networks."""

from . import forms, netgen, netgraph, pump, solvers, spaces, xsection  # noqa: F401

__version__ = "0.1.0"
