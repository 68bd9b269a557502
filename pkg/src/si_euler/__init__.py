"""Scale-invariant (zero-homogeneous) solutions of the 2D Euler equations.

Submodules are imported on demand so that the command-line entry point can
configure thread limits before numerical libraries load.
"""

__version__ = "0.1.0"
