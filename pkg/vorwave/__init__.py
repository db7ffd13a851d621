"""
vorwave: steady solitary gravity water waves with general vorticity, computed in a
conformal strip.

The modules follow the pipeline: vorticity -> laminar -> sturm -> cm_reduction ->
strip_solver -> continuation -> diagnostics, with cli tying them together.
"""

__version__ = "0.1.0"
