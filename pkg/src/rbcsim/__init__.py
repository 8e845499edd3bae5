"""Diffraction and power-budget simulator for self-aligned resonant-beam links.

Submodules:

``field``   sampled complex fields and their moments
``rays``    paraxial ray matrices, cavity stability and ray capture
``wave``    field-transfer operators and the cavity round trip
``foxli``   power iteration for the self-reproducing mode
``power``   output-power model and radiant-exposure check
``config``, ``sweep``, ``cli``   experiment orchestration
"""

__version__ = "0.1.0"
