"""Driven dissipative Jaynes-Cummings oscillator simulator.

Intensity-field correlations by the quantum regression formula and,
operationally, from wave-particle correlator trajectories (photon-counting
collapses plus conditional homodyne diffusion).
"""

__version__ = "0.1.0"

from .params import SystemParams

__all__ = ["SystemParams", "__version__"]
