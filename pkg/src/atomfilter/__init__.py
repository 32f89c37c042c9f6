"""Velocity selection of ultra-cold atoms with a barrier-well-barrier filter.

Modules:

* ``potential``  - potential shapes, units and wavenumber scales
* ``scattering`` - transmission amplitudes (closed form, transfer matrix, ODE)
* ``resonance``  - resonance peaks, depth scans and the alpha / beta laws
* ``poles``      - S-matrix poles, collision and threshold analysis
* ``wavepacket`` - 1D Gross-Pitaevskii simulation of the filtering experiment
* ``cli``        - config-driven runs and figure datasets
"""

__version__ = "0.1.0"
