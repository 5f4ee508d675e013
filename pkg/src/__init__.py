"""vsclab: numerical laboratory for stability and convergence rates of inverse medium scattering.

Sub-packages cover the Fourier-lattice field representation, the Lippmann-Schwinger
forward solver, geometrical-optics solutions, Tikhonov regularization and the
source-condition audits.
"""

__version__ = "0.3.0"
