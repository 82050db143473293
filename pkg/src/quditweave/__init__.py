"""Switch-free photonic-qudit entanglement generation toolkit.

Library layers, bottom up:

* ``states``       dense density-matrix engine and Bell utilities
* ``source``       time-bin qudit amplitudes and laser-noise sampling
* ``cavity``       reflection coefficients and spin-photon scattering
* ``erasure``      delay-loop erasure: coefficients, probabilities, oracle
* ``decoherence``  memory and gate-error channels
* ``pipeline``     end-to-end protocol producing the 2m-qubit register
* ``correlation``  independent-Pauli-model fit and the T_min measure
* ``purification`` m-to-1 purification circuits and evolutionary search
* ``qec``          teleportation-based [[5,1,3]] / [[4,2,2]] evaluation
* ``cli``          experiment configs, sweeps, CSV/JSON emission
"""

__version__ = "0.1.0"
