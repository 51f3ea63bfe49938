"""Ground-state toolkit for the generalized (two-photon, Stark, biased) Rabi model"""

__version__ = "1.0.0"
