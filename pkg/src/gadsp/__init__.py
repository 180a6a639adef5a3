"""Exact solver for generalized additive Deligne-Simpson problems.

Decides, with replayable certificates, whether prescribed truncated orbits
of local normal forms at each singular point admit an irreducible tuple of
principal parts with residues summing to zero, by building the associated
quiver data and testing the dimension vector against the lattice-restricted
root-decomposition criterion; also realizes the matrix-level operations
(gauge reduction, additions, middle convolution) that mirror the quiver
reflections.
"""

__all__ = [
    "builder",
    "cli",
    "gensamples",
    "matrixops",
    "numeric",
    "quiver",
    "roots",
    "serialize",
    "sigma",
    "spectral",
]
