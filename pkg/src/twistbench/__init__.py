"""Twisted-suspension workbench.

Exact topology of twisted suspensions, plumbings and torus orbit gons,
plus numerically certified positive-Ricci doubly warped metrics.
"""

from . import fgab, grammar, intlat, orbitgon, plumbing, riccicert, topology, warpmetric

__all__ = [
    "fgab",
    "grammar",
    "intlat",
    "orbitgon",
    "plumbing",
    "riccicert",
    "topology",
    "warpmetric",
]
