"""Monte Carlo laboratory for random polygonal group presentations.

Samples random presentations in which every relator is a cyclically
reduced word of one fixed length, certifies freeness by iterated
generator elimination, certifies fixed-point behavior on trees via exact
covering checks on positive presentations, computes abelianization
invariants exactly, and sweeps parameter grids to localize phase
transitions.
"""

__version__ = "0.1.0"
