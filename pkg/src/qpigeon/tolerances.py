"""Numerical tolerances used across the package and its tests.

Two levels are distinguished on purpose: STRUCTURAL covers checks that go
through eigensolvers or matrix exponentials (unitarity, positivity), while
ARITHMETIC covers plain linear-algebra identities that should hold to
near machine precision.
"""

STRUCTURAL = 1e-10
ARITHMETIC = 1e-12

# Probability tagging: a conditional probability within this distance of 0 or 1
# is reported as impossible / certain.
CERTAINTY = 1e-9
