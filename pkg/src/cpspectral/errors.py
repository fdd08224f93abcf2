"""Exception types raised by the package.

All of them derive from ``ValueError`` so callers that only care about bad
input can catch that.
"""


class InvalidModelError(ValueError):
    """A spectral model violates its invariants (range, duplicate frequencies)."""


class DegenerateColumnError(ValueError):
    """A factor column carries no phase information (all zeros)."""


class UnderdeterminedError(ValueError):
    """A least-squares readout has more unknowns than observations."""


class EmptyModelError(ValueError):
    """An operation needs at least one spectral component and got none."""
