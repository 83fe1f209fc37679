"""Exception types shared across the package."""


class SkconeError(Exception):
    """Base class for all package errors."""


class ParseError(SkconeError):
    """Raised on malformed prepotential text.

    Carries the byte offset of the offending token so callers can point
    at the exact position in the input.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvaluationSingularity(SkconeError):
    """A quotient denominator vanished (|den| < 1e-300) during evaluation."""

    def __init__(self, node_text, magnitude):
        super().__init__(
            f"singular denominator {node_text!r} (|den| = {magnitude:.3e})"
        )
        self.node_text = node_text
        self.magnitude = magnitude


class DegenerateMetric(SkconeError):
    """Im(d2F) failed the nondegeneracy threshold at the requested point."""


class InadmissiblePoint(SkconeError):
    """Point outside the conic domain (|k| below the admissibility gate)."""


class NoConvergence(SkconeError):
    """Newton inversion of the flat chart did not reach tolerance."""


class AdmissibleRegionTooSmall(SkconeError):
    """Rejection sampling exhausted its attempt budget."""
