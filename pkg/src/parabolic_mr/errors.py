"""Exception hierarchy.

Three failure families matter to callers (and map onto CLI exit codes):
plain ``ValueError`` for bad inputs or configuration, ``PhysicsError`` for
parameter regimes where the model refuses to produce an answer, and
``ConvergenceError`` for numerical iteration failures.
"""


class PhysicsError(Exception):
    """The model is well-posed but the requested regime has no answer."""


class DissociationError(PhysicsError):
    """Quadratic field term overwhelms the trap: sector unbounded below."""


class UnidentifiableError(PhysicsError):
    """Measured lines carry no information about the oscillator frequency."""


class InversionError(PhysicsError):
    """Frequency inversion failed (e.g. bracket does not contain an optimum)."""


class ConvergenceError(RuntimeError):
    """A numerical procedure exhausted its iteration or refinement budget."""
