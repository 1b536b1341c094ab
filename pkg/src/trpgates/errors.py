"""Exception types raised by trpgates."""


class SweepDomainError(ValueError):
    """A dimensionless time lies outside the sweep window."""


class UnsupportedTwistOrder(ValueError):
    """The laboratory translation key only exists for quartic twist."""


class IntegrationError(RuntimeError):
    """The adaptive integrator failed (step-size underflow or step budget)."""


class NonUnitaryError(ValueError):
    """A matrix that should be unitary is not, usually an upstream integrator failure."""


class InvalidStateError(ValueError):
    """A state vector or density matrix fails its validity checks."""


class DegenerateSimplexError(RuntimeError):
    """The Nelder-Mead simplex collapsed onto a line or point."""
