"""Single-qubit gates from twisted rapid passage sweeps: simulation and sweep optimisation."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateSimplexError,
    IntegrationError,
    InvalidStateError,
    NonUnitaryError,
    SweepDomainError,
    UnsupportedTwistOrder,
)
from .gates import GateName, reconstruct_composite, target_unitary  # noqa: E402
from .metrics import GateErrorReport, error_report, state_error, state_fidelity  # noqa: E402
from .propagator import (  # noqa: E402
    assemble_unitary,
    energies,
    frame_quantities,
    propagate_amplitudes,
    propagate_direct,
)
from .sweep import (  # noqa: E402
    LabSweepParams,
    SweepParams,
    control_field,
    from_lab,
    phase_programs,
    resonance_times,
    to_lab,
    twist_phase,
)

__all__ = [
    "DegenerateSimplexError",
    "GateErrorReport",
    "GateName",
    "IntegrationError",
    "InvalidStateError",
    "LabSweepParams",
    "NonUnitaryError",
    "SweepDomainError",
    "SweepParams",
    "UnsupportedTwistOrder",
    "assemble_unitary",
    "control_field",
    "energies",
    "error_report",
    "frame_quantities",
    "from_lab",
    "phase_programs",
    "propagate_amplitudes",
    "propagate_direct",
    "reconstruct_composite",
    "resonance_times",
    "state_error",
    "state_fidelity",
    "target_unitary",
    "to_lab",
    "twist_phase",
]
