"""Target one-qubit gates and the identities that complete the universal set.

Matrices are in the computational basis {|0>, |1>} with sigma_z |i> = (-1)^i |i>.
The phase and pi/8 gates are not targeted directly; they follow from

    U_P    = e^{i pi/4} U_NOT V_P
    U_pi/8 = e^{i pi/8} U_NOT V_pi/8
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import NonUnitaryError

UNITARY_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


class GateName(str, enum.Enum):
    HADAMARD = "hadamard"
    NOT = "not"
    V_P = "v_p"
    V_PI8 = "v_pi8"
    PHASE = "phase"
    PI8 = "pi8"
    IDENTITY = "identity"

    @property
    def composite(self) -> bool:
        return self in (GateName.PHASE, GateName.PI8)


# gates a single TRP sweep is optimised for
TRP_TARGETS = (GateName.HADAMARD, GateName.V_P, GateName.V_PI8, GateName.NOT)


def _v(angle: float) -> np.ndarray:
    return np.array([[0, np.exp(1j * angle)], [np.exp(-1j * angle), 0]])


_TARGETS = {
    GateName.HADAMARD: np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0),
    GateName.NOT: SIGMA_X,
    GateName.V_P: _v(np.pi / 4),
    GateName.V_PI8: _v(np.pi / 8),
    GateName.PHASE: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateName.PI8: np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]]),
    GateName.IDENTITY: IDENTITY,
}


def gate_name(name) -> GateName:
    try:
        return GateName(name)
    except ValueError:
        known = ", ".join(g.value for g in GateName)
        raise ValueError(f"unknown gate {name!r}; known gates: {known}") from None


def target_unitary(name) -> np.ndarray:
    """Exact target matrix (a fresh copy)."""
    return _TARGETS[gate_name(name)].copy()


def unitarity_error(u) -> float:
    u = np.asarray(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), "fro"))


def check_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    """Return ``u`` as a complex 2x2 array, raising NonUnitaryError if U^dag U != 1."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u.shape}")
    err = unitarity_error(u)
    if not err <= tol:
        raise NonUnitaryError(f"matrix is not unitary: ||U^dag U - 1||_F = {err:.3e} > {tol:g}")
    return u


def reconstruct_composite(name, u_not, v) -> np.ndarray:
    """Build the phase or pi/8 gate from a NOT gate and the matching V gate."""
    name = gate_name(name)
    u_not = check_unitary(u_not, 1e-8)
    v = check_unitary(v, 1e-8)
    if name is GateName.PHASE:
        return np.exp(1j * np.pi / 4) * (u_not @ v)
    if name is GateName.PI8:
        return np.exp(1j * np.pi / 8) * (u_not @ v)
    raise ValueError(f"{name.value} is not a composite gate")


def matrix_to_json(u) -> list:
    """[[ [re, im], ... ], ...] nested lists for JSON output."""
    u = np.asarray(u, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in u]
