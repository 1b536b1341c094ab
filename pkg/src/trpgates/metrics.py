"""Gate error bounds and fidelities.

With D = U_a - U_t and P = D^dag D, the worst-case error probability over
input states obeys P_e <= d* <= Tr P, where d* is the largest eigenvalue of P.
Tr P is what the sweep optimizer minimises; d* is tighter; sampling P_e(psi)
over Haar-random inputs shows how tight.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidStateError
from .gates import check_unitary

INPUT_UNITARY_TOL = 1e-8
DEFAULT_SAMPLES = 1000
DEFAULT_SEED = 20240601


@dataclass(frozen=True)
class GateErrorReport:
    tr_p: float
    d_star: float
    fidelity: float
    sampled_pe_max: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def difference_operator(u_a, u_t) -> np.ndarray:
    return np.asarray(u_a, dtype=complex) - np.asarray(u_t, dtype=complex)


def positive_operator(u_a, u_t) -> np.ndarray:
    d = difference_operator(u_a, u_t)
    return d.conj().T @ d


def trace_p(u_a, u_t) -> float:
    """Tr P = ||U_a - U_t||_F^2."""
    d = difference_operator(u_a, u_t)
    return float(np.sum(d.real**2 + d.imag**2))


def d_star(u_a, u_t) -> float:
    """Largest eigenvalue of P from the closed-form 2x2 Hermitian eigensolve."""
    p = positive_operator(u_a, u_t)
    a = p[0, 0].real
    c = p[1, 1].real
    b = abs(p[0, 1])
    mean = 0.5 * (a + c)
    return float(mean + np.hypot(0.5 * (a - c), b))


def gate_fidelity(u_a, u_t) -> float:
    """(1/2) Re Tr(U_a^dag U_t), equal to 1 - Tr P / 4 for unitary inputs."""
    u_a = np.asarray(u_a, dtype=complex)
    u_t = np.asarray(u_t, dtype=complex)
    return float(0.5 * np.trace(u_a.conj().T @ u_t).real)


def haar_states(samples: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """(samples, 2) Haar-random pure states from normalised complex Gaussians."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((samples, 2)) + 1j * rng.standard_normal((samples, 2))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _state_errors(u_a, u_t, psis) -> np.ndarray:
    d = difference_operator(u_a, u_t)
    u_t = np.asarray(u_t, dtype=complex)
    xi = psis @ d.T  # rows: D psi
    psi_t = psis @ u_t.T  # rows: U_t psi
    e1 = np.einsum("ij,ij->i", psi_t.conj(), xi)
    total = np.einsum("ij,ij->i", xi.conj(), xi).real
    return np.clip(total - np.abs(e1) ** 2, 0.0, None)


def state_error(u_a, u_t, psi) -> float:
    """Error probability P_e(psi): weight of U_a psi outside the target state U_t psi."""
    psi = np.asarray(psi, dtype=complex).reshape(2)
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise InvalidStateError("psi must be normalised")
    return float(min(_state_errors(u_a, u_t, psi[None, :])[0], 1.0))


def error_report(u_a, u_t, samples: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED,
                 tol: float = INPUT_UNITARY_TOL) -> GateErrorReport:
    u_a = check_unitary(u_a, tol)
    u_t = check_unitary(u_t, tol)
    pe = _state_errors(u_a, u_t, haar_states(samples, seed)) if samples > 0 else np.zeros(1)
    return GateErrorReport(
        tr_p=trace_p(u_a, u_t),
        d_star=d_star(u_a, u_t),
        fidelity=gate_fidelity(u_a, u_t),
        sampled_pe_max=float(pe.max()),
        samples=int(samples),
        seed=int(seed),
    )


def check_density_matrix(rho, tol: float = 1e-12) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidStateError(f"expected a 2x2 density matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvalidStateError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise InvalidStateError("density matrix has a negative eigenvalue")
    return rho


def density_matrix(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(2)
    return np.outer(psi, psi.conj())


def state_fidelity(rho_exp, rho_t) -> float:
    """Tr sqrt(sqrt(rho_exp) rho_t sqrt(rho_exp)) for 2x2 density matrices.

    For 2x2 matrices M = sqrt(rho) sigma sqrt(rho) has Tr M = Tr(rho sigma) and
    det M = det(rho) det(sigma), so (Tr sqrt M)^2 = Tr M + 2 sqrt(det M).
    """
    rho = check_density_matrix(rho_exp)
    sigma = check_density_matrix(rho_t)
    tr = np.trace(rho @ sigma).real
    det = max(np.linalg.det(rho).real, 0.0) * max(np.linalg.det(sigma).real, 0.0)
    return float(min(np.sqrt(max(tr + 2.0 * np.sqrt(det), 0.0)), 1.0))
