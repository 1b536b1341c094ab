"""Qubit dynamics across a TRP sweep.

In dimensionless time the Schrodinger equation reads

    i d(psi)/d(tau) = (1/lambda) sigma . f(tau) psi,   f = (cos phi, sin phi, tau)

with instantaneous energies +-sqrt(1 + tau**2) (units of b).  The state is
expanded in the instantaneous eigenbasis,

    psi = S exp(-i Theta_-) |E_-> - I exp(-i Theta_+) |E_+>,
    Theta_+- = int (eps_+- / lambda - gammadot_+-) d(tau),

and S, I obey

    dS/dtau = -conj(Gamma) exp(-i Phi) I,    dI/dtau = Gamma exp(+i Phi) S,
    Phi = int delta d(tau),   delta = 2 sqrt(1+tau**2)/lambda - (gammadot_+ - gammadot_-).

Eigenvectors use the spin-1/2 polar gauge with polar angle
theta = arccos(tau / sqrt(1+tau**2)) and azimuth phi(tau):

    |E_+> = (cos(theta/2), e^{i phi} sin(theta/2))
    |E_-> = (sin(theta/2), -e^{i phi} cos(theta/2))

In this gauge Theta_+ + Theta_- = phi(tau) - phi(tau_start), so the two
phases follow from Phi alone.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _ode
from .errors import IntegrationError, InvalidStateError
from .sweep import SweepParams, control_field, resonance_times, twist_phase, twist_rate

RTOL = 1e-12
ATOL = 1e-14

CONVENTIONS = ("eigenbasis", "computational")


class AmplitudePair(NamedTuple):
    S: complex
    I: complex


@dataclass(frozen=True)
class FrameQuantities:
    delta: np.ndarray | float
    gamma_coupling: np.ndarray | complex
    gammadot_minus: np.ndarray | float
    gammadot_plus: np.ndarray | float


@dataclass(frozen=True)
class Trajectory:
    """Eigenbasis amplitudes sampled at the integrator's accepted steps."""

    taus: np.ndarray
    amplitudes: np.ndarray  # (N, 2) complex: columns S, I
    phase_integral: np.ndarray  # Phi(tau) at each sample
    start_level: str
    max_norm_drift: float
    steps: int

    @property
    def final(self) -> AmplitudePair:
        S, I = self.amplitudes[-1]
        return AmplitudePair(complex(S), complex(I))

    @property
    def transition_probability(self) -> float:
        """Final population of the level the qubit did not start in."""
        S, I = self.amplitudes[-1]
        return float(abs(I) ** 2 if self.start_level == "minus" else abs(S) ** 2)

    @property
    def prob_plus(self) -> np.ndarray:
        return np.abs(self.amplitudes[:, 1]) ** 2

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "re_S", "im_S", "re_I", "im_I", "prob_plus"])
        for tau, (S, I), p in zip(self.taus, self.amplitudes, self.prob_plus):
            w.writerow([repr(float(v)) for v in (tau, S.real, S.imag, I.real, I.imag, p)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def energies(sweep: SweepParams, tau):
    """Instantaneous energies (eps_-, eps_+) = (-sqrt(1+tau^2), +sqrt(1+tau^2))."""
    r = np.sqrt(1.0 + np.asarray(tau, dtype=float) ** 2)
    if r.ndim == 0:
        return (-float(r), float(r))
    return (-r, r)


def _half_angles(tau):
    # cos^2(theta/2) = (r + tau)/(2r), sin^2(theta/2) = (r - tau)/(2r), both cancellation-free
    tau = np.asarray(tau, dtype=float)
    r = np.sqrt(1.0 + tau * tau)
    big = r + np.abs(tau)
    small = 1.0 / big
    plus = np.where(tau >= 0, big, small)
    minus = np.where(tau >= 0, small, big)
    return np.sqrt(plus / (2 * r)), np.sqrt(minus / (2 * r))


def eigenvectors(sweep: SweepParams, tau, clamp: bool = False):
    """(|E_->, |E_+>) in the computational basis, polar gauge."""
    phi = np.asarray(twist_phase(sweep, tau, clamp=clamp))
    c, s = _half_angles(tau)
    eph = np.exp(1j * phi)
    e_minus = np.stack([s + 0j, -eph * c], axis=-1)
    e_plus = np.stack([c + 0j, eph * s], axis=-1)
    return e_minus, e_plus


def hamiltonian(sweep: SweepParams, tau, clamp: bool = False) -> np.ndarray:
    """sigma . f(tau), the Hamiltonian in units of b."""
    fx, fy, fz = np.moveaxis(control_field(sweep, tau, clamp=clamp), -1, 0)
    h = np.empty(np.shape(fx) + (2, 2), dtype=complex)
    h[..., 0, 0] = fz
    h[..., 1, 1] = -fz
    h[..., 0, 1] = fx - 1j * fy
    h[..., 1, 0] = fx + 1j * fy
    return h


def frame_quantities(sweep: SweepParams, tau) -> FrameQuantities:
    """delta, Gamma and the geometric-phase rates at dimensionless time tau."""
    twist_phase(sweep, tau)  # window check
    tau = np.asarray(tau, dtype=float)
    r2 = 1.0 + tau * tau
    r = np.sqrt(r2)
    rate = np.asarray(twist_rate(sweep, tau))
    cos_theta = tau / r
    gd_plus = -0.5 * rate * (1.0 - cos_theta)
    gd_minus = -0.5 * rate * (1.0 + cos_theta)
    gamma = -0.5 / r2 - 0.5j * rate / r
    delta = 2.0 * r / sweep.lam - (gd_plus - gd_minus)
    if tau.ndim == 0:
        return FrameQuantities(float(delta), complex(gamma), float(gd_minus), float(gd_plus))
    return FrameQuantities(delta, gamma, gd_minus, gd_plus)


def _breakpoints(sweep: SweepParams) -> np.ndarray:
    lo, hi = sweep.window
    inner = [t for t in resonance_times(sweep).times if lo < t < hi]
    return np.array([lo, *inner, hi])


def _check(result, what: str):
    status = result[1]
    if status == _ode.STEP_UNDERFLOW:
        raise IntegrationError(f"{what}: step size underflow; tolerances too tight?")
    if status == _ode.STEP_BUDGET:
        raise IntegrationError(f"{what}: step budget exhausted after {result[2]} steps")


def propagate_amplitudes(
    sweep: SweepParams,
    start_level: str = "minus",
    rtol: float = RTOL,
    atol: float = ATOL,
    record: bool = True,
) -> Trajectory:
    """Integrate the S/I equations across the whole sweep window.

    The qubit starts in the instantaneous eigenstate ``start_level`` at
    tau = -tau0/2: S = 1 for "minus", I = -1 for "plus" (the I term of the
    expansion carries a minus sign).
    """
    if start_level not in ("minus", "plus"):
        raise ValueError(f"start_level must be 'minus' or 'plus', got {start_level!r}")
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")
    y0 = np.array([1.0, 0, 0, 0, 0]) if start_level == "minus" else np.array([0, 0, -1.0, 0, 0])
    res = _ode.run(_ode.EIGENBASIS, sweep.lam, sweep.eta_n, sweep.n, _breakpoints(sweep),
                   y0, rtol, atol, record=record)
    _check(res, "eigenbasis propagation")
    y, _, accepted, _, _, drift, rec_t, rec_y = res
    if not record:
        rec_t = np.array([sweep.window[1]])
        rec_y = y[None, :]
    amps = np.empty((rec_t.size, 2), dtype=complex)
    amps[:, 0] = rec_y[:, 0] + 1j * rec_y[:, 1]
    amps[:, 1] = rec_y[:, 2] + 1j * rec_y[:, 3]
    return Trajectory(
        taus=rec_t.copy(),
        amplitudes=amps,
        phase_integral=rec_y[:, 4].copy(),
        start_level=start_level,
        max_norm_drift=float(drift),
        steps=int(accepted),
    )


def state_from_amplitudes(sweep: SweepParams, tau: float, S: complex, I: complex,
                          phase_integral: float) -> np.ndarray:
    """Computational-basis state assembled from eigenbasis amplitudes at tau."""
    lo = sweep.window[0]
    dphi = twist_phase(sweep, tau) - twist_phase(sweep, lo)
    e_minus, e_plus = eigenvectors(sweep, tau)
    half = 0.5 * phase_integral
    return np.exp(-0.5j * dphi) * (
        S * np.exp(1j * half) * e_minus - I * np.exp(-1j * half) * e_plus
    )


def propagate_direct(
    sweep: SweepParams,
    initial_state,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> np.ndarray:
    """Integrate the Schrodinger equation in the fixed computational basis.

    Returns the state at tau0/2 for ``initial_state`` given at -tau0/2.
    """
    psi0 = np.asarray(initial_state, dtype=complex).reshape(2)
    if abs(np.vdot(psi0, psi0).real - 1.0) > 1e-12:
        raise InvalidStateError("initial state must be normalised")
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")
    y0 = np.array([psi0[0].real, psi0[0].imag, psi0[1].real, psi0[1].imag])
    res = _ode.run(_ode.DIRECT, sweep.lam, sweep.eta_n, sweep.n, _breakpoints(sweep),
                   y0, rtol, atol)
    _check(res, "direct propagation")
    y = res[0]
    return np.array([y[0] + 1j * y[1], y[2] + 1j * y[3]])


def direct_norm_drift(sweep: SweepParams, rtol: float = RTOL, atol: float = ATOL) -> float:
    """Worst |norm - 1| over accepted steps of the direct integrator, both basis states."""
    y0 = np.array([1.0, 0, 0, 0, 0, 0, 1.0, 0])
    res = _ode.run(_ode.DIRECT, sweep.lam, sweep.eta_n, sweep.n, _breakpoints(sweep),
                   y0, rtol, atol)
    _check(res, "direct propagation")
    return float(res[5])


def assemble_unitary(
    sweep: SweepParams,
    convention: str = "eigenbasis",
    rtol: float = RTOL,
    atol: float = ATOL,
) -> np.ndarray:
    """The gate U_a realised by a sweep, as a 2x2 complex array.

    ``convention="eigenbasis"`` (default) identifies the endpoint eigenstates
    with computational states, E_-(start) = |0>, E_+(start) = |1>,
    E_+(end) = |0>, E_-(end) = |1>, keeps every dynamical and geometric
    phase, and lays the matrix out with row j holding the final amplitudes of
    initial level j.  This is the construction that reproduces the published
    TRP gate matrices.

    ``convention="computational"`` propagates |0> and |1> directly and returns
    the usual propagator, column j being the image of |j>.
    """
    if convention == "eigenbasis":
        y0 = np.array([1.0, 0, 0, 0, 0, 0, -1.0, 0, 0])
        res = _ode.run(_ode.EIGENBASIS, sweep.lam, sweep.eta_n, sweep.n, _breakpoints(sweep),
                       y0, rtol, atol)
        _check(res, "eigenbasis propagation")
        y = res[0]
        lo, hi = sweep.window
        dphi = twist_phase(sweep, hi) - twist_phase(sweep, lo)
        g = np.exp(-0.5j * dphi)
        half = np.exp(0.5j * y[8])
        u = np.empty((2, 2), dtype=complex)
        for j in range(2):
            S = y[4 * j] + 1j * y[4 * j + 1]
            I = y[4 * j + 2] + 1j * y[4 * j + 3]
            u[j, 0] = -g * I / half
            u[j, 1] = g * S * half
        return u
    if convention == "computational":
        y0 = np.array([1.0, 0, 0, 0, 0, 0, 1.0, 0])
        res = _ode.run(_ode.DIRECT, sweep.lam, sweep.eta_n, sweep.n, _breakpoints(sweep),
                       y0, rtol, atol)
        _check(res, "direct propagation")
        y = res[0]
        u = np.empty((2, 2), dtype=complex)
        for j in range(2):
            u[0, j] = y[4 * j] + 1j * y[4 * j + 1]
            u[1, j] = y[4 * j + 2] + 1j * y[4 * j + 3]
        return u
    raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")
