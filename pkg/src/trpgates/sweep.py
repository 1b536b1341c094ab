"""Twisted rapid passage (TRP) sweeps in dimensionless and laboratory form.

The detector-frame control field is

    F(t) = b cos(phi) x + b sin(phi) y + a t z,    phi(t) = (2/n) B t**n

and everything downstream works in the dimensionless variables

    tau = (a/b) t,   lambda = hbar a / b**2,   eta_n = (hbar B / a) (b/a)**(n-2)

in which the twist becomes phi(tau) = (2/n) (eta_n / lambda) tau**n and the
field (in units of b) is (cos phi, sin phi, tau).  The sign convention a > 0
is used throughout, so tau and t share sign; B < 0 enters through eta_n.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SweepDomainError, UnsupportedTwistOrder

# Published gate points are reproduced with the sweep spanning tau in [-80, 80].
DEFAULT_TAU0 = 160.0
DEFAULT_N = 4

_WINDOW_SLACK = 1e-12


@dataclass(frozen=True)
class SweepParams:
    """Dimensionless TRP sweep: the point the optimizer moves around.

    ``tau0`` is the full sweep duration; the sweep covers
    ``[-tau0/2, tau0/2]``.
    """

    lam: float
    eta_n: float
    n: int = DEFAULT_N
    tau0: float = DEFAULT_TAU0

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive and finite, got {self.lam!r}")
        if not math.isfinite(self.eta_n):
            raise ValueError(f"eta_n must be finite, got {self.eta_n!r}")
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"twist order n must be an integer >= 3, got {self.n!r}")
        if not (self.tau0 >= 0 and math.isfinite(self.tau0)):
            raise ValueError(f"tau0 must be non-negative, got {self.tau0!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def window(self) -> tuple[float, float]:
        return (-0.5 * self.tau0, 0.5 * self.tau0)

    def with_(self, **changes) -> "SweepParams":
        fields = {"lam": self.lam, "eta_n": self.eta_n, "n": self.n, "tau0": self.tau0}
        fields.update(changes)
        return SweepParams(**fields)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "eta_n": self.eta_n, "n": self.n, "tau0": self.tau0}

    @classmethod
    def from_dict(cls, d: dict) -> "SweepParams":
        return cls(
            lam=float(d["lambda"]),
            eta_n=float(d["eta_n"]),
            n=int(d.get("n", DEFAULT_N)),
            tau0=float(d.get("tau0", DEFAULT_TAU0)),
        )


@dataclass(frozen=True)
class LabSweepParams:
    """Laboratory realisation of a quartic TRP sweep.

    omega1 = 2b/hbar, A = a T0/hbar, calB = B T0**4 / 2.  Units are taken as
    given (the published experiment quotes omega1 and A in Hz).
    """

    omega1: float
    A: float
    calB: float
    T0: float
    omega0: float = 0.0

    def __post_init__(self):
        if not self.omega1 > 0:
            raise ValueError(f"omega1 must be positive, got {self.omega1!r}")
        if not self.T0 > 0:
            raise ValueError(f"T0 must be positive, got {self.T0!r}")
        if not self.A > 0:
            raise ValueError(f"A must be positive (a > 0 convention), got {self.A!r}")

    def to_dict(self) -> dict:
        return {
            "omega1": self.omega1,
            "a": self.A,
            "cal_b": self.calB,
            "t0": self.T0,
            "omega0": self.omega0,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LabSweepParams":
        return cls(
            omega1=float(d["omega1"]),
            A=float(d["a"]),
            calB=float(d["cal_b"]),
            T0=float(d["t0"]),
            omega0=float(d.get("omega0", 0.0)),
        )


class Regime(str, enum.Enum):
    """Resonance regimes, keyed by the sign of the twist and the parity of n."""

    POSITIVE_ODD = "B>0, n odd"
    POSITIVE_EVEN = "B>0, n even"
    NEGATIVE_ODD = "B<0, n odd"
    NEGATIVE_EVEN = "B<0, n even"
    NO_TWIST = "B=0"

    @classmethod
    def classify(cls, eta_n: float, n: int) -> "Regime":
        if eta_n == 0:
            return cls.NO_TWIST
        odd = n % 2 == 1
        if eta_n > 0:
            return cls.POSITIVE_ODD if odd else cls.POSITIVE_EVEN
        return cls.NEGATIVE_ODD if odd else cls.NEGATIVE_EVEN

    @property
    def expected_count(self) -> int:
        return {
            Regime.POSITIVE_ODD: 2,
            Regime.POSITIVE_EVEN: 3,
            Regime.NEGATIVE_ODD: 2,
            Regime.NEGATIVE_EVEN: 1,
            Regime.NO_TWIST: 1,
        }[self]


@dataclass(frozen=True)
class ResonanceSet:
    times: tuple[float, ...]
    regime: Regime

    def inside(self, sweep: SweepParams) -> tuple[bool, ...]:
        lo, hi = sweep.window
        return tuple(lo <= t <= hi for t in self.times)


@dataclass(frozen=True)
class PhaseProgram:
    sample_times: np.ndarray
    phi_det: np.ndarray
    phi_a: np.ndarray

    @property
    def phi_rf(self) -> np.ndarray:
        # rf phase lags the detector phase by the twist
        return self.phi_det - (self.phi_a - self.phi_det)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "phi_det", "phi_a", "phi_rf"])
        for row in zip(self.sample_times, self.phi_det, self.phi_a, self.phi_rf):
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _check_window(sweep: SweepParams, tau, clamp: bool):
    lo, hi = sweep.window
    tau = np.asarray(tau, dtype=float)
    if clamp:
        return np.clip(tau, lo, hi)
    slack = _WINDOW_SLACK * max(1.0, hi)
    if np.any(tau < lo - slack) or np.any(tau > hi + slack):
        raise SweepDomainError(f"tau outside sweep window [{lo}, {hi}]")
    return tau


def twist_phase(sweep: SweepParams, tau, clamp: bool = False):
    """Twist angle phi(tau) = (2/n)(eta_n/lambda) tau**n, in radians.

    Works elementwise on arrays.  Times outside the sweep window raise
    :class:`SweepDomainError` unless ``clamp`` is set.
    """
    tau = _check_window(sweep, tau, clamp)
    phi = (2.0 / sweep.n) * (sweep.eta_n / sweep.lam) * tau**sweep.n
    return float(phi) if phi.ndim == 0 else phi


def twist_rate(sweep: SweepParams, tau):
    """d(phi)/d(tau) = 2 (eta_n/lambda) tau**(n-1); no window check."""
    tau = np.asarray(tau, dtype=float)
    rate = 2.0 * (sweep.eta_n / sweep.lam) * tau ** (sweep.n - 1)
    return float(rate) if rate.ndim == 0 else rate


def control_field(sweep: SweepParams, tau, clamp: bool = False) -> np.ndarray:
    """Dimensionless control field F/b = (cos phi, sin phi, tau)."""
    tau = _check_window(sweep, tau, clamp)
    phi = (2.0 / sweep.n) * (sweep.eta_n / sweep.lam) * tau**sweep.n
    return np.stack([np.cos(phi), np.sin(phi), tau], axis=-1)


def resonance_residual(eta_n: float, n: int, tau):
    """tau (1 - eta_n tau**(n-2)); zero exactly at the qubit resonances."""
    tau = np.asarray(tau, dtype=float)
    return tau * (1.0 - eta_n * tau ** (n - 2))


def resonance_times(sweep: SweepParams, imag_tol: float = 1e-8) -> ResonanceSet:
    """All real roots of the resonance residual, sorted, tau = 0 included.

    The nonzero roots solve eta_n tau**(n-2) = 1.  They are located with a
    companion-matrix root finder, filtered to the real axis and polished by
    Newton iteration on the residual.
    """
    n, eta = sweep.n, sweep.eta_n
    regime = Regime.classify(eta, n)
    times = [0.0]
    if eta != 0.0:
        m = n - 2
        coeffs = np.zeros(m + 1)
        coeffs[0] = eta
        coeffs[-1] = -1.0
        for z in np.roots(coeffs):
            if abs(z.imag) > imag_tol * max(1.0, abs(z)):
                continue
            times.append(_polish_root(eta, m, z.real))
    times.sort()
    return ResonanceSet(times=tuple(times), regime=regime)


def _polish_root(eta: float, m: int, x: float, iters: int = 50) -> float:
    # Newton on g(x) = eta x**m - 1, which shares the nonzero roots of the residual
    for _ in range(iters):
        g = eta * x**m - 1.0
        dg = m * eta * x ** (m - 1)
        step = g / dg
        x -= step
        if abs(step) <= 4e-16 * abs(x):
            break
    return float(x)


# --- laboratory translation key (quartic twist) -------------------------------


def to_lab(
    sweep: SweepParams, omega1: float, T0: float | None = None, omega0: float = 0.0
) -> LabSweepParams:
    """Laboratory parameters realising ``sweep``.

    Inverts lambda = 4A/(omega1**2 T0) for A and eta4 = calB omega1**2/(2 A**3 T0)
    for calB.  The duration tau0 = a T0 / b = 2A/omega1 ties T0 to the other
    inputs, so T0 is derived when omitted and checked when given.
    """
    if sweep.n != 4:
        raise UnsupportedTwistOrder(
            f"the laboratory key is defined for quartic twist only (n={sweep.n})"
        )
    if not omega1 > 0:
        raise ValueError(f"omega1 must be positive, got {omega1!r}")
    consistent_T0 = 2.0 * sweep.tau0 / (sweep.lam * omega1)
    if T0 is None:
        T0 = consistent_T0
    else:
        if not T0 > 0:
            raise ValueError(f"T0 must be positive, got {T0!r}")
        if not math.isclose(T0, consistent_T0, rel_tol=1e-9):
            raise ValueError(
                f"T0={T0!r} is inconsistent with lambda={sweep.lam!r}, tau0={sweep.tau0!r}, "
                f"omega1={omega1!r}; the duration requires T0={consistent_T0!r}"
            )
    A = sweep.lam * omega1**2 * T0 / 4.0
    calB = sweep.eta_n * 2.0 * A**3 * T0 / omega1**2
    return LabSweepParams(omega1=omega1, A=A, calB=calB, T0=T0, omega0=omega0)


def from_lab(lab: LabSweepParams) -> SweepParams:
    """Dimensionless quartic sweep for a set of laboratory parameters."""
    lam = 4.0 * lab.A / (lab.omega1**2 * lab.T0)
    eta4 = lab.calB * lab.omega1**2 / (2.0 * lab.A**3 * lab.T0)
    tau0 = 2.0 * lab.A / lab.omega1
    return SweepParams(lam=lam, eta_n=eta4, n=4, tau0=tau0)


def lab_time_scale(lab: LabSweepParams) -> float:
    """b/a in seconds, so that t = tau * lab_time_scale(lab)."""
    return lab.omega1 * lab.T0 / (2.0 * lab.A)


def phase_programs(
    lab: LabSweepParams, n: int = 4, B: float | None = None, samples: int = 1001
) -> PhaseProgram:
    """Detector and applied-field phase programs on a uniform grid over [-T0/2, T0/2].

    phi_det(t) = a t**2/hbar + omega0 t and phi_a(t) = phi_det(t) + (2/n) B t**n,
    with a/hbar = A/T0.  For quartic twist ``B`` defaults to 2 calB / T0**4.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    if B is None:
        if n != 4:
            raise UnsupportedTwistOrder("B must be given explicitly for n != 4")
        B = 2.0 * lab.calB / lab.T0**4
    t = np.linspace(-0.5 * lab.T0, 0.5 * lab.T0, samples)
    phi_det = (lab.A / lab.T0) * t**2 + lab.omega0 * t
    phi_a = phi_det + (2.0 / n) * B * t**n
    return PhaseProgram(sample_times=t, phi_det=phi_det, phi_a=phi_a)


def dumps(obj) -> str:
    """JSON for SweepParams / LabSweepParams."""
    return json.dumps(obj.to_dict(), sort_keys=True)
