"""Time-domain simulation of pulse sequences under the detuned rotating-frame Hamiltonian."""
import math
from dataclasses import dataclass

import numpy as np
from loguru import logger

from qusynth.errors import IntegrationError, ValidationError
from qusynth.pulses import ab_drive, sequence_unitary, u_theta
from qusynth.qmath import basis, dagger, expm_coupling, fidelity, max_abs
from qusynth.schemas import Pulse, PulseSequence


@dataclass(frozen=True)
class DriveConfig:
    """Constant couplings over one pulse, placed on the sequence clock."""
    omega_a: complex
    omega_b: complex
    delta_a: float
    delta_b: float
    duration: float
    start: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise ValidationError(f'pulse duration must be non-negative, got {self.duration}')

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def rate(self) -> float:
        return max(abs(self.omega_a), abs(self.omega_b), abs(self.delta_a), abs(self.delta_b))


def rwa_hamiltonian(omega_a: complex, omega_b: complex, delta_a: float = 0.0, delta_b: float = 0.0,
                    t=0.0) -> np.ndarray:
    """(i/2)[[0, -Wa, 0], [Wa*, 0, Wb*], [0, -Wb, 0]] with W = Omega e^{i Delta t}; hbar = 1.

    Vectorised over t: an array of times gives shape (len(t), 3, 3).
    """
    t = np.asarray(t, dtype=float)
    wa = omega_a*np.exp(1j*delta_a*t)
    wb = omega_b*np.exp(1j*delta_b*t)
    h = np.zeros(t.shape + (3, 3), dtype=complex)
    h[..., 0, 1] = -0.5j*wa
    h[..., 1, 0] = 0.5j*np.conj(wa)
    h[..., 1, 2] = 0.5j*np.conj(wb)
    h[..., 2, 1] = -0.5j*wb
    return h


def pulse_drive(p: Pulse, rabi: float, delta_a: float = 0.0, delta_b: float = 0.0,
                start: float = 0.0) -> DriveConfig:
    """Couplings and duration for a pulse at Rabi magnitude rabi (rad/s).

    A and B pulses run for 2 tau / |Omega|; the dual tone splits rabi as the total
    sqrt(|Omega_A|^2 + |Omega_B|^2) and runs for 2 pi / rabi.
    """
    if rabi <= 0:
        raise ValidationError(f'Rabi frequency must be positive, got {rabi}')
    if p.channel == 'A':
        omega_a, omega_b, duration = rabi*np.exp(1j*p.phase), 0j, 2*p.area/rabi
    elif p.channel == 'B':
        omega_a, omega_b, duration = 0j, rabi*np.exp(1j*p.phase), 2*p.area/rabi
    else:
        omega_a, omega_b, duration = ab_drive(p.area, p.phase, rabi)
    return DriveConfig(complex(omega_a), complex(omega_b), delta_a, delta_b, duration, start)


CLOCKS = ('sequence', 'pulse')


def sequence_drives(seq: PulseSequence, rabi: float, delta_a: float = 0.0, delta_b: float = 0.0,
                    t0: float = 0.0, clock: str = 'sequence') -> list[DriveConfig]:
    """Back-to-back drives.

    clock='sequence' places every pulse on one clock starting at t0, so detuning
    phase accrues across the whole sequence. clock='pulse' starts each pulse at t0:
    every pulse is phase-referenced to the atom at its own onset.
    """
    if clock not in CLOCKS:
        raise ValidationError(f'Unknown clock {clock!r}; expected one of {CLOCKS}')
    drives, now = [], t0
    for p in seq.pulses:
        drive = pulse_drive(p, rabi, delta_a, delta_b, start=now)
        drives.append(drive)
        if clock == 'sequence':
            now = drive.end
    return drives


def _rk4_pulse(drive: DriveConfig, steps: int) -> np.ndarray:
    h = drive.duration/steps
    times = drive.start + h*np.arange(2*steps + 1)/2
    ham = rwa_hamiltonian(drive.omega_a, drive.omega_b, drive.delta_a, drive.delta_b, times)
    gen = -1j*ham
    u = np.eye(3, dtype=complex)
    for k in range(steps):
        g0, g1, g2 = gen[2*k], gen[2*k + 1], gen[2*k + 2]
        k1 = g0 @ u
        k2 = g1 @ (u + 0.5*h*k1)
        k3 = g1 @ (u + 0.5*h*k2)
        k4 = g2 @ (u + h*k3)
        u = u + (h/6)*(k1 + 2*k2 + 2*k3 + k4)
    return u


def _steps_for(drive: DriveConfig, steps_per_pulse: int) -> int:
    if drive.duration == 0:
        return 0
    # h <= min(duration / steps_per_pulse, 1 / (100 max rate))
    by_rate = math.ceil(100*drive.rate*drive.duration)
    return max(steps_per_pulse, by_rate, 1)


def _exact_pulse(drive: DriveConfig) -> np.ndarray:
    # In the frame D(t) = diag(e^{i Da t}, 1, e^{i Db t}) the Hamiltonian is constant.
    h0 = rwa_hamiltonian(drive.omega_a, drive.omega_b)
    h_eff = h0 + np.diag([drive.delta_a, 0.0, drive.delta_b])
    d_start = np.diag(np.exp(1j*np.array([drive.delta_a, 0.0, drive.delta_b])*drive.start))
    d_end = np.diag(np.exp(1j*np.array([drive.delta_a, 0.0, drive.delta_b])*drive.end))
    return d_end @ expm_coupling(h_eff, drive.duration) @ dagger(d_start)


def propagate_drives(drives: list[DriveConfig], method: str = 'rk4', steps_per_pulse: int = 1000,
                     check_tol: float | None = 1e-6) -> np.ndarray:
    u = np.eye(3, dtype=complex)
    for drive in drives:
        if drive.duration == 0:
            continue
        if method == 'exact':
            u = _exact_pulse(drive) @ u
            continue
        if method != 'rk4':
            raise ValidationError(f'Unknown propagation method {method!r}')

        steps = _steps_for(drive, steps_per_pulse)
        step_u = _rk4_pulse(drive, steps)
        if check_tol is not None:
            fine = _rk4_pulse(drive, 2*steps)
            difference = max_abs(step_u - fine)
            if difference > check_tol:
                raise IntegrationError(
                    f"RK4 self-check failed: halved-step difference {difference:.3e} > {check_tol:.1e}"
                )
            step_u = fine
        u = step_u @ u
    return u


def propagate(seq: PulseSequence, rabi: float, delta_a: float = 0.0, delta_b: float = 0.0,
              method: str = 'rk4', steps_per_pulse: int = 1000, check_tol: float | None = 1e-6,
              t0: float = 0.0, clock: str = 'sequence') -> np.ndarray:
    """Time-ordered propagator of seq, then the virtual and global phases."""
    drives = sequence_drives(seq, rabi, delta_a, delta_b, t0, clock)
    u = propagate_drives(drives, method, steps_per_pulse, check_tol)
    return np.exp(1j*seq.global_phase)*u_theta(seq.virtual.eta, seq.virtual.epsilon) @ u


def population_scan(omega_a: complex, omega_b: complex, psi_in: np.ndarray, t_grid) -> np.ndarray:
    """Populations (len(t_grid), 3) under a constant resonant dual-tone drive."""
    h = rwa_hamiltonian(omega_a, omega_b)
    psi_in = np.asarray(psi_in, dtype=complex)
    out = np.empty((len(t_grid), 3))
    for k, t in enumerate(t_grid):
        out[k] = np.abs(expm_coupling(h, float(t)) @ psi_in)**2
    return out


def average_fidelity(u: np.ndarray, target: np.ndarray) -> float:
    """Fidelity of U|n> against target|n>, averaged over n = 0, 1, 2."""
    values = []
    for n in range(3):
        psi = u @ basis(n)
        values.append(fidelity(np.outer(psi, psi.conj()), target, n))
    return float(np.mean(values))


@dataclass
class SweepPoint:
    ratio: float
    fidelity: float


def detuning_sweep(seq: PulseSequence, ratios, rabi: float, method: str = 'rk4',
                   steps_per_pulse: int = 1000, check_tol: float | None = 1e-6) -> list[SweepPoint]:
    """Average fidelity with Delta = Delta_A = -Delta_B = ratio * rabi on every pulse."""
    target = sequence_unitary(seq)
    points = []
    for ratio in ratios:
        delta = float(ratio)*rabi
        u = propagate(seq, rabi, delta, -delta, method, steps_per_pulse, check_tol)
        points.append(SweepPoint(ratio=float(ratio), fidelity=average_fidelity(u, target)))
        logger.debug(f'Delta/Omega={ratio:+.4f} -> F={points[-1].fidelity:.8f}')
    return points
