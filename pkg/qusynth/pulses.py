"""Closed-form pulse operators and virtual-phase bookkeeping."""
import math

import numpy as np

from qusynth.errors import ValidationError
from qusynth.qmath import dagger
from qusynth.schemas import Pulse, PulseSequence, VirtualPhase


def u_a(tau: float, phi: float) -> np.ndarray:
    """Resonant A pulse on {|0>, |1>}; |2> untouched."""
    c, s = math.cos(tau), math.sin(tau)
    return np.array([
        [c, -np.exp(1j*phi)*s, 0],
        [np.exp(-1j*phi)*s, c, 0],
        [0, 0, 1],
    ], dtype=complex)


def u_b(tau: float, phi: float) -> np.ndarray:
    """Resonant B pulse on {|1>, |2>}; |0> untouched."""
    c, s = math.cos(tau), math.sin(tau)
    return np.array([
        [1, 0, 0],
        [0, c, np.exp(-1j*phi)*s],
        [0, -np.exp(1j*phi)*s, c],
    ], dtype=complex)


def u_ab(alpha: float, beta: float) -> np.ndarray:
    """Dual-tone operator: synthesised |0>-|2> coupling, -1 on |1>."""
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([
        [c, 0, -np.exp(1j*beta)*s],
        [0, -1, 0],
        [-np.exp(-1j*beta)*s, 0, -c],
    ], dtype=complex)


def u_theta(eta: float, epsilon: float) -> np.ndarray:
    return np.diag(np.exp(1j*np.array([eta, epsilon, -(eta + epsilon)])))


def ab_drive(alpha: float, beta: float, omega_total: float) -> tuple[complex, complex, float]:
    # arg(Omega_B) = 0, |Omega_A|/|Omega_B| = tan(alpha/2)
    omega_a = omega_total*math.sin(alpha/2)*np.exp(1j*beta)
    omega_b = complex(omega_total*math.cos(alpha/2))
    return complex(omega_a), omega_b, 2*math.pi/omega_total


def ab_couplings(alpha: float, beta: float, omega_total: float) -> tuple[complex, complex, float]:
    """Couplings (Omega_A, Omega_B) and duration t_AB realising u_ab(alpha, beta)."""
    if omega_total <= 0:
        raise ValidationError(f'total Rabi frequency must be positive, got {omega_total}')
    if not 0.0 < alpha < math.pi:
        raise ValidationError(
            f'alpha={alpha} is a single-tone request; use u_a / u_b for alpha in {{0, pi}}'
        )
    return ab_drive(alpha, beta, omega_total)


def ab_parameters(omega_a: complex, omega_b: complex) -> tuple[float, float]:
    """Inverse map: alpha = 2 arctan|Omega_A/Omega_B|, beta = arg(Omega_A/Omega_B)."""
    alpha = 2*math.atan2(abs(omega_a), abs(omega_b))
    beta = float(np.angle(omega_a)) - float(np.angle(omega_b))
    return alpha, float(np.angle(np.exp(1j*beta)))


def pulse_unitary(p: Pulse) -> np.ndarray:
    if p.channel == 'A':
        return u_a(p.area, p.phase)
    if p.channel == 'B':
        return u_b(p.area, p.phase)
    return u_ab(p.area, p.phase)


def pulses_unitary(pulses) -> np.ndarray:
    u = np.eye(3, dtype=complex)
    for p in pulses:
        u = pulse_unitary(p) @ u
    return u


def sequence_unitary(seq: PulseSequence) -> np.ndarray:
    """e^{i gamma} U_theta(eta, epsilon) U_n ... U_1."""
    u = pulses_unitary(seq.pulses)
    return np.exp(1j*seq.global_phase)*u_theta(seq.virtual.eta, seq.virtual.epsilon) @ u


def shift_through_phase(p: Pulse, vp: VirtualPhase) -> Pulse:
    """Pulse p' with U(p') = U_theta^dag U(p) U_theta, by a phase shift alone.

    A: phi + epsilon - eta; B: phi + eta + 2 epsilon; AB: beta - epsilon - 2 eta.
    """
    eta, eps = vp.eta, vp.epsilon
    shift = {
        'A': eps - eta,
        'B': eta + 2*eps,
        'AB': -eps - 2*eta,
    }[p.channel]
    return Pulse(channel=p.channel, area=p.area, phase=p.phase + shift)


def fold_virtual_phase(seq: PulseSequence, later: list[Pulse]) -> list[Pulse]:
    """Re-phase pulses applied after seq so its virtual phase can be dropped."""
    return [shift_through_phase(p, seq.virtual) for p in later]


def readout_pulses() -> list[Pulse]:
    """R_1 ... R_6: pi/2-area pulses (tau = pi/4) on A, B and AB at phases 0 and pi/2."""
    quarter = math.pi/4
    return [
        Pulse(channel=channel, area=quarter, phase=phase)
        for channel in ('A', 'B', 'AB')
        for phase in (0.0, math.pi/2)
    ]
