"""Compile U(3) targets into A/B/AB pulse sequences plus a virtual phase."""
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from loguru import logger

from qusynth.errors import DecompositionError
from qusynth.pulses import pulse_unitary, sequence_unitary
from qusynth.qmath import dagger, distance_mod_phase, require_unitary
from qusynth.schemas import Pulse, PulseSequence, VirtualPhase

ZERO_TOL = 1e-10
RECOMPOSE_TOL = 1e-9


class Scheme(str, Enum):
    SINGLE_TONE = 'single'
    DUAL_TONE = 'dual'


@dataclass(frozen=True)
class StepSpec:
    row: int
    m: int
    n: int
    channel: str


# Elimination schedule per scheme: (zeroed row a, coupling pair {m, n}, channel)
SCHEDULE = {
    Scheme.SINGLE_TONE: (StepSpec(2, 0, 1, 'A'), StepSpec(2, 1, 2, 'B'), StepSpec(1, 0, 1, 'A')),
    Scheme.DUAL_TONE: (StepSpec(2, 0, 2, 'AB'), StepSpec(2, 1, 2, 'B'), StepSpec(1, 0, 1, 'A')),
}


@dataclass
class DecompositionStep:
    k: int
    spec: StepSpec
    pulse: Pulse
    residual: float


def _phase_from_rotation(channel: str, phi: float) -> float:
    """Map the phase of exp{-i tau/2 [cos phi sx + sin phi sy]} onto this package's channels."""
    if channel == 'B':
        return phi + math.pi/2
    return math.pi/2 - phi


def _zeroed(u_k: np.ndarray, pulse: Pulse, a: int, m: int) -> float:
    return float(abs((u_k @ dagger(pulse_unitary(pulse)))[a, m]))


def givens_step(u_k: np.ndarray, a: int, m: int, n: int, channel: str) -> Pulse:
    """Pulse on {m, n} whose inverse zeroes <a| U_k |m>.

    tau = 2 arcsin sqrt(|x|^2 / (|x|^2 + |y|^2)), phi = pi/2 + arg x - arg y with
    x = <a|U_k|m>, y = <a|U_k|n>; the pulse area is tau/2 (alpha for AB).
    """
    x, y = u_k[a, m], u_k[a, n]
    weight = abs(x)**2 + abs(y)**2
    if weight < 1e-30:
        return Pulse(channel=channel, area=0.0, phase=0.0)

    area = math.asin(math.sqrt(min(1.0, abs(x)**2/weight)))
    phi = math.pi/2 + float(np.angle(x)) - float(np.angle(y))
    phase = _phase_from_rotation(channel, phi)

    for candidate in (phase, phase + math.pi):
        pulse = Pulse(channel=channel, area=area, phase=candidate)
        residual = _zeroed(u_k, pulse, a, m)
        if residual <= ZERO_TOL:
            return pulse
        logger.debug(f'{channel} step phase {candidate:.6f} left |<{a}|U|{m}>| = {residual:.3e}')
    raise DecompositionError(f'No {channel} pulse zeroes <{a}|U|{m}> (residual {residual:.3e})')


def _residual_phase(d: np.ndarray) -> tuple[VirtualPhase, float]:
    theta = np.angle(np.diag(d))
    g = float(np.sum(theta))/3
    return VirtualPhase(eta=float(theta[0]) - g, epsilon=float(theta[1]) - g), g


def decompose_steps(u: np.ndarray, scheme: Scheme | str) -> tuple[PulseSequence, list[DecompositionStep]]:
    scheme = Scheme(scheme)
    u = require_unitary(u, name='target')

    u_k = u.copy()
    pulses, steps = [], []
    for k, spec in enumerate(SCHEDULE[scheme], 1):
        pulse = givens_step(u_k, spec.row, spec.m, spec.n, spec.channel)
        u_k = u_k @ dagger(pulse_unitary(pulse))
        residual = float(abs(u_k[spec.row, spec.m]))
        steps.append(DecompositionStep(k=k, spec=spec, pulse=pulse, residual=residual))
        pulses.append(pulse)

    off_diagonal = float(np.max(np.abs(u_k - np.diag(np.diag(u_k)))))
    if off_diagonal > RECOMPOSE_TOL:
        raise DecompositionError(f'Residual after three steps is not diagonal ({off_diagonal:.3e})')

    virtual, g = _residual_phase(u_k)
    seq = PulseSequence(pulses=pulses, virtual=virtual, global_phase=g)
    return seq, steps


def decompose(u: np.ndarray, scheme: Scheme | str = Scheme.DUAL_TONE) -> PulseSequence:
    """U = e^{ig} U_theta U_3 U_2 U_1 with channels (A, B, A) or (AB, B, A)."""
    seq, _ = decompose_steps(u, scheme)
    return seq


def recomposition_distance(seq: PulseSequence, u: np.ndarray) -> float:
    return distance_mod_phase(sequence_unitary(seq), u)


def fourier_single_tone() -> PulseSequence:
    """e^{i pi/6} U_theta(-pi/6, -pi/6) U_B(5pi/4, pi/2) U_A(arccos(-1/3)/2, pi) U_B(pi/4, 0)."""
    return PulseSequence(
        pulses=[
            Pulse(channel='B', area=math.pi/4, phase=0.0),
            Pulse(channel='A', area=math.acos(-1/3)/2, phase=math.pi),
            Pulse(channel='B', area=5*math.pi/4, phase=math.pi/2),
        ],
        virtual=VirtualPhase(eta=-math.pi/6, epsilon=-math.pi/6),
        global_phase=math.pi/6,
    )


def fourier_dual_tone() -> PulseSequence:
    """i U_theta(pi/3, -pi/2) U_A(pi/4, pi/6) U_B(pi + arctan(1/sqrt2), pi/3) U_AB(pi/4, -2pi/3)."""
    return PulseSequence(
        pulses=[
            Pulse(channel='AB', area=math.pi/4, phase=-2*math.pi/3),
            Pulse(channel='B', area=math.pi + math.atan(1/math.sqrt(2)), phase=math.pi/3),
            Pulse(channel='A', area=math.pi/4, phase=math.pi/6),
        ],
        virtual=VirtualPhase(eta=math.pi/3, epsilon=-math.pi/2),
        global_phase=math.pi/2,
    )
