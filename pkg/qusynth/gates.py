"""Named target gates and basis-state preparation."""
import math
from typing import Callable

import numpy as np

from qusynth.errors import ValidationError
from qusynth.qmath import require_unitary
from qusynth.schemas import Pulse, PulseSequence


def fourier() -> np.ndarray:
    """Qutrit Fourier (Walsh-Hadamard) gate; det F is not 1, i F is in SU(3)."""
    w = np.exp(2j*np.pi/3)
    return np.array([
        [1, 1, 1],
        [1, w, w.conjugate()],
        [1, w.conjugate(), w],
    ], dtype=complex)/np.sqrt(3)


def permutation(i: int, j: int) -> np.ndarray:
    p = np.eye(3, dtype=complex)
    p[[i, j]] = p[[j, i]]
    return p


# F conjugated by the 1<->2 swap is F itself; the single-tone sequence realises the
# relabelled output P12 F (= F^dag).
GATES: dict[str, Callable[[], np.ndarray]] = {
    'identity': lambda: np.eye(3, dtype=complex),
    'fourier': fourier,
    'fourier_12': lambda: permutation(1, 2) @ fourier(),
    'fourier_01': lambda: permutation(0, 1) @ fourier() @ permutation(0, 1),
    'fourier_02': lambda: permutation(0, 2) @ fourier() @ permutation(0, 2),
}


def named_gate(name: str) -> np.ndarray:
    if name not in GATES:
        raise ValidationError(f'Unknown gate {name!r}; known gates: {sorted(GATES)}')
    return GATES[name]()


def _entry(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValidationError(f'[re, im] pair expected, got {value!r}')
        return complex(float(value[0]), float(value[1]))
    try:
        return complex(str(value).replace(' ', '').replace('i', 'j'))
    except ValueError as e:
        raise ValidationError(f'Cannot parse matrix entry {value!r}') from e


def gate_from_entries(entries) -> np.ndarray:
    """Row-major 9 entries, each a complex literal or an [re, im] pair."""
    if entries is None or len(entries) != 9:
        raise ValidationError('A custom gate needs exactly 9 entries')
    u = np.array([_entry(v) for v in entries], dtype=complex).reshape(3, 3)
    return require_unitary(u, name='custom gate')


def prepare_state(n: int) -> PulseSequence:
    """Pulses taking |0> to |n> (up to phase): A pi-pulse for |1>, then B for |2>."""
    half_pi = math.pi/2
    pulses = {
        0: [],
        1: [Pulse(channel='A', area=half_pi, phase=0.0)],
        2: [Pulse(channel='A', area=half_pi, phase=0.0), Pulse(channel='B', area=half_pi, phase=0.0)],
    }
    if n not in pulses:
        raise ValidationError(f'basis index must be 0, 1 or 2, got {n}')
    return PulseSequence(pulses=pulses[n])
