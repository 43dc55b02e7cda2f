"""qusynth schemas: pulses, sequences, trap model, tomography data and reports."""
import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Channel = Literal['A', 'B', 'AB']


def wrap_phase(phase: float) -> float:
    """Map a phase into (-pi, pi]; -pi itself maps to +pi."""
    return math.pi - math.fmod(math.fmod(math.pi - phase, 2*math.pi) + 2*math.pi, 2*math.pi)


class Pulse(BaseModel):
    """A physical microwave pulse.

    For channels A and B `area` is the half-angle tau = |Omega| t / 2 and `phase` is
    arg(Omega). For the dual-tone channel AB `area` is the mixing angle alpha in [0, pi] and
    `phase` the relative phase beta.
    """
    model_config = ConfigDict(frozen=True)

    channel: Channel = Field(description='Drive channel: A (|0>-|1>), B (|1>-|2>) or AB (dual tone)')
    area: float = Field(ge=0.0, description='Pulse area tau, or mixing angle alpha for AB (rad)')
    phase: float = Field(default=0.0, description='Coupling phase phi, or beta for AB (rad)')

    @field_validator('phase')
    @classmethod
    def _wrap(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError('phase must be finite')
        return wrap_phase(value)

    @model_validator(mode='after')
    def _check_alpha(self):
        if self.channel == 'AB' and self.area > math.pi + 1e-12:
            raise ValueError(f'dual-tone mixing angle must lie in [0, pi], got {self.area}')
        return self


class VirtualPhase(BaseModel):
    """Trailing diagonal phase gate realised by re-phasing later pulses."""
    model_config = ConfigDict(frozen=True)

    eta: float = Field(default=0.0, description='Phase on |0> (rad)')
    epsilon: float = Field(default=0.0, description='Phase on |1> (rad)')

    @field_validator('eta', 'epsilon')
    @classmethod
    def _wrap(cls, value: float) -> float:
        return wrap_phase(value)


class PulseSequence(BaseModel):
    """Pulses in application order, then a virtual phase and a recorded global phase."""
    model_config = ConfigDict(frozen=True)

    pulses: list[Pulse] = Field(default_factory=list, description='First-applied pulse first')
    virtual: VirtualPhase = Field(default_factory=VirtualPhase)
    global_phase: float = Field(default=0.0, description='Recorded global phase (rad)')

    @field_validator('global_phase')
    @classmethod
    def _wrap(cls, value: float) -> float:
        return wrap_phase(value)

    @property
    def channels(self) -> tuple[str, ...]:
        return tuple(p.channel for p in self.pulses)

    def to_text(self) -> str:
        """Line-oriented record: one pulse per line, then THETA and GLOBAL lines."""
        lines = [f'{p.channel} {p.area:.16e} {p.phase:.16e}' for p in self.pulses]
        lines.append(f'THETA {self.virtual.eta:.16e} {self.virtual.epsilon:.16e}')
        lines.append(f'GLOBAL {self.global_phase:.16e}')
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'PulseSequence':
        pulses, virtual, global_phase = [], VirtualPhase(), 0.0
        for raw in text.splitlines():
            fields = raw.split()
            if not fields:
                continue
            head, values = fields[0], [float(v) for v in fields[1:]]
            if head == 'THETA':
                virtual = VirtualPhase(eta=values[0], epsilon=values[1])
            elif head == 'GLOBAL':
                global_phase = values[0]
            else:
                pulses.append(Pulse(channel=head, area=values[0], phase=values[1]))
        return cls(pulses=pulses, virtual=virtual, global_phase=global_phase)


class TrapModel(BaseModel):
    """Two-point Thomas-Fermi Stark shift profile."""
    r_tf: float = Field(default=6.5e-6, gt=0.0, description='Thomas-Fermi radius (m)')
    tensor_center_hz: float = Field(default=25.8e3, description='Tensor shift of |1> at r=0 (Hz)')
    tensor_edge_hz: float = Field(default=25.3e3, description='Tensor shift of |1> at r=R_TF (Hz)')
    scalar_center_hz: float = Field(default=6.0e3, description='Common-mode scalar shift at r=0 (Hz)')
    scalar_edge_hz: float = Field(default=5.9e3, description='Common-mode scalar shift at r=R_TF (Hz)')
    omega_ho: float = Field(default=2*math.pi*100.0, description='Trap frequency (rad/s), informational')
    samples: int = Field(default=1000, ge=1)
    sampling: Literal['quadrature', 'random'] = Field(default='quadrature')
    include_scalar: bool = Field(default=False, description='Add the scalar spread to the |1> detuning')
    seed: Optional[int] = Field(default=None, description='Required for random sampling')

    @model_validator(mode='after')
    def _check(self):
        if self.tensor_center_hz < self.tensor_edge_hz:
            raise ValueError('tensor shift at the centre must not be below the edge value')
        if self.sampling == 'random' and self.seed is None:
            raise ValueError('random sampling needs a seed')
        return self

    @property
    def tensor_spread_hz(self) -> float:
        return self.tensor_center_hz - self.tensor_edge_hz

    def scaled(self, factor: float) -> 'TrapModel':
        """Same model with the centre-to-edge tensor spread multiplied by factor."""
        center = self.tensor_edge_hz + factor*self.tensor_spread_hz
        return self.model_copy(update={'tensor_center_hz': center})


class TomographyData(BaseModel):
    """Measured fractions f[i][j] after read-out i (0..5) in projection j (0..2)."""
    fractions: list[list[float]] = Field(description='6 x 3 cloud fractions')
    atoms: Optional[int] = Field(default=None, description='Atom count per shot when counted')
    scans: int = Field(default=1, ge=1, description='Number of averaged scans')

    @model_validator(mode='after')
    def _check(self):
        if len(self.fractions) != 6 or any(len(row) != 3 for row in self.fractions):
            raise ValueError('fractions must be 6 x 3')
        for i, row in enumerate(self.fractions):
            if any(f < -1e-12 for f in row):
                raise ValueError(f'negative fraction in read-out {i + 1}')
            if abs(sum(row) - 1.0) > 1e-9:
                raise ValueError(f'fractions of read-out {i + 1} sum to {sum(row)}, not 1')
        if self.atoms is not None and self.atoms <= 0:
            raise ValueError('atom count must be positive')
        return self


class DecompositionReport(BaseModel):
    target: str = Field(description='Gate name or "entries"')
    scheme: Literal['single', 'dual']
    sequence: PulseSequence
    distance: float = Field(description='Recomposition distance modulo global phase')
    zeroed: list[float] = Field(default_factory=list, description='Per-step zeroed element modulus')

    @property
    def passed(self) -> bool:
        return self.distance <= 1e-9


class DensityReport(BaseModel):
    """A density matrix as 9 (re, im) pairs with its quality metrics."""
    entries: list[tuple[float, float]] = Field(description='Row-major (re, im) pairs')
    fidelity: float
    purity: float
    fidelity_pure: float
    iterations: int = Field(default=0)
    stop_reason: str = Field(default='')
    nonphysical_purified: bool = Field(default=False)


class StarkRow(BaseModel):
    operator: str
    input: int
    purity: float
    fidelity: float
    fidelity_pure: float
