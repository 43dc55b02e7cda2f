"""qusynth: qutrit pulse compilation, simulation and tomography"""
from qusynth.schemas import Pulse, VirtualPhase, PulseSequence, TrapModel, TomographyData
from qusynth.pulses import u_a, u_b, u_ab, u_theta, sequence_unitary
from qusynth.synth import Scheme, decompose, fourier_single_tone, fourier_dual_tone
from qusynth.dynamics import propagate, population_scan, detuning_sweep
from qusynth.stark import ensemble_detunings, ensemble_density_matrix
from qusynth.tomo import ReadoutSet, simulate_fractions, mle_reconstruct, averaging_study
from qusynth.storage import ResultStore
from qusynth.config import scope

__all__ = [
    'Pulse',
    'VirtualPhase',
    'PulseSequence',
    'TrapModel',
    'TomographyData',
    'u_a',
    'u_b',
    'u_ab',
    'u_theta',
    'sequence_unitary',
    'Scheme',
    'decompose',
    'fourier_single_tone',
    'fourier_dual_tone',
    'propagate',
    'population_scan',
    'detuning_sweep',
    'ensemble_detunings',
    'ensemble_density_matrix',
    'ReadoutSet',
    'simulate_fractions',
    'mle_reconstruct',
    'averaging_study',
    'ResultStore',
    'scope',
]
