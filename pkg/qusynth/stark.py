"""Trap-induced Stark shift model and detuning ensembles.

The tensor shift of |1> varies with radius across the condensate. |1> sits below both
|0> and |2>, so moving it detunes the A and B transitions by the same amount
('common'); the 'opposed' convention Delta_B = -Delta_A is kept for comparison with
the uniform detuning sweep. Sampling the Thomas-Fermi radial distribution and mixing
the per-atom outputs gives the ensemble state whose purity and fidelity drop below one.
"""
import math
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy import integrate

from qusynth.dynamics import CLOCKS, propagate
from qusynth.errors import ValidationError
from qusynth.qmath import dagger
from qusynth.schemas import PulseSequence, TrapModel


@dataclass(frozen=True)
class EnsembleSpec:
    """Per-sample transition detunings (rad/s) and normalised weights."""
    radii: np.ndarray
    delta_a: np.ndarray
    delta_b: np.ndarray
    weights: np.ndarray
    mean_shift_hz: float

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def mean_delta_a(self) -> float:
        return float(np.sum(self.weights*self.delta_a))


def _profile(center: float, edge: float, r, r_tf: float):
    r = np.asarray(r, dtype=float)
    return edge + (center - edge)*(1 - (r/r_tf)**2)


def stark_profile(model: TrapModel, r) -> tuple:
    """Tensor and scalar shifts (Hz) at radius r, quadratic between centre and edge."""
    tensor = _profile(model.tensor_center_hz, model.tensor_edge_hz, r, model.r_tf)
    scalar = _profile(model.scalar_center_hz, model.scalar_edge_hz, r, model.r_tf)
    return tensor, scalar


def tf_density(model: TrapModel, r):
    """Unit-normalised radial density 15 r^2 (1 - r^2/R^2) / (2 R^3) on [0, R]."""
    r = np.asarray(r, dtype=float)
    big_r = model.r_tf
    inside = (r >= 0) & (r <= big_r)
    n = 15*r**2*(1 - (r/big_r)**2)/(2*big_r**3)
    return np.where(inside, n, 0.0)


def mean_tensor_shift(model: TrapModel) -> float:
    """<E_tensor> by adaptive quadrature."""
    value, _ = integrate.quad(
        lambda r: float(tf_density(model, r))*float(stark_profile(model, r)[0]),
        0.0, model.r_tf, epsabs=0.0, epsrel=1e-12,
    )
    return value


def _nodes(model: TrapModel) -> tuple[np.ndarray, np.ndarray]:
    count = model.samples
    if model.sampling == 'random':
        rng = np.random.default_rng(model.seed)
        radii = np.sort(rng.uniform(0.0, model.r_tf, size=count))
    else:
        radii = (np.arange(count) + 0.5)*model.r_tf/count
    weights = tf_density(model, radii)
    total = float(np.sum(weights))
    if total == 0.0:
        return radii, np.full(count, 1.0/count)
    return radii, weights/total


TRANSITIONS = ('common', 'opposed')


def ensemble_detunings(model: TrapModel, transitions: str = 'common') -> EnsembleSpec:
    """Weighted detunings Delta_A = 2 pi (E(r) - <E>); Delta_B = +Delta_A or -Delta_A."""
    if transitions not in TRANSITIONS:
        raise ValidationError(f'Unknown transition convention {transitions!r}; expected one of {TRANSITIONS}')
    radii, weights = _nodes(model)
    tensor, scalar = stark_profile(model, radii)
    shift = tensor - np.sum(weights*tensor)
    if model.include_scalar:
        shift = shift + (scalar - np.sum(weights*scalar))
    delta_a = 2*math.pi*shift
    logger.debug(
        f'{len(radii)} {model.sampling} samples, detuning range '
        f'[{shift.min():+.1f}, {shift.max():+.1f}] Hz'
    )
    return EnsembleSpec(
        radii=radii,
        delta_a=delta_a,
        delta_b=delta_a.copy() if transitions == 'common' else -delta_a,
        weights=weights,
        mean_shift_hz=float(np.sum(weights*tensor)),
    )


def ensemble_propagators(seq: PulseSequence, spec: EnsembleSpec, rabi: float, method: str = 'exact',
                         steps_per_pulse: int = 1000, clock: str = 'pulse') -> np.ndarray:
    """One propagator per sample, shape (N, 3, 3), in sample order."""
    if clock not in CLOCKS:
        raise ValidationError(f'Unknown clock {clock!r}; expected one of {CLOCKS}')
    check_tol = 1e-6 if method == 'rk4' else None
    return np.stack([
        propagate(seq, rabi, float(da), float(db), method=method,
                  steps_per_pulse=steps_per_pulse, check_tol=check_tol, clock=clock)
        for da, db in zip(spec.delta_a, spec.delta_b)
    ])


def mix(propagators: np.ndarray, weights: np.ndarray, psi_in: np.ndarray) -> np.ndarray:
    """sum_i w_i U_i |psi><psi| U_i^dag, accumulated in sample order."""
    psi = propagators @ np.asarray(psi_in, dtype=complex)
    rho = np.einsum('k,ki,kj->ij', weights, psi, psi.conj())
    rho = (rho + dagger(rho))/2
    return rho/np.trace(rho).real


def ensemble_density_matrix(seq: PulseSequence, spec: EnsembleSpec, psi_in: np.ndarray, rabi: float,
                            method: str = 'exact', steps_per_pulse: int = 1000, clock: str = 'pulse') -> np.ndarray:
    return mix(ensemble_propagators(seq, spec, rabi, method, steps_per_pulse, clock), spec.weights, psi_in)
