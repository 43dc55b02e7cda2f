"""Six read-out state tomography and iterative maximum-likelihood reconstruction."""
import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from loguru import logger

from qusynth.errors import ValidationError
from qusynth.pulses import pulse_unitary, readout_pulses
from qusynth.qmath import (
    GELL_MANN,
    IDENTITY,
    MAXIMALLY_MIXED,
    dagger,
    fidelity,
    projector,
    purify,
    purity,
)
from qusynth.schemas import Pulse, TomographyData

REGULARIZATION = 1e-12
LIKELIHOOD_SLACK = 1e-13
# Largest exponent tried on R in an over-relaxed step
MAX_POWER = 2.0**20

_S2 = np.sqrt(2)
# Read-out matrices as tabulated; each must be reproduced by a single pi/2-area pulse.
READOUT_MATRICES = np.array([
    [[1, -1, 0], [1, 1, 0], [0, 0, _S2]],
    [[1, -1j, 0], [-1j, 1, 0], [0, 0, _S2]],
    [[_S2, 0, 0], [0, 1, 1], [0, -1, 1]],
    [[_S2, 0, 0], [0, 1, -1j], [0, -1j, 1]],
    [[1, 0, -1], [0, -_S2, 0], [-1, 0, -1]],
    [[1, 0, -1j], [0, -_S2, 0], [1j, 0, -1]],
], dtype=complex)/_S2


class ReadoutSet:
    """
    The read-out operators R_1 ... R_6 and their 18 measurement projectors.

    Each R_i is a single pi/2-area pulse; projector (i, j) is R_i^dag |j><j| R_i, so the
    probability of outcome j after read-out i is (R_i rho R_i^dag)_jj.
    """

    def __init__(self, pulses: Optional[list[Pulse]] = None):
        self._pulses = pulses or readout_pulses()
        if len(self._pulses) != 6:
            raise ValidationError(f'six read-out pulses expected, got {len(self._pulses)}')
        self._matrices = np.stack([pulse_unitary(p) for p in self._pulses])
        rows = self._matrices  # row j of R_i is <j| R_i
        self._projectors = np.einsum('iaj,iak->iajk', rows.conj(), rows)

    @property
    def pulses(self) -> list[Pulse]:
        return list(self._pulses)

    @property
    def matrices(self) -> np.ndarray:
        return self._matrices

    @property
    def projectors(self) -> np.ndarray:
        """Shape (6, 3, 3, 3): projectors[i, j] = R_i^dag |j><j| R_i."""
        return self._projectors

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        return np.real(np.einsum('ijab,ba->ij', self._projectors, rho))

    def projection(self, i: int, j: int) -> np.ndarray:
        """R_i^dag |j><j| R_i with 1-based read-out index i, as written in tables."""
        return self._projectors[i - 1, j]


def gell_mann_from_readouts(readouts: ReadoutSet) -> np.ndarray:
    """The eight Gell-Mann matrices built from read-out projections."""
    p = readouts.projection
    return np.stack([
        p(1, 1) - p(1, 0),
        p(2, 0) - p(2, 1),
        p(3, 0) - p(5, 1),
        p(5, 2) - p(5, 0),
        p(6, 0) - p(6, 2),
        p(3, 1) - p(3, 2),
        p(4, 1) - p(4, 2),
        (p(3, 0) + p(5, 1) - 2*p(1, 2))/np.sqrt(3),
    ])


def gell_mann_alternatives(readouts: ReadoutSet) -> dict[int, list[np.ndarray]]:
    """All constructions of lambda_3 (4 ways) and lambda_8 (8 ways).

    |0><0| is left unchanged by R_3, R_4; |1><1| by R_5, R_6; |2><2| by R_1, R_2.
    """
    p = readouts.projection
    keep_0, keep_1, keep_2 = (3, 4), (5, 6), (1, 2)
    lam3 = [p(a, 0) - p(b, 1) for a, b in itertools.product(keep_0, keep_1)]
    lam8 = [
        (p(a, 0) + p(b, 1) - 2*p(c, 2))/np.sqrt(3)
        for a, b, c in itertools.product(keep_0, keep_1, keep_2)
    ]
    return {3: lam3, 8: lam8}


def simulate_fractions(rho: np.ndarray, readouts: ReadoutSet, atoms: Optional[int] = None,
                       rng: Optional[np.random.Generator] = None, scans: int = 1) -> TomographyData:
    """Exact fractions, or multinomial counts of `atoms` atoms per read-out when atoms is set."""
    probs = np.clip(readouts.probabilities(rho), 0.0, None)
    probs = probs/probs.sum(axis=1, keepdims=True)
    if atoms is None:
        return TomographyData(fractions=probs.tolist(), scans=scans)
    if atoms <= 0:
        raise ValidationError(f'atom count must be positive, got {atoms}')
    if rng is None:
        raise ValidationError('multinomial noise needs a seeded generator')
    counts = np.stack([rng.multinomial(atoms, row) for row in probs])
    return TomographyData(fractions=(counts/atoms).tolist(), atoms=atoms, scans=scans)


def average_data(datasets: list[TomographyData]) -> TomographyData:
    fractions = np.mean([np.asarray(d.fractions) for d in datasets], axis=0)
    fractions = fractions/fractions.sum(axis=1, keepdims=True)
    return TomographyData(fractions=fractions.tolist(), atoms=datasets[0].atoms, scans=len(datasets))


def log_likelihood(fractions: np.ndarray, probs: np.ndarray) -> float:
    mask = fractions > 0
    return float(np.sum(fractions[mask]*np.log(np.clip(probs[mask], 1e-300, None))))


@dataclass
class MleResult:
    rho: np.ndarray
    iterations: int
    converged: bool
    stop_reason: str
    regularized: bool = False
    diluted_steps: int = 0
    accelerated_steps: int = 0
    log_likelihood: list[float] = field(default_factory=list)


def _q_operator(readouts: ReadoutSet, fractions: np.ndarray, probs: np.ndarray) -> np.ndarray:
    ratio = np.divide(fractions, probs, out=np.zeros_like(fractions), where=fractions > 0)
    # Sum of all 18 projectors is 6 * identity; dividing by 6 puts the fixed point at R = 1
    return np.einsum('ij,ijab->ab', ratio, readouts.projectors)/6


def _normalised(r: np.ndarray, rho: np.ndarray) -> np.ndarray:
    out = r @ rho @ dagger(r)
    out = (out + dagger(out))/2
    return out/np.trace(out).real


def _power(r: np.ndarray, exponent: float) -> np.ndarray:
    """R^exponent for the positive semi-definite R, scaled so its top eigenvalue is 1."""
    w, v = np.linalg.eigh((r + dagger(r))/2)
    w = np.clip(w, 0.0, None)
    w = w/max(float(w.max()), 1e-300)
    return (v*w**exponent) @ dagger(v)


def _trial(r: np.ndarray, rho: np.ndarray, readouts: ReadoutSet,
           fractions: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    candidate = _normalised(r, rho)
    probs = readouts.probabilities(candidate)
    value = log_likelihood(fractions, probs)
    if not np.isfinite(value) or not np.all(np.isfinite(candidate)):
        return candidate, probs, -np.inf
    return candidate, probs, value


def mle_reconstruct(data: TomographyData, readouts: ReadoutSet, max_iter: int = 5000,
                    tol: float = 1e-10, track_likelihood: bool = False,
                    accelerate: bool = True) -> MleResult:
    """Iterate rho <- R rho R / Tr(R rho R) from the maximally mixed state.

    With accelerate, each iteration first tries the over-relaxed step R^k rho R^k: k doubles
    after every accepted step and is halved back towards 1 while the likelihood would
    drop. Near a rank-deficient optimum the plain step shrinks the small eigenvalues only
    as 1/iterations; the growing exponent keeps that decay geometric.

    A plain step that would lower the log-likelihood is diluted, R -> (1 + e R)/(1 + e)
    with e halved until the likelihood no longer drops.
    """
    fractions = np.asarray(data.fractions, dtype=float)
    rho = MAXIMALLY_MIXED.copy()
    regularized = False
    diluted = 0
    accelerated = 0
    power = 1.0
    history = []
    probs = readouts.probabilities(rho)
    current = log_likelihood(fractions, probs)

    for iteration in range(1, max_iter + 1):
        if np.any((probs <= 0) & (fractions > 0)):
            rho = (1 - REGULARIZATION)*rho + REGULARIZATION*MAXIMALLY_MIXED
            probs = readouts.probabilities(rho)
            current = log_likelihood(fractions, probs)
            regularized = True
            logger.warning('Zero-probability projection with non-zero data; blended with 1/3')

        r = _q_operator(readouts, fractions, probs)
        value = -np.inf
        while accelerate and power > 1.0:
            candidate, cand_probs, value = _trial(_power(r, power), rho, readouts, fractions)
            if value >= current - LIKELIHOOD_SLACK:
                accelerated += 1
                break
            power /= 2
        if power <= 1.0:
            power = 1.0
            candidate, cand_probs, value = _trial(r, rho, readouts, fractions)

        epsilon = 1.0
        while value < current - LIKELIHOOD_SLACK and epsilon > 1e-12:
            diluted += 1
            candidate, cand_probs, value = _trial((IDENTITY + epsilon*r)/(1 + epsilon), rho, readouts, fractions)
            epsilon /= 2
        if value < current - LIKELIHOOD_SLACK:
            return MleResult(rho, iteration, False, 'stalled', regularized, diluted, accelerated, history)
        if accelerate:
            power = min(2*power, MAX_POWER) if epsilon == 1.0 else 1.0

        step = float(np.linalg.norm(candidate - rho))
        rho, probs, current = candidate, cand_probs, value
        if track_likelihood:
            history.append(current)
        if step <= tol:
            logger.debug(f'MLE converged after {iteration} iterations (step {step:.2e})')
            return MleResult(rho, iteration, True, 'converged', regularized, diluted, accelerated, history)

    logger.warning(f'MLE reached {max_iter} iterations without meeting step tolerance {tol:.1e}')
    return MleResult(rho, max_iter, False, 'max_iter', regularized, diluted, accelerated, history)


@dataclass
class Metrics:
    fidelity: float
    purity: float
    fidelity_pure: float
    nonphysical: bool = False


def state_metrics(rho: np.ndarray, gate: np.ndarray, n: int) -> Metrics:
    purified = purify(rho)
    if purified.nonphysical:
        logger.warning(f'Purified state has eigenvalue {purified.min_eigenvalue:.3e}')
    return Metrics(
        fidelity=fidelity(rho, gate, n),
        purity=purity(rho),
        fidelity_pure=fidelity(purified.rho, gate, n),
        nonphysical=purified.nonphysical,
    )


@dataclass
class AveragingRow:
    scans: int
    mean: Metrics
    residual: Metrics
    spread: Metrics


def averaging_study(rho: np.ndarray, gate: np.ndarray, n: int, readouts: ReadoutSet, n_scans: int,
                    atoms: Optional[int], seed: int, trials: int = 10, scan_counts=None,
                    max_iter: int = 5000, tol: float = 1e-10) -> list[AveragingRow]:
    """Metric mean and max-min spread over `trials` independent N-scan averages.

    Residuals are taken against the mean at the largest N. Trial t draws its scans from the
    generator seeded with (seed, t), so the N-scan average extends the (N-1)-scan one.
    """
    if n_scans < 1 or trials < 1:
        raise ValidationError('n_scans and trials must be at least 1')
    scan_counts = list(scan_counts or range(1, n_scans + 1))

    draws = []
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        draws.append([simulate_fractions(rho, readouts, atoms, rng) for _ in range(n_scans)])

    table = {}
    for count in scan_counts:
        values = []
        for scans in draws:
            result = mle_reconstruct(average_data(scans[:count]), readouts, max_iter, tol)
            m = state_metrics(result.rho, gate, n)
            values.append((m.fidelity, m.purity, m.fidelity_pure))
        table[count] = np.array(values)
        logger.debug(f'N={count}: mean F={table[count][:, 0].mean():.6f}')

    reference = table[max(scan_counts)].mean(axis=0)
    rows = []
    for count in scan_counts:
        values = table[count]
        mean = values.mean(axis=0)
        spread = values.max(axis=0) - values.min(axis=0)
        rows.append(AveragingRow(
            scans=count,
            mean=Metrics(*mean),
            residual=Metrics(*(mean - reference)),
            spread=Metrics(*spread),
        ))
    return rows


def gell_mann_basis_check(readouts: ReadoutSet) -> float:
    """Largest entrywise deviation of the read-out constructions from the Gell-Mann basis."""
    built = gell_mann_from_readouts(readouts)
    worst = float(np.max(np.abs(built - GELL_MANN)))
    for k, options in gell_mann_alternatives(readouts).items():
        for option in options:
            worst = max(worst, float(np.max(np.abs(option - GELL_MANN[k - 1]))))
    return worst


def readout_table_deviation(readouts: ReadoutSet) -> float:
    return float(np.max(np.abs(readouts.matrices - READOUT_MATRICES)))


def projector_sums(readouts: ReadoutSet) -> np.ndarray:
    return readouts.projectors.sum(axis=1)


def rank_one(readouts: ReadoutSet) -> bool:
    for i in range(6):
        for j in range(3):
            vec = readouts.matrices[i, j].conj()
            if np.max(np.abs(readouts.projectors[i, j] - projector(vec))) > 1e-12:
                return False
    return True
