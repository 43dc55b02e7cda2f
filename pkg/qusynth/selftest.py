"""Acceptance suite behind the `selftest` verb."""
import copy
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from ato.adict import ADict
from loguru import logger

from qusynth.commands import CommandResult, rabi, stark_rows
from qusynth.config import to_plain
from qusynth.dynamics import (
    detuning_sweep,
    population_scan,
    propagate,
    rwa_hamiltonian,
)
from qusynth.errors import QusynthError, ToleranceError
from qusynth.gates import named_gate
from qusynth.pulses import ab_couplings, sequence_unitary, u_ab
from qusynth.qmath import (
    expm_coupling,
    fidelity,
    haar_special_unitary,
    max_abs,
    projector,
    random_density_matrix,
    random_pure_state,
    trace_distance,
)
from qusynth.schemas import Pulse, PulseSequence
from qusynth.storage import ResultStore
from qusynth.synth import Scheme, decompose, fourier_dual_tone, fourier_single_tone, recomposition_distance
from qusynth.tomo import (
    ReadoutSet,
    averaging_study,
    gell_mann_basis_check,
    mle_reconstruct,
    projector_sums,
    readout_table_deviation,
    simulate_fractions,
)

# (operator, input) -> (purity, fidelity, purity-adjusted fidelity)
STARK_REFERENCE = {
    ('F_II', 0): (0.953, 0.980, 1.009),
    ('F_II', 1): (0.950, 0.974, 1.008),
    ('F_II', 2): (0.953, 0.980, 1.009),
    ('F_I', 0): (0.963, 0.981, 1.006),
    ('F_I', 1): (0.965, 0.986, 1.007),
    ('F_I', 2): (0.965, 0.986, 1.007),
}
STARK_TOL = 0.02

PURE_MLE_TOL = 1e-5
PURE_MLE_INFIDELITY = 1e-6
MIXED_MLE_TOL = 1e-5


@dataclass
class CheckResult:
    criterion: int
    name: str
    value: float
    limit: float
    passed: bool
    detail: str = ''


def _check(criterion: int, name: str, value: float, limit: float, detail: str = '',
           passed: bool | None = None) -> CheckResult:
    ok = value <= limit if passed is None else passed
    return CheckResult(criterion, name, float(value), float(limit), bool(ok), detail)


def check_recomposition(cases: int, seed: int) -> CheckResult:
    rng = np.random.default_rng([seed, 1])
    worst = 0.0
    for _ in range(cases):
        u = haar_special_unitary(rng)
        for scheme in Scheme:
            worst = max(worst, recomposition_distance(decompose(u, scheme), u))
    return _check(1, 'Haar recomposition', worst, 1e-9, f'{cases} targets x 2 schemes')


def check_fourier() -> CheckResult:
    single = recomposition_distance(fourier_single_tone(), named_gate('fourier_12'))
    dual = recomposition_distance(fourier_dual_tone(), named_gate('fourier_01'))
    return _check(2, 'Fourier closed forms', max(single, dual), 1e-9,
                  f'single {single:.1e}, dual {dual:.1e}')


def check_dual_tone(cases: int, seed: int) -> CheckResult:
    rng = np.random.default_rng([seed, 3])
    worst = 0.0
    for _ in range(cases):
        omega_a, omega_b = rng.uniform(0.2, 2.0, 2)*np.exp(1j*rng.uniform(-np.pi, np.pi, 2))
        t_ab = 2*np.pi/np.hypot(abs(omega_a), abs(omega_b))
        u = expm_coupling(rwa_hamiltonian(omega_a, omega_b), t_ab)
        alpha = 2*math.atan(abs(omega_a/omega_b))
        beta = float(np.angle(omega_a/omega_b))
        worst = max(worst, max_abs(u - u_ab(alpha, beta)))
    return _check(3, 'Dual-tone oracle', worst, 1e-10, f'{cases} couplings')


def check_tables(readouts: ReadoutSet) -> CheckResult:
    table = readout_table_deviation(readouts)
    gell_mann = gell_mann_basis_check(readouts)
    sums = max_abs(projector_sums(readouts) - np.eye(3))
    return _check(4, 'Read-out / Gell-Mann tables', max(table, gell_mann, sums), 1e-12,
                  f'readouts {table:.1e}, constructions {gell_mann:.1e}')


def check_mle(cases: int, seed: int, readouts: ReadoutSet) -> list[CheckResult]:
    rng = np.random.default_rng([seed, 5])
    worst_pure, worst_infidelity, worst_mixed, worst_drop = 0.0, 0.0, 0.0, 0.0
    for _ in range(cases):
        psi = random_pure_state(rng)
        rho = projector(psi)
        result = mle_reconstruct(simulate_fractions(rho, readouts), readouts, track_likelihood=True)
        worst_pure = max(worst_pure, trace_distance(result.rho, rho))
        worst_infidelity = max(worst_infidelity, 1 - float(np.real(psi.conj() @ result.rho @ psi)))

        rho = random_density_matrix(rng, mix=0.2)
        result = mle_reconstruct(simulate_fractions(rho, readouts), readouts, track_likelihood=True)
        worst_mixed = max(worst_mixed, trace_distance(result.rho, rho))
        if len(result.log_likelihood) > 1:
            worst_drop = max(worst_drop, float(-np.min(np.diff(result.log_likelihood))))
    return [
        _check(5, 'MLE round trip (mixed)', worst_mixed, MIXED_MLE_TOL, f'{cases} states'),
        _check(5, 'MLE round trip (pure)', worst_pure, PURE_MLE_TOL, f'{cases} states'),
        _check(5, 'MLE pure-state fidelity', worst_infidelity, PURE_MLE_INFIDELITY, f'{cases} states'),
        _check(5, 'MLE likelihood monotone', worst_drop, 1e-12),
    ]


def _random_sequence(rng: np.random.Generator) -> PulseSequence:
    pulses = []
    for channel in rng.choice(['A', 'B', 'AB'], size=3):
        area = rng.uniform(0.05, 3.0) if channel != 'AB' else rng.uniform(0.05, np.pi - 0.05)
        pulses.append(Pulse(channel=str(channel), area=float(area), phase=float(rng.uniform(-np.pi, np.pi))))
    return PulseSequence(pulses=pulses)


def check_dynamics(cases: int, seed: int, rabi_rad: float) -> list[CheckResult]:
    rng = np.random.default_rng([seed, 6])
    worst, worst_exact, dark = 0.0, 0.0, 0.0
    for k in range(cases):
        seq = _random_sequence(rng)
        u = propagate(seq, rabi_rad, method='rk4')
        worst = max(worst, max_abs(u - sequence_unitary(seq)))
        if k < 10:
            delta = 0.05*rabi_rad*rng.uniform(-1, 1)
            reference = propagate(seq, rabi_rad, delta, -delta, method='rk4')
            worst_exact = max(worst_exact, max_abs(propagate(seq, rabi_rad, delta, -delta, method='exact') - reference))

        alpha, beta = rng.uniform(0.05, np.pi - 0.05), rng.uniform(-np.pi, np.pi)
        omega_a, omega_b, t_ab = ab_couplings(alpha, beta, rabi_rad)
        dark = max(dark, float(population_scan(omega_a, omega_b, np.eye(3)[0], [t_ab])[0, 1]))
    return [
        _check(6, 'Resonant propagation', worst, 1e-6, f'{cases} sequences'),
        _check(6, 'Exact vs RK4 (detuned)', worst_exact, 1e-8),
        _check(6, 'Dark level at t_AB', dark, 1e-9),
    ]


def check_sweep(points: int, rabi_rad: float) -> CheckResult:
    ratios = np.linspace(-0.05, 0.05, points)
    worst_zero, worst_above = 0.0, 0.0
    try:
        for build in (fourier_single_tone, fourier_dual_tone):
            sweep = detuning_sweep(build(), ratios, rabi_rad, method='rk4', check_tol=1e-6)
            for p in sweep:
                if abs(p.ratio) < 1e-12:
                    worst_zero = max(worst_zero, abs(1 - p.fidelity))
                worst_above = max(worst_above, p.fidelity - 1)
    except ToleranceError as e:
        return _check(7, 'Detuning sweep', math.inf, 1e-6, str(e), passed=False)
    value = max(worst_zero, worst_above)
    return _check(7, 'Detuning sweep', value, 1e-6, f'{points} points, halved-step checked')


def check_stark(config: ADict) -> list[CheckResult]:
    stark_config = copy.deepcopy(config)
    stark_config.trap.samples = config.selftest.stark_samples
    stark_config.stark.tomography = False
    rows = stark_rows(stark_config)

    worst, lowest_pure = 0.0, math.inf
    for row in rows:
        expected = STARK_REFERENCE[(row.operator, row.input)]
        got = (row.purity, row.fidelity, row.fidelity_pure)
        worst = max(worst, max(abs(a - b) for a, b in zip(got, expected)))
        lowest_pure = min(lowest_pure, row.fidelity_pure)
        logger.debug(f'{row.operator}|{row.input}>: P={row.purity:.4f} F={row.fidelity:.4f} '
                     f'Fp={row.fidelity_pure:.4f}')
    return [
        _check(8, 'Stark ensemble table', worst, STARK_TOL, f'{len(rows)} rows'),
        _check(9, 'Purity recovery', 0.99 - lowest_pure, 0.0, f'lowest {lowest_pure:.4f}'),
    ]


def check_averaging(config: ADict, readouts: ReadoutSet) -> CheckResult:
    seq = fourier_dual_tone()
    gate = sequence_unitary(seq)
    psi = gate[:, 0]
    scans = config.averaging.scans
    rows = averaging_study(projector(psi), gate, 0, readouts, scans, 100000, config.seed,
                           trials=config.averaging.trials, scan_counts=[1, scans],
                           max_iter=config.tomography.max_iter, tol=config.tomography.tol)
    first, last = rows[0], rows[-1]
    shrink = last.spread.fidelity <= first.spread.fidelity/2
    within = abs(last.mean.fidelity - first.mean.fidelity) <= first.spread.fidelity
    return _check(10, 'Averaging study', last.spread.fidelity, first.spread.fidelity/2,
                  f'spread N=1 {first.spread.fidelity:.2e}, N={scans} {last.spread.fidelity:.2e}',
                  passed=shrink and within)


def _fingerprint(seed: int, readouts: ReadoutSet) -> str:
    rng = np.random.default_rng([seed, 11])
    u = haar_special_unitary(rng)
    seq = decompose(u, Scheme.DUAL_TONE)
    rho = random_density_matrix(rng, mix=0.2)
    data = simulate_fractions(rho, readouts, 1000, rng)
    result = mle_reconstruct(data, readouts, max_iter=200)
    return json.dumps({
        'sequence': seq.to_text(),
        'fractions': data.fractions,
        'rho': [[float(z.real), float(z.imag)] for z in result.rho.ravel()],
        'fidelity': fidelity(result.rho, np.eye(3), 0),
    }, sort_keys=True)


def check_determinism(seed: int, readouts: ReadoutSet) -> CheckResult:
    same = _fingerprint(seed, readouts) == _fingerprint(seed, readouts)
    return _check(11, 'Determinism', 0.0 if same else 1.0, 0.0, 'two seeded reruns compared')


def run_checks(config: ADict) -> list[CheckResult]:
    counts = config.selftest
    seed = config.seed
    readouts = ReadoutSet()
    rabi_rad = rabi(config)

    stages = [
        lambda: [check_recomposition(counts.haar_cases, seed)],
        lambda: [check_fourier()],
        lambda: [check_dual_tone(counts.coupling_cases, seed)],
        lambda: [check_tables(readouts)],
        lambda: check_mle(counts.mle_cases, seed, readouts),
        lambda: check_dynamics(counts.dynamics_cases, seed, rabi_rad),
        lambda: [check_sweep(counts.sweep_points, rabi_rad)],
        lambda: check_stark(config),
        lambda: [check_averaging(config, readouts)],
        lambda: [check_determinism(seed, readouts)],
    ]
    results = []
    for stage in stages:
        try:
            batch = stage()
        except QusynthError as e:
            logger.error(f'Self-test stage failed: {e}')
            batch = [CheckResult(0, type(e).__name__, math.inf, 0.0, False, str(e))]
        for r in batch:
            logger.info(f'[{r.criterion:2d}] {r.name}: {r.value:.3e} (limit {r.limit:.1e}) '
                        f'{"PASS" if r.passed else "FAIL"}')
        results.extend(batch)
    return results


def print_table(results: list[CheckResult]):
    print('=' * 60)
    print('[qusynth selftest]')
    print('=' * 60)
    for r in results:
        status = 'PASS' if r.passed else 'FAIL'
        print(f'  {r.criterion:2d}  {status}  {r.name:<30s} {r.value:10.3e} <= {r.limit:.1e}')
    print('-' * 60)
    passed = sum(r.passed for r in results)
    print(f'  {passed}/{len(results)} checks passed')
    print('=' * 60)


def run_selftest(config: ADict) -> CommandResult:
    results = run_checks(config)
    print_table(results)

    store = ResultStore(config)
    frame = pd.DataFrame([asdict(r) for r in results],
                         columns=['criterion', 'name', 'value', 'limit', 'passed', 'detail'])
    store.save_table('selftest', frame)
    store.save_json('selftest', {'seed': config.seed, 'checks': [asdict(r) for r in results],
                                 'counts': to_plain(config.selftest)})

    failed = [r.name for r in results if not r.passed]
    if failed:
        raise ToleranceError(f'{len(failed)} self-test check(s) failed: {", ".join(failed)}')
    return CommandResult('selftest', {'passed': len(results)}, store.written)
