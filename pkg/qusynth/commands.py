"""Command runners: each takes the resolved config, writes artifacts and returns a summary."""
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from ato.adict import ADict
from loguru import logger

from qusynth import plots
from qusynth.dynamics import detuning_sweep, population_scan
from qusynth.errors import ToleranceError, ValidationError
from qusynth.gates import gate_from_entries, named_gate, prepare_state
from qusynth.pulses import ab_couplings, sequence_unitary
from qusynth.qmath import basis, distance_mod_phase, trace_distance
from qusynth.schemas import DecompositionReport, DensityReport, PulseSequence, StarkRow, TrapModel
from qusynth.stark import ensemble_detunings, ensemble_propagators, mean_tensor_shift, mix
from qusynth.storage import ResultStore, load_tomography_csv, tomography_frame
from qusynth.synth import decompose_steps, fourier_dual_tone, fourier_single_tone
from qusynth.tomo import (
    ReadoutSet,
    averaging_study,
    average_data,
    mle_reconstruct,
    simulate_fractions,
    state_metrics,
)

RECOMPOSE_TOL = 1e-9
SCAN_DARK_TOL = 1e-9

FOURIER_SEQUENCES = {
    'F_I': fourier_single_tone,
    'F_II': fourier_dual_tone,
}


@dataclass
class CommandResult:
    command: str
    summary: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)


def rabi(config: ADict) -> float:
    return 2*math.pi*float(config.drive.rabi_hz)


def target_gate(config: ADict) -> tuple[str, np.ndarray]:
    if config.gate.entries is not None:
        return 'entries', gate_from_entries(config.gate.entries)
    return config.gate.name, named_gate(config.gate.name)


def resolve_sequence(name: str, config: ADict) -> tuple[str, PulseSequence]:
    """'fourier_single', 'fourier_dual', or 'gate' (the configured target, compiled)."""
    if name == 'fourier_single':
        return 'F_I', fourier_single_tone()
    if name == 'fourier_dual':
        return 'F_II', fourier_dual_tone()
    if name == 'gate':
        label, u = target_gate(config)
        seq, _ = decompose_steps(u, config.gate.scheme)
        return label, seq
    raise ValidationError(f'Unknown sequence {name!r}; expected fourier_single, fourier_dual or gate')


def prepared_input(n: int) -> np.ndarray:
    """|n> as the experiment prepares it from |0>, phase included."""
    return sequence_unitary(prepare_state(n)) @ basis(0)


def ideal_output(seq: PulseSequence, n: int) -> np.ndarray:
    psi = sequence_unitary(seq) @ prepared_input(n)
    return np.outer(psi, psi.conj())


def density_report(rho: np.ndarray, seq: PulseSequence, n: int, iterations: int = 0,
                   stop_reason: str = '') -> DensityReport:
    m = state_metrics(rho, sequence_unitary(seq), n)
    return DensityReport(
        entries=[(float(z.real), float(z.imag)) for z in np.asarray(rho).ravel()],
        fidelity=m.fidelity,
        purity=m.purity,
        fidelity_pure=m.fidelity_pure,
        iterations=iterations,
        stop_reason=stop_reason,
        nonphysical_purified=m.nonphysical,
    )


def cmd_decompose(config: ADict) -> CommandResult:
    store = ResultStore(config)
    label, u = target_gate(config)
    seq, steps = decompose_steps(u, config.gate.scheme)
    distance = distance_mod_phase(sequence_unitary(seq), u)
    report = DecompositionReport(
        target=label,
        scheme=config.gate.scheme,
        sequence=seq,
        distance=distance,
        zeroed=[s.residual for s in steps],
    )

    frame = pd.DataFrame(
        [{'step': s.k, 'channel': s.pulse.channel, 'area': s.pulse.area, 'phase': s.pulse.phase,
          'row': s.spec.row, 'm': s.spec.m, 'n': s.spec.n, 'zeroed': s.residual} for s in steps],
        columns=['step', 'channel', 'area', 'phase', 'row', 'm', 'n', 'zeroed'],
    )
    store.save_table('decompose', frame, meta={
        'eta': seq.virtual.eta, 'epsilon': seq.virtual.epsilon,
        'global_phase': seq.global_phase, 'distance': distance,
    })
    store.save_json('decompose', report.model_dump())
    store.save_text('sequence.txt', seq.to_text())

    logger.info(f'{label} ({config.gate.scheme}): {seq.channels}, distance {distance:.3e}')
    if not report.passed:
        raise ToleranceError(f'Recomposition distance {distance:.3e} exceeds {RECOMPOSE_TOL:.0e}')
    return CommandResult('decompose', {'target': label, 'channels': list(seq.channels),
                                       'distance': distance}, store.written)


def cmd_scan(config: ADict) -> CommandResult:
    store = ResultStore(config)
    alpha, beta = config.scan.alpha*math.pi, config.scan.beta*math.pi
    omega_a, omega_b, t_ab = ab_couplings(alpha, beta, rabi(config))
    psi_in = basis(config.scan.input)
    times = np.linspace(0.0, config.scan.span*t_ab, config.scan.points)
    populations = population_scan(omega_a, omega_b, psi_in, times)

    dark = float(population_scan(omega_a, omega_b, psi_in, [t_ab])[0, 1])
    frame = pd.DataFrame({'t': times, 'P0': populations[:, 0], 'P1': populations[:, 1],
                          'P2': populations[:, 2]})
    store.save_table('scan', frame, meta={'t_AB': t_ab, 'P1_at_t_AB': dark})
    if config.output.svg:
        fig = plots.population_figure(times, populations, t_ab, title=f'alpha = {config.scan.alpha:g} pi')
        store.save_svg('scan', fig)

    logger.info(f't_AB = {t_ab*1e6:.3f} us, P1(t_AB) = {dark:.2e}')
    if config.scan.input != 1 and dark > SCAN_DARK_TOL:
        raise ToleranceError(f'|1> population at t_AB is {dark:.3e}')
    return CommandResult('scan', {'t_AB': t_ab, 'P1_at_t_AB': dark}, store.written)


def tolerated_ratio(ratios, fidelities, threshold: float) -> float:
    """Largest |Delta/Omega| on the grid below which every point keeps fidelity >= threshold."""
    order = np.argsort(np.abs(ratios), kind='stable')
    best = 0.0
    for k in order:
        if fidelities[k] < threshold:
            break
        best = float(abs(ratios[k]))
    return best


def cmd_detuning(config: ADict) -> CommandResult:
    store = ResultStore(config)
    d = config.detuning
    ratios = np.linspace(d.start, d.stop, d.points)

    rows, curves, tolerated = [], {}, {}
    for label, build in FOURIER_SEQUENCES.items():
        points = detuning_sweep(build(), ratios, rabi(config), config.drive.method,
                                config.drive.steps_per_pulse, config.drive.check_tol)
        values = np.array([p.fidelity for p in points])
        rows.extend({'sequence': label, 'ratio': p.ratio, 'fidelity': p.fidelity} for p in points)
        curves[label] = (ratios, values)
        tolerated[label] = tolerated_ratio(ratios, values, d.threshold)
        logger.info(f'{label}: F >= {d.threshold} for |Delta/Omega| <= {tolerated[label]:.4f}')

    store.save_table('detuning', pd.DataFrame(rows, columns=['sequence', 'ratio', 'fidelity']),
                     meta={'threshold': d.threshold, 'tolerated_ratio': tolerated})
    if config.output.svg:
        store.save_svg('detuning', plots.detuning_figure(curves, d.threshold))
    return CommandResult('detuning', {'tolerated_ratio': tolerated}, store.written)


def trap_model(config: ADict) -> TrapModel:
    t = config.trap
    model = TrapModel(
        r_tf=t.r_tf,
        tensor_center_hz=t.tensor_center_hz,
        tensor_edge_hz=t.tensor_edge_hz,
        scalar_center_hz=t.scalar_center_hz,
        scalar_edge_hz=t.scalar_edge_hz,
        omega_ho=t.omega_ho,
        samples=t.samples,
        sampling=t.sampling,
        include_scalar=t.include_scalar,
        seed=config.seed,
    )
    return model.scaled(t.spread_scale) if t.spread_scale != 1.0 else model


def stark_rows(config: ADict) -> list[StarkRow]:
    """Six (operator, input) rows of ensemble purity and fidelities."""
    model = trap_model(config)
    spec = ensemble_detunings(model, config.stark.transitions)
    readouts = ReadoutSet()
    rng = np.random.default_rng(config.seed)
    atoms = config.stark.atoms

    rows = []
    for label, build in FOURIER_SEQUENCES.items():
        seq = build()
        gate = sequence_unitary(seq)
        propagators = ensemble_propagators(seq, spec, 2*math.pi*float(config.stark.rabi_hz),
                                           config.stark.method, config.drive.steps_per_pulse,
                                           config.stark.clock)
        for n in range(3):
            rho = mix(propagators, spec.weights, prepared_input(n))
            if config.stark.tomography:
                data = simulate_fractions(rho, readouts, atoms, rng if atoms else None)
                result = mle_reconstruct(data, readouts, config.tomography.max_iter, config.tomography.tol)
                logger.debug(f'{label}|{n}>: round trip {trace_distance(result.rho, rho):.2e}')
                rho = result.rho
            m = state_metrics(rho, gate, n)
            rows.append(StarkRow(operator=label, input=n, purity=m.purity, fidelity=m.fidelity,
                                 fidelity_pure=m.fidelity_pure))
    return rows


def cmd_stark(config: ADict) -> CommandResult:
    store = ResultStore(config)
    model = trap_model(config)
    quad = mean_tensor_shift(model)
    spec = ensemble_detunings(model, config.stark.transitions)
    logger.info(f'<E_tensor> = {spec.mean_shift_hz:.3f} Hz (quadrature {quad:.3f} Hz)')

    rows = stark_rows(config)
    frame = pd.DataFrame([r.model_dump() for r in rows],
                         columns=['operator', 'input', 'purity', 'fidelity', 'fidelity_pure'])
    store.save_table('stark', frame, meta={'mean_tensor_shift_hz': spec.mean_shift_hz})
    store.save_json('stark', {'rows': [r.model_dump() for r in rows],
                              'mean_tensor_shift_hz': spec.mean_shift_hz})
    return CommandResult('stark', {'rows': len(rows), 'mean_tensor_shift_hz': spec.mean_shift_hz},
                         store.written)


def cmd_tomography(config: ADict) -> CommandResult:
    store = ResultStore(config)
    tomo = config.tomography
    label, seq = resolve_sequence(tomo.sequence, config)
    n = tomo.input
    ideal = ideal_output(seq, n)
    readouts = ReadoutSet()

    if tomo.data_path is not None:
        data = average_data(load_tomography_csv(tomo.data_path))
        logger.info(f'Loaded {data.scans} scan(s) from {tomo.data_path}')
    elif tomo.noise == 'multinomial':
        data = simulate_fractions(ideal, readouts, tomo.atoms, np.random.default_rng(config.seed))
    else:
        data = simulate_fractions(ideal, readouts)

    result = mle_reconstruct(data, readouts, tomo.max_iter, tomo.tol)
    report = density_report(result.rho, seq, n, result.iterations, result.stop_reason)

    store.save_table('tomography_fractions', tomography_frame(data))
    store.save_json('tomography', {'operator': label, 'input': n, 'report': report.model_dump(),
                                   'distance_to_ideal': trace_distance(result.rho, ideal)})
    if config.output.svg:
        store.save_svg('tomography', plots.density_figure(result.rho, ideal, title=f'{label}|{n}>'))
        store.save_svg('tomography_fractions', plots.fractions_figure(data.fractions))

    logger.info(f'{label}|{n}>: F={report.fidelity:.6f} P={report.purity:.6f} '
                f'({result.iterations} iterations, {result.stop_reason})')
    return CommandResult('tomography', {'fidelity': report.fidelity, 'purity': report.purity,
                                        'iterations': result.iterations}, store.written)


def averaging_frame(rows) -> pd.DataFrame:
    records = []
    for row in rows:
        record = {'scans': row.scans}
        for kind in ('mean', 'residual', 'spread'):
            m = getattr(row, kind)
            record.update({f'{kind}_fidelity': m.fidelity, f'{kind}_purity': m.purity,
                           f'{kind}_fidelity_pure': m.fidelity_pure})
        records.append(record)
    return pd.DataFrame(records)


def cmd_averaging(config: ADict) -> CommandResult:
    store = ResultStore(config)
    avg = config.averaging
    label, seq = resolve_sequence(avg.sequence, config)
    rho = ideal_output(seq, avg.input)
    rows = averaging_study(rho, sequence_unitary(seq), avg.input, ReadoutSet(), avg.scans, avg.atoms,
                           config.seed, avg.trials, max_iter=config.tomography.max_iter,
                           tol=config.tomography.tol)
    frame = averaging_frame(rows)
    store.save_table('averaging', frame, meta={'operator': label, 'trials': avg.trials})
    if config.output.svg:
        metrics = ('fidelity', 'purity', 'fidelity_pure')
        fig = plots.averaging_figure(
            frame['scans'],
            {m: frame[f'residual_{m}'] for m in metrics},
            {m: frame[f'spread_{m}'] for m in metrics},
        )
        store.save_svg('averaging', fig)

    first, last = rows[0].spread.fidelity, rows[-1].spread.fidelity
    logger.info(f'{label}: fidelity spread {first:.2e} at N=1, {last:.2e} at N={rows[-1].scans}')
    return CommandResult('averaging', {'spread_first': first, 'spread_last': last}, store.written)


def cmd_selftest(config: ADict) -> CommandResult:
    from qusynth.selftest import run_selftest

    return run_selftest(config)


COMMAND_HANDLERS = {
    'decompose': cmd_decompose,
    'scan': cmd_scan,
    'detuning': cmd_detuning,
    'stark': cmd_stark,
    'tomography': cmd_tomography,
    'averaging': cmd_averaging,
    'selftest': cmd_selftest,
}


def run_command(config: ADict) -> CommandResult:
    return COMMAND_HANDLERS[config.command](config)
