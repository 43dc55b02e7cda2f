import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError
from scipy import integrate

from qusynth.commands import stark_rows
from qusynth.errors import ValidationError
from qusynth.qmath import basis, purity, trace_distance
from qusynth.schemas import TrapModel
from qusynth.selftest import STARK_REFERENCE
from qusynth.stark import (
    ensemble_density_matrix,
    ensemble_detunings,
    ensemble_propagators,
    mean_tensor_shift,
    mix,
    stark_profile,
    tf_density,
)
from qusynth.synth import fourier_dual_tone
from qusynth.tomo import ReadoutSet, mle_reconstruct, simulate_fractions


def test_profile_endpoints():
    model = TrapModel()
    tensor, scalar = stark_profile(model, np.array([0.0, model.r_tf]))
    np.testing.assert_allclose(tensor, [25.8e3, 25.3e3])
    np.testing.assert_allclose(scalar, [6.0e3, 5.9e3])


def test_density_is_normalised_and_peaks_inside():
    model = TrapModel()
    total, _ = integrate.quad(lambda r: float(tf_density(model, r)), 0, model.r_tf)
    assert total == pytest.approx(1.0, rel=1e-10)

    r = np.linspace(0, model.r_tf, 200001)
    peak = r[np.argmax(tf_density(model, r))]
    assert peak/model.r_tf == pytest.approx(1/np.sqrt(2), abs=1e-4)
    assert tf_density(model, 2*model.r_tf) == 0.0


def test_mean_tensor_shift():
    # 25.3 kHz + 0.5 kHz * <1 - x^2> with <1 - x^2> = 4/7
    assert mean_tensor_shift(TrapModel()) == pytest.approx(25.3e3 + 500*4/7, rel=1e-12)


def test_ensemble_mean_matches_quadrature():
    model = TrapModel(samples=1000)
    spec = ensemble_detunings(model)
    assert spec.mean_shift_hz == pytest.approx(mean_tensor_shift(model), rel=1e-6)
    assert np.sum(spec.weights) == pytest.approx(1.0)
    assert spec.mean_delta_a == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_array_equal(spec.delta_b, spec.delta_a)


def test_opposed_transitions():
    common = ensemble_detunings(TrapModel(samples=100))
    opposed = ensemble_detunings(TrapModel(samples=100), transitions='opposed')
    np.testing.assert_array_equal(opposed.delta_a, common.delta_a)
    np.testing.assert_array_equal(opposed.delta_b, -common.delta_a)


def test_unknown_conventions_rejected(rabi):
    with pytest.raises(ValidationError):
        ensemble_detunings(TrapModel(samples=10), transitions='mirrored')
    spec = ensemble_detunings(TrapModel(samples=10))
    with pytest.raises(ValidationError):
        ensemble_propagators(fourier_dual_tone(), spec, rabi, clock='lab')


def test_clock_conventions_differ_under_detuning(rabi):
    seq = fourier_dual_tone()
    spec = ensemble_detunings(TrapModel(samples=20))
    per_pulse = ensemble_propagators(seq, spec, rabi, clock='pulse')
    shared = ensemble_propagators(seq, spec, rabi, clock='sequence')
    assert np.max(np.abs(per_pulse - shared)) > 1e-3


def test_detuning_range():
    spec = ensemble_detunings(TrapModel(samples=1000))
    # Delta/2pi = 500 (3/7 - x^2) Hz
    assert spec.delta_a.max()/(2*np.pi) == pytest.approx(500*3/7, abs=1.0)
    assert spec.delta_a.min()/(2*np.pi) == pytest.approx(-500*4/7, abs=1.0)


def test_scalar_channel_widens_spread():
    base = ensemble_detunings(TrapModel(samples=200))
    scalar = ensemble_detunings(TrapModel(samples=200, include_scalar=True))
    assert np.ptp(scalar.delta_a) > np.ptp(base.delta_a)
    assert scalar.mean_delta_a == pytest.approx(0.0, abs=1e-9)


def test_random_sampling_needs_seed():
    with pytest.raises(PydanticValidationError):
        TrapModel(sampling='random')


def test_random_sampling_is_reproducible():
    a = ensemble_detunings(TrapModel(samples=300, sampling='random', seed=7))
    b = ensemble_detunings(TrapModel(samples=300, sampling='random', seed=7))
    np.testing.assert_array_equal(a.delta_a, b.delta_a)
    assert a.mean_shift_hz == pytest.approx(mean_tensor_shift(TrapModel()), rel=2e-3)


def test_inverted_profile_rejected():
    with pytest.raises(PydanticValidationError):
        TrapModel(tensor_center_hz=25.0e3, tensor_edge_hz=25.3e3)


def test_mix_of_identical_propagators_is_pure():
    u = np.stack([np.eye(3)]*4)
    rho = mix(u, np.full(4, 0.25), basis(1))
    assert purity(rho) == pytest.approx(1.0)


def test_flat_trap_keeps_ideal_metrics(config):
    config.trap.tensor_center_hz = config.trap.tensor_edge_hz
    config.trap.samples = 50
    for row in stark_rows(config):
        assert row.purity == pytest.approx(1.0, abs=1e-6)
        assert row.fidelity == pytest.approx(1.0, abs=1e-6)
        assert row.fidelity_pure == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize('n', [0, 1, 2])
def test_purity_drops_with_spread(rabi, n):
    seq = fourier_dual_tone()
    purities = []
    for factor in np.linspace(0.0, 2.0, 5):
        spec = ensemble_detunings(TrapModel(samples=200).scaled(factor))
        purities.append(purity(ensemble_density_matrix(seq, spec, basis(n), rabi)))
    assert purities[0] == pytest.approx(1.0, abs=1e-12)
    assert all(a > b for a, b in zip(purities, purities[1:]))


def test_propagators_reused_for_every_input(rabi):
    seq = fourier_dual_tone()
    spec = ensemble_detunings(TrapModel(samples=40))
    props = ensemble_propagators(seq, spec, rabi)
    assert props.shape == (40, 3, 3)
    for n in range(3):
        direct = ensemble_density_matrix(seq, spec, basis(n), rabi)
        np.testing.assert_allclose(mix(props, spec.weights, basis(n)), direct, atol=1e-14)


def test_ensemble_tomography_round_trip(rabi):
    spec = ensemble_detunings(TrapModel(samples=200))
    rho = ensemble_density_matrix(fourier_dual_tone(), spec, basis(0), rabi)
    readouts = ReadoutSet()
    result = mle_reconstruct(simulate_fractions(rho, readouts), readouts)
    assert trace_distance(result.rho, rho) <= 1e-4


@pytest.mark.slow
def test_ensemble_table(config):
    for row in stark_rows(config):
        expected = STARK_REFERENCE[(row.operator, row.input)]
        assert row.purity == pytest.approx(expected[0], abs=0.02)
        assert row.fidelity == pytest.approx(expected[1], abs=0.02)
        assert row.fidelity_pure == pytest.approx(expected[2], abs=0.02)
        assert row.fidelity_pure >= 0.99


def test_reference_table_with_coarse_sampling(config):
    config.trap.samples = 200
    for row in stark_rows(config):
        expected = STARK_REFERENCE[(row.operator, row.input)]
        assert row.purity == pytest.approx(expected[0], abs=0.02)
        assert row.fidelity == pytest.approx(expected[1], abs=0.02)
        assert row.fidelity_pure >= 0.99


def test_single_clock_opposed_model_overshoots_dephasing(config):
    config.trap.samples = 100
    config.stark.transitions = 'opposed'
    config.stark.clock = 'sequence'
    rows = {(r.operator, r.input): r for r in stark_rows(config)}
    assert rows[('F_II', 0)].purity < 0.9
