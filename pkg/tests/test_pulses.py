import math

import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from qusynth.errors import ValidationError
from qusynth.pulses import (
    ab_couplings,
    ab_parameters,
    fold_virtual_phase,
    pulse_unitary,
    pulses_unitary,
    sequence_unitary,
    shift_through_phase,
    u_a,
    u_ab,
    u_b,
    u_theta,
)
from qusynth.qmath import dagger, is_unitary
from qusynth.schemas import Pulse, PulseSequence, VirtualPhase, wrap_phase

S2 = math.sqrt(2)


def test_u_a_quarter_area():
    expected = np.array([[1, -1, 0], [1, 1, 0], [0, 0, S2]])/S2
    np.testing.assert_allclose(u_a(math.pi/4, 0), expected, atol=1e-15)


def test_u_b_quarter_area_phase():
    expected = np.array([[S2, 0, 0], [0, 1, -1j], [0, -1j, 1]])/S2
    np.testing.assert_allclose(u_b(math.pi/4, math.pi/2), expected, atol=1e-15)


def test_u_ab_quarter_angle():
    expected = np.array([[1, 0, -1], [0, -S2, 0], [-1, 0, -1]])/S2
    np.testing.assert_allclose(u_ab(math.pi/4, 0), expected, atol=1e-15)


def test_u_ab_zero_angle_is_not_identity():
    np.testing.assert_allclose(u_ab(0, 0.3), np.diag([1, -1, -1]), atol=1e-15)


def test_u_a_pi_area_is_minus_identity_on_block():
    np.testing.assert_allclose(u_a(math.pi, 0.4), np.diag([-1, -1, 1]), atol=1e-15)


@pytest.mark.parametrize('factory', [u_a, u_b, u_ab])
def test_closed_forms_are_unitary(factory, rng):
    for _ in range(20):
        u = factory(rng.uniform(0, 2*np.pi), rng.uniform(-np.pi, np.pi))
        assert is_unitary(u, tol=1e-13)


def test_u_ab_is_an_involution(rng):
    for _ in range(100):
        u = u_ab(rng.uniform(0, np.pi), rng.uniform(-np.pi, np.pi))
        np.testing.assert_allclose(u @ u, np.eye(3), atol=1e-14)


@pytest.mark.parametrize('factory', [u_a, u_b])
def test_same_phase_pulses_add_areas(factory, rng):
    for _ in range(100):
        tau, tau2 = rng.uniform(0, 2*np.pi, 2)
        phi = rng.uniform(-np.pi, np.pi)
        np.testing.assert_allclose(factory(tau, phi) @ factory(tau2, phi), factory(tau + tau2, phi), atol=1e-13)


def test_u_theta_has_unit_determinant():
    assert np.linalg.det(u_theta(0.3, -1.1)) == pytest.approx(1.0, abs=1e-15)


def test_ab_couplings_round_trip():
    omega_a, omega_b, t_ab = ab_couplings(0.7, 1.2, 3.0)
    assert t_ab == pytest.approx(2*math.pi/3.0)
    assert math.hypot(abs(omega_a), abs(omega_b)) == pytest.approx(3.0)
    alpha, beta = ab_parameters(omega_a, omega_b)
    assert alpha == pytest.approx(0.7)
    assert beta == pytest.approx(1.2)


@pytest.mark.parametrize('alpha', [0.0, math.pi])
def test_ab_couplings_rejects_single_tone_limits(alpha):
    with pytest.raises(ValidationError):
        ab_couplings(alpha, 0.0, 1.0)


def test_ab_couplings_rejects_non_positive_rabi():
    with pytest.raises(ValidationError):
        ab_couplings(0.5, 0.0, 0.0)


def test_pulse_rejects_bad_input():
    with pytest.raises(PydanticValidationError):
        Pulse(channel='A', area=-0.1)
    with pytest.raises(PydanticValidationError):
        Pulse(channel='AB', area=4.0)
    with pytest.raises(PydanticValidationError):
        Pulse(channel='A', area=0.1, phase=float('nan'))


def test_phase_wrapping():
    assert wrap_phase(-math.pi) == pytest.approx(math.pi)
    assert wrap_phase(3*math.pi) == pytest.approx(math.pi)
    assert Pulse(channel='B', area=0.1, phase=2*math.pi + 0.25).phase == pytest.approx(0.25)


def test_sequence_order_is_application_order():
    first, second = Pulse(channel='A', area=0.4, phase=0.1), Pulse(channel='B', area=0.9, phase=-0.3)
    expected = pulse_unitary(second) @ pulse_unitary(first)
    np.testing.assert_allclose(pulses_unitary([first, second]), expected, atol=1e-15)


def test_empty_sequence_is_diagonal():
    seq = PulseSequence(virtual=VirtualPhase(eta=0.2, epsilon=0.5), global_phase=0.1)
    np.testing.assert_allclose(sequence_unitary(seq), np.exp(0.1j)*u_theta(0.2, 0.5), atol=1e-15)


@pytest.mark.parametrize('channel', ['A', 'B', 'AB'])
def test_shift_through_phase_matches_conjugation(channel, rng):
    for _ in range(25):
        area = rng.uniform(0.05, 3.0)
        p = Pulse(channel=channel, area=area, phase=rng.uniform(-np.pi, np.pi))
        vp = VirtualPhase(eta=rng.uniform(-np.pi, np.pi), epsilon=rng.uniform(-np.pi, np.pi))
        theta = u_theta(vp.eta, vp.epsilon)
        expected = dagger(theta) @ pulse_unitary(p) @ theta
        np.testing.assert_allclose(pulse_unitary(shift_through_phase(p, vp)), expected, atol=1e-12)


def test_shift_through_zero_phase_is_noop():
    p = Pulse(channel='AB', area=0.8, phase=0.4)
    assert shift_through_phase(p, VirtualPhase()) == p


def test_fold_virtual_phase_drops_the_gate():
    vp = VirtualPhase(eta=0.4, epsilon=-1.3)
    seq = PulseSequence(pulses=[Pulse(channel='A', area=0.5, phase=0.2)], virtual=vp)
    later = [Pulse(channel='B', area=0.7, phase=0.1), Pulse(channel='AB', area=1.1, phase=-0.6)]

    with_virtual = pulses_unitary(later) @ u_theta(vp.eta, vp.epsilon)
    folded = u_theta(vp.eta, vp.epsilon) @ pulses_unitary(fold_virtual_phase(seq, later))
    np.testing.assert_allclose(folded, with_virtual, atol=1e-12)


def test_text_record_round_trip():
    seq = PulseSequence(
        pulses=[Pulse(channel='AB', area=0.25, phase=-2.0), Pulse(channel='B', area=3.5, phase=1.0)],
        virtual=VirtualPhase(eta=1.0, epsilon=-0.5),
        global_phase=0.75,
    )
    text = seq.to_text()
    assert text.splitlines()[-2].startswith('THETA')
    parsed = PulseSequence.from_text(text)
    assert parsed.channels == seq.channels
    np.testing.assert_allclose(sequence_unitary(parsed), sequence_unitary(seq), atol=1e-15)
