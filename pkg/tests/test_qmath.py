import numpy as np
import pytest

from qusynth.errors import NotHermitianError, NotUnitaryError
from qusynth.qmath import (
    GELL_MANN,
    MAXIMALLY_MIXED,
    basis,
    distance_mod_phase,
    expm_coupling,
    fidelity,
    from_gell_mann,
    gell_mann_expectations,
    haar_special_unitary,
    haar_unitary,
    is_unitary,
    projector,
    purify,
    purity,
    random_density_matrix,
    require_unitary,
    trace_distance,
)


def test_gell_mann_algebra():
    for k, lam in enumerate(GELL_MANN):
        assert np.allclose(lam, lam.conj().T), k
        assert abs(np.trace(lam)) < 1e-14
        for l, mu in enumerate(GELL_MANN):
            assert np.trace(lam @ mu) == pytest.approx(2.0 if k == l else 0.0, abs=1e-14)


def test_gell_mann_is_read_only():
    with pytest.raises(ValueError):
        GELL_MANN[0, 0, 0] = 5


def test_gell_mann_round_trip(rng):
    rho = random_density_matrix(rng)
    assert np.allclose(from_gell_mann(gell_mann_expectations(rho)), rho, atol=1e-13)


def test_expm_coupling_rejects_non_hermitian():
    h = np.zeros((3, 3), dtype=complex)
    h[0, 1] = 1.0
    with pytest.raises(NotHermitianError):
        expm_coupling(h, 1.0)


def test_expm_coupling_is_unitary(rng):
    g = rng.standard_normal((3, 3)) + 1j*rng.standard_normal((3, 3))
    u = expm_coupling(g + g.conj().T, 0.7)
    assert is_unitary(u)


def test_require_unitary():
    with pytest.raises(NotUnitaryError):
        require_unitary(np.diag([1.0, 1.0, 2.0]))


def test_fidelity_and_purity():
    rho = projector(basis(1))
    assert fidelity(rho, np.eye(3), 1) == pytest.approx(1.0)
    assert fidelity(rho, np.eye(3), 0) == pytest.approx(0.0)
    assert purity(rho) == pytest.approx(1.0)
    assert purity(MAXIMALLY_MIXED) == pytest.approx(1/3)


def test_fidelity_stays_in_unit_interval(rng):
    for _ in range(100):
        rho, gate = random_density_matrix(rng), haar_unitary(rng)
        for n in range(3):
            assert -1e-12 <= fidelity(rho, gate, n) <= 1 + 1e-12


def test_purity_invariant_under_unitaries(rng):
    for _ in range(100):
        rho, u = random_density_matrix(rng), haar_unitary(rng)
        assert purity(u @ rho @ u.conj().T) == pytest.approx(purity(rho), rel=1e-12)


def test_purify_pure_state_is_unchanged():
    rho = projector(np.array([1, 1j, -1])/np.sqrt(3))
    out = purify(rho)
    assert np.allclose(out.rho, rho, atol=1e-14)
    assert not out.nonphysical


def test_purify_can_overshoot():
    rho = 0.9*projector(basis(0)) + 0.1*projector(basis(1))
    out = purify(rho)
    assert np.trace(out.rho).real == pytest.approx(1.0)
    assert out.min_eigenvalue < 0
    assert out.rho[0, 0].real > 1.0


def test_distance_mod_phase_ignores_global_phase(rng):
    u = haar_unitary(rng)
    assert distance_mod_phase(np.exp(0.83j)*u, u) < 1e-12


def test_distance_mod_phase_sign_flip():
    # identity against diag(1, 1, -1): best phase is +-pi/2, leaving sqrt(2)
    d = distance_mod_phase(np.eye(3), np.diag([1, 1, -1]))
    assert d == pytest.approx(np.sqrt(2), abs=1e-9)


def test_distance_mod_phase_is_symmetric(rng):
    for _ in range(100):
        u, v = haar_unitary(rng), haar_unitary(rng)
        assert distance_mod_phase(u, v) == pytest.approx(distance_mod_phase(v, u), abs=1e-9)


def dense_grid_distance(u, v, points):
    """Minimum of max_ij |U - e^{i theta} V| over an evenly spaced theta grid."""
    best = np.inf
    for chunk in np.array_split(np.linspace(0, 2*np.pi, points, endpoint=False), max(1, points//20000)):
        spread = np.max(np.abs(u[None] - np.exp(1j*chunk)[:, None, None]*v[None]), axis=(1, 2))
        best = min(best, float(spread.min()))
    return best


def near_pairs(rng, count):
    for _ in range(count):
        u = haar_unitary(rng)
        v = np.exp(1j*rng.uniform(-np.pi, np.pi))*u @ expm_coupling(0.05*GELL_MANN[rng.integers(8)], 1.0)
        yield u, v
        yield u, haar_unitary(rng)


def test_distance_mod_phase_matches_dense_grid(rng):
    points = 10**4
    for u, v in near_pairs(rng, 10):
        brute = dense_grid_distance(u, v, points)
        d = distance_mod_phase(u, v)
        # |d spread / d theta| <= 1 for unitary V, so the grid overshoots by at most pi/points
        assert d <= brute + 1e-10
        assert d >= brute - np.pi/points


@pytest.mark.slow
def test_distance_mod_phase_matches_million_point_grid(rng):
    points = 10**6
    for u, v in near_pairs(rng, 3):
        brute = dense_grid_distance(u, v, points)
        d = distance_mod_phase(u, v)
        assert d <= brute + 1e-10
        assert d >= brute - np.pi/points


def test_haar_special_unitary_has_unit_determinant(rng):
    for _ in range(20):
        u = haar_special_unitary(rng)
        assert is_unitary(u)
        assert np.linalg.det(u) == pytest.approx(1.0, abs=1e-12)


def test_trace_distance_bounds(rng):
    rho, sigma = random_density_matrix(rng), random_density_matrix(rng)
    assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-14)
    assert 0.0 <= trace_distance(rho, sigma) <= 1.0
    assert trace_distance(projector(basis(0)), projector(basis(2))) == pytest.approx(1.0)
