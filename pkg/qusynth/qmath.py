"""Dense 3x3 complex linear algebra, the Gell-Mann basis and state-quality metrics."""
from dataclasses import dataclass

import numpy as np
from scipy import linalg as la
from scipy.optimize import minimize_scalar

from qusynth.errors import NotHermitianError, NotUnitaryError

DIM = 3
IDENTITY = np.eye(DIM, dtype=complex)
MAXIMALLY_MIXED = IDENTITY/DIM

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-10


def _gell_mann() -> np.ndarray:
    lam = np.zeros((8, DIM, DIM), dtype=complex)
    lam[0][0, 1] = lam[0][1, 0] = 1
    lam[1][0, 1], lam[1][1, 0] = -1j, 1j
    lam[2][0, 0], lam[2][1, 1] = 1, -1
    lam[3][0, 2] = lam[3][2, 0] = 1
    lam[4][0, 2], lam[4][2, 0] = -1j, 1j
    lam[5][1, 2] = lam[5][2, 1] = 1
    lam[6][1, 2], lam[6][2, 1] = -1j, 1j
    lam[7] = np.diag([1, 1, -2])/np.sqrt(3)
    lam.setflags(write=False)
    return lam


# lambda_1 ... lambda_8, normalised Tr(l_i l_j) = 2 delta_ij
GELL_MANN = _gell_mann()


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m)))


def basis(n: int) -> np.ndarray:
    if n not in (0, 1, 2):
        raise ValueError(f'basis index must be 0, 1 or 2, got {n}')
    v = np.zeros(DIM, dtype=complex)
    v[n] = 1.0
    return v


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    return u.shape == (DIM, DIM) and max_abs(dagger(u) @ u - IDENTITY) <= tol


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h, dtype=complex)
    return h.shape == (DIM, DIM) and max_abs(h - dagger(h)) <= tol


def is_density_matrix(rho: np.ndarray, tol: float = 1e-9) -> bool:
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho) or abs(np.trace(rho) - 1.0) > 1e-10:
        return False
    return float(np.min(la.eigvalsh(rho))) >= -tol


def require_unitary(u, name: str = 'operator') -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (DIM, DIM):
        raise NotUnitaryError(f'{name} must be 3x3, got shape {u.shape}')
    if not is_unitary(u):
        raise NotUnitaryError(f'{name} is not unitary: |U^dag U - 1| = {max_abs(dagger(u) @ u - IDENTITY):.3e}')
    return u


def expm_coupling(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) for a Hermitian generator H (hbar = 1), by eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h, tol=HERMITIAN_TOL*max(1.0, max_abs(h))):
        raise NotHermitianError(f'generator is not Hermitian: |H - H^dag| = {max_abs(h - dagger(h)):.3e}')
    h = (h + dagger(h))/2
    w, v = la.eigh(h)
    return (v*np.exp(-1j*w*t)) @ dagger(v)


def fidelity(rho_out: np.ndarray, gate: np.ndarray, n: int) -> float:
    """<n| U^dag rho U |n>: overlap of rho_out with the ideal output U|n>."""
    psi = np.asarray(gate, dtype=complex) @ basis(n)
    return float(np.real(psi.conj() @ rho_out @ psi))


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ rho)))


@dataclass
class PurifyResult:
    rho: np.ndarray
    min_eigenvalue: float

    @property
    def nonphysical(self) -> bool:
        return self.min_eigenvalue < -1e-6


def purify(rho: np.ndarray) -> PurifyResult:
    """Nearest-pure-state estimate (rho - 1/3)/P + 1/3, applied as written.

    The output keeps unit trace and Hermiticity but may leave the physical set; the
    result carries the smallest eigenvalue so callers can flag it.
    """
    rho = np.asarray(rho, dtype=complex)
    out = (rho - MAXIMALLY_MIXED)/purity(rho) + MAXIMALLY_MIXED
    return PurifyResult(rho=out, min_eigenvalue=float(np.min(la.eigvalsh((out + dagger(out))/2))))


def gell_mann_expectations(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return np.real(np.einsum('kij,ji->k', GELL_MANN, rho))


def from_gell_mann(expectations) -> np.ndarray:
    """rho = 1/3 + (1/2) sum_k <lambda_k> lambda_k."""
    return MAXIMALLY_MIXED + 0.5*np.einsum('k,kij->ij', np.asarray(expectations, dtype=float), GELL_MANN)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = np.asarray(rho, dtype=complex) - np.asarray(sigma, dtype=complex)
    return float(0.5*np.sum(np.abs(la.eigvalsh((diff + dagger(diff))/2))))


def distance_mod_phase(u: np.ndarray, v: np.ndarray) -> float:
    """min over theta of max_ij |U - e^{i theta} V|.

    Seeded at theta = arg Tr(V^dag U), scanned on a coarse grid around the circle and
    polished with a bounded scalar minimisation around every local minimum of the grid.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)

    def spread(theta: float) -> float:
        return max_abs(u - np.exp(1j*theta)*v)

    theta0 = float(np.angle(np.trace(dagger(v) @ u)))
    grid = theta0 + np.linspace(-np.pi, np.pi, 721)
    values = np.max(np.abs(u[None] - np.exp(1j*grid)[:, None, None]*v[None]), axis=(1, 2))
    step = grid[1] - grid[0]
    # grid[0] and grid[-1] are the same angle
    ring = values[:-1]
    local = np.flatnonzero((ring <= np.roll(ring, 1)) & (ring <= np.roll(ring, -1)))
    best = min(float(values.min()), spread(theta0))
    for k in local:
        polished = minimize_scalar(spread, bounds=(grid[k] - step, grid[k] + step),
                                   method='bounded', options={'xatol': 1e-12})
        best = min(best, float(polished.fun))
    return best


def haar_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random U(3): QR of a complex Gaussian matrix with the R diagonal phase-fixed."""
    z = (rng.standard_normal((DIM, DIM)) + 1j*rng.standard_normal((DIM, DIM)))/np.sqrt(2)
    q, r = la.qr(z)
    d = np.diag(r)
    return q*(d/np.abs(d))


def haar_special_unitary(rng: np.random.Generator) -> np.ndarray:
    u = haar_unitary(rng)
    return u/np.linalg.det(u)**(1/DIM)


def random_pure_state(rng: np.random.Generator) -> np.ndarray:
    return haar_unitary(rng)[:, 0]


def random_density_matrix(rng: np.random.Generator, mix: float = 0.0) -> np.ndarray:
    """Hilbert-Schmidt random state, optionally blended with the maximally mixed state."""
    g = rng.standard_normal((DIM, DIM)) + 1j*rng.standard_normal((DIM, DIM))
    rho = g @ dagger(g)
    rho = rho/np.trace(rho)
    return (1 - mix)*rho + mix*MAXIMALLY_MIXED
