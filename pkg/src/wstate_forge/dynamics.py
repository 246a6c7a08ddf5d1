"""Closed and open evolution of single-excitation states.

Closed-system propagation goes through an exact eigendecomposition, so no
integrator error enters the design verification path.  Open-system runs
integrate the Lindblad master equation on the single-excitation manifold
extended by an explicit vacuum level, with excitation loss decaying into
the vacuum and pure dephasing acting as on-site projector channels.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .spectral import TridiagonalHamiltonian

__all__ = [
    "NoiseModel",
    "PopulationTrace",
    "propagator",
    "evolve_unitary",
    "evolve_lindblad",
    "three_qubit_hamiltonian",
    "three_qubit_half_period_detunings",
    "three_qubit_period",
    "resonant_w3_time",
    "phase_align",
    "state_to_density",
]

HERMITICITY_TOL = 1e-10


def _as_matrix(h) -> np.ndarray:
    if isinstance(h, TridiagonalHamiltonian):
        return h.matrix().astype(complex)
    m = np.asarray(h, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    scale = max(1.0, np.abs(m).max())
    if np.abs(m - m.conj().T).max() > HERMITICITY_TOL * scale:
        raise ValueError("Hamiltonian is not Hermitian within tolerance")
    return m


@dataclass(frozen=True)
class NoiseModel:
    """Per-site relaxation (T1) and echo dephasing (T2) times in ns.

    The derived rates are gamma1 = 1/T1 and gamma_phi = 1/T2 - 1/(2 T1);
    T2 > 2 T1 would imply a negative dephasing rate and is rejected.
    """

    t1: np.ndarray
    t2: np.ndarray

    def __post_init__(self):
        t1 = np.atleast_1d(np.asarray(self.t1, dtype=float))
        t2 = np.atleast_1d(np.asarray(self.t2, dtype=float))
        if t1.shape != t2.shape:
            raise ValueError("t1 and t2 must have matching shapes")
        if np.any(t1 <= 0) or np.any(t2 <= 0):
            raise ValueError("coherence times must be positive")
        if np.any(t2 > 2 * t1 * (1 + 1e-12)):
            raise ValueError("T2 must not exceed 2*T1")
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)

    @classmethod
    def uniform(cls, n_sites: int, t1: float, t2: float) -> "NoiseModel":
        return cls(np.full(n_sites, t1), np.full(n_sites, t2))

    @property
    def n_sites(self) -> int:
        return len(self.t1)

    @property
    def loss_rates(self) -> np.ndarray:
        return 1.0 / self.t1

    @property
    def dephasing_rates(self) -> np.ndarray:
        return 1.0 / self.t2 - 0.5 / self.t1


@dataclass(frozen=True)
class PopulationTrace:
    """Site populations plus vacuum population over a time grid (ns)."""

    times: np.ndarray
    site_populations: np.ndarray  # shape (n_times, n_sites)
    vacuum: np.ndarray            # shape (n_times,)

    @property
    def n_sites(self) -> int:
        return self.site_populations.shape[1]

    def total(self) -> np.ndarray:
        return self.site_populations.sum(axis=1) + self.vacuum


def propagator(h, t: float) -> np.ndarray:
    """Unitary exp(-i H t) via eigendecomposition of the Hermitian H."""
    m = _as_matrix(h)
    energies, vectors = np.linalg.eigh(m)
    phases = np.exp(-1j * energies * t)
    return (vectors * phases) @ vectors.conj().T


def _split_state(psi: np.ndarray, n_sites: int) -> tuple[np.ndarray, complex]:
    psi = np.asarray(psi, dtype=complex).ravel()
    if len(psi) == n_sites:
        return psi, 0.0 + 0.0j
    if len(psi) == n_sites + 1:
        return psi[:n_sites], psi[n_sites]
    raise ValueError(f"state length {len(psi)} incompatible with {n_sites} sites")


def evolve_unitary(h, psi0, times) -> tuple[PopulationTrace, np.ndarray]:
    """Evolve a pure state on an exact time grid.

    Returns the population trace and the final state vector (site amplitudes
    followed by the vacuum amplitude when one was supplied).
    """
    m = _as_matrix(h)
    n = m.shape[0]
    grid = np.atleast_1d(np.asarray(times, dtype=float))
    if grid.size == 0:
        raise ValueError("time grid must not be empty")
    sites, vac_amp = _split_state(psi0, n)
    norm = np.sqrt(np.sum(np.abs(sites) ** 2) + abs(vac_amp) ** 2)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError("initial state must be normalised")

    energies, vectors = np.linalg.eigh(m)
    coeffs = vectors.conj().T @ sites
    phases = np.exp(-1j * np.outer(grid, energies))
    states = (phases * coeffs) @ vectors.T  # (n_times, n)
    populations = np.abs(states) ** 2
    vacuum = np.full(len(grid), abs(vac_amp) ** 2)
    trace = PopulationTrace(grid, populations, vacuum)

    final_sites = states[-1]
    if abs(vac_amp) > 0:
        final = np.concatenate([final_sites, [vac_amp]])
    else:
        final = final_sites
    return trace, final


def state_to_density(psi, n_sites: int) -> np.ndarray:
    """Embed a pure state into the (n_sites + 1)-dim density matrix."""
    sites, vac = _split_state(psi, n_sites)
    full = np.concatenate([sites, [vac]])
    return np.outer(full, full.conj())


def _validate_density(rho: np.ndarray, dim: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix must be {dim}x{dim}")
    if np.abs(rho - rho.conj().T).max() > 1e-10:
        raise ValueError("density matrix must be Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise ValueError("density matrix must have unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-9:
        raise ValueError("density matrix must be positive semidefinite")
    return rho


def evolve_lindblad(
    h,
    noise: NoiseModel,
    rho0,
    times,
    rtol: float = 1e-10,
    atol: float = 1e-10,
) -> tuple[PopulationTrace, np.ndarray]:
    """Integrate the master equation with loss and dephasing channels.

    The state space is the single-excitation manifold plus the vacuum level
    (index n_sites).  Loss operators are sqrt(gamma1_i) |vac><q_i| and
    dephasing operators sqrt(gamma_phi_i) |q_i><q_i|.  Returns the
    population trace and the stack of density matrices on the grid.
    """
    m = _as_matrix(h)
    n = m.shape[0]
    if noise.n_sites != n:
        raise ValueError("noise model size does not match the Hamiltonian")
    grid = np.atleast_1d(np.asarray(times, dtype=float))
    if grid.size == 0:
        raise ValueError("time grid must not be empty")
    dim = n + 1
    rho = _validate_density(rho0, dim)

    h_full = np.zeros((dim, dim), dtype=complex)
    h_full[:n, :n] = m

    gamma1 = noise.loss_rates
    gphi = noise.dephasing_rates
    if np.any(gamma1 < 0) or np.any(gphi < -1e-15):
        raise ValueError("negative noise rates")

    # Closed-form dissipator of these channels: dephasing damps coherences
    # at (gphi_i + gphi_j)/2 and leaves populations alone, loss damps every
    # element touching site i at gamma1_i/2 and feeds the vacuum population.
    decay = np.concatenate([gamma1, [0.0]])
    gp = np.concatenate([gphi, [0.0]])
    damp = 0.5 * (gp[:, None] + gp[None, :])
    np.fill_diagonal(damp, 0.0)
    damp += 0.5 * (decay[:, None] + decay[None, :])

    def rhs(_t, vec):
        r = vec.reshape(dim, dim)
        drho = -1j * (h_full @ r - r @ h_full)
        drho -= damp * r
        drho[n, n] += np.sum(gamma1 * np.real(np.diag(r)[:n]))
        return drho.ravel()

    t0, t1 = float(grid[0]), float(grid[-1])
    if t1 == t0:
        rhos = np.repeat(rho[None, :, :], len(grid), axis=0)
    else:
        sol = solve_ivp(
            rhs,
            (t0, t1),
            rho.ravel(),
            t_eval=grid,
            method="DOP853",
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise RuntimeError(f"Lindblad integration failed: {sol.message}")
        rhos = sol.y.T.reshape(len(grid), dim, dim)
        # restore exact Hermiticity lost to roundoff
        rhos = 0.5 * (rhos + rhos.conj().transpose(0, 2, 1))

    populations = np.real(np.diagonal(rhos, axis1=1, axis2=2))
    trace = PopulationTrace(grid, populations[:, :n], populations[:, n])
    return trace, rhos


def three_qubit_hamiltonian(j: float, delta: float, family: str) -> np.ndarray:
    """Three-site chain with uniform |J| and the outer-detuning profile.

    ``family`` selects the sign pattern of the outer on-site energies:
    "antisymmetric" gives (-delta, 0, +delta) and "symmetric"
    (+delta, 0, +delta).
    """
    if family == "antisymmetric":
        diag = np.array([-delta, 0.0, delta])
    elif family == "symmetric":
        diag = np.array([delta, 0.0, delta])
    else:
        raise ValueError("family must be 'antisymmetric' or 'symmetric'")
    h = np.diag(diag).astype(complex)
    h[0, 1] = h[1, 0] = h[1, 2] = h[2, 1] = j
    return h


def three_qubit_half_period_detunings(j: float, family: str) -> tuple[float, ...]:
    """Detuning magnitudes that produce an exact W3 at half a period."""
    if j == 0:
        raise ValueError("coupling must be nonzero")
    aj = abs(j)
    if family == "antisymmetric":
        return ((1 + np.sqrt(3)) * aj, (np.sqrt(3) - 1) * aj)
    if family == "symmetric":
        return (2 * aj,)
    raise ValueError("family must be 'antisymmetric' or 'symmetric'")


def three_qubit_period(j: float, delta: float, family: str) -> float:
    """Refocusing period 2*pi / sqrt(delta^2 + 2 k |J|^2), k = 1 or 4."""
    k = {"antisymmetric": 1, "symmetric": 4}.get(family)
    if k is None:
        raise ValueError("family must be 'antisymmetric' or 'symmetric'")
    return 2 * np.pi / np.sqrt(delta**2 + 2 * k * j**2)


def resonant_w3_time(j: float) -> float:
    """Earliest uniform-delocalisation time of the resonant three-chain."""
    if j == 0:
        raise ValueError("coupling must be nonzero")
    return float(np.arctan(np.sqrt(2)) / (abs(j) * np.sqrt(2)))


def phase_align(psi) -> tuple[np.ndarray, np.ndarray]:
    """Rotate each amplitude onto the positive real axis.

    Returns the aligned state and the applied phases (virtual-Z angles);
    after alignment the fidelity with the uniform W state equals
    (sum_i |a_i|)^2 / N.
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    if not np.any(np.abs(psi) > 0):
        raise ValueError("cannot align the zero state")
    phases = np.where(np.abs(psi) > 0, -np.angle(psi), 0.0)
    return np.abs(psi).astype(complex), phases
