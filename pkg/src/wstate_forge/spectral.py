"""Tridiagonal Hamiltonian reconstruction from spectra and spectral weights.

A nearest-neighbour hopping chain restricted to the single-excitation
manifold is a real symmetric tridiagonal (Jacobi) matrix.  Such a matrix is
uniquely determined by its eigenvalues together with the squared first
components of its eigenvectors (the spectral weights).  This module performs
that reconstruction and provides the parametrised spectrum/weight families
used to design chains that evolve a localised excitation into a W state.

All energies are angular frequencies in rad/ns and times are in ns.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "ReconstructionError",
    "TridiagonalHamiltonian",
    "reconstruct_tridiagonal",
    "spectral_data",
    "mirror_symmetric_weights",
    "symmetric_spectrum",
    "resonant_spectrum",
    "resonant_gamma_count",
    "antisymmetric_spectral_data",
    "krawtchouk_hamiltonian",
]

# Relative eigenvalue gaps below this level make the weight formulas and the
# recurrence numerically meaningless; such inputs are rejected, not perturbed.
DEGENERACY_TOL = 1e-9
WEIGHT_NORM_TOL = 1e-12


class ReconstructionError(ValueError):
    """Raised when the reconstruction recurrence loses positivity.

    ``index`` is the coupling index (1-based) at which the recurrence norm
    collapsed, signalling numerically degenerate input data.
    """

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class TridiagonalHamiltonian:
    """On-site energies and nearest-neighbour couplings of a 1D chain.

    ``onsite`` has length N and ``couplings`` length N - 1, both in rad/ns.
    """

    onsite: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        onsite = np.atleast_1d(np.asarray(self.onsite, dtype=float))
        couplings = np.atleast_1d(np.asarray(self.couplings, dtype=float)) \
            if np.size(self.couplings) else np.zeros(0)
        object.__setattr__(self, "onsite", onsite)
        object.__setattr__(self, "couplings", couplings)
        if onsite.ndim != 1 or couplings.ndim != 1:
            raise ValueError("onsite and couplings must be 1D")
        if len(couplings) != len(onsite) - 1:
            raise ValueError(
                f"couplings length {len(couplings)} != onsite length {len(onsite)} - 1"
            )

    @property
    def n_sites(self) -> int:
        return len(self.onsite)

    @property
    def j_max(self) -> float:
        return float(np.max(np.abs(self.couplings))) if len(self.couplings) else 0.0

    def matrix(self) -> np.ndarray:
        """Dense real-symmetric matrix over the localised basis."""
        h = np.diag(self.onsite)
        n = self.n_sites
        if n > 1:
            idx = np.arange(n - 1)
            h[idx, idx + 1] = self.couplings
            h[idx + 1, idx] = self.couplings
        return h

    def is_connected(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.couplings) > tol))


def _validate_spectrum(eigenvalues: np.ndarray) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
    if lam.ndim != 1 or len(lam) < 1:
        raise ValueError("spectrum must contain at least one eigenvalue")
    if len(lam) > 1:
        gaps = np.diff(lam)
        width = lam[-1] - lam[0]
        if np.any(gaps <= 0):
            raise ValueError("eigenvalues must be strictly increasing")
        if np.any(gaps < DEGENERACY_TOL * width):
            bad = int(np.argmin(gaps))
            raise ValueError(
                f"eigenvalue gap at index {bad} is below {DEGENERACY_TOL:g} "
                "of the spectral width; input rejected as degenerate"
            )
    return lam


def _validate_weights(weights: np.ndarray, n: int | None = None) -> np.ndarray:
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if n is not None and len(w) != n:
        raise ValueError(f"expected {n} weights, got {len(w)}")
    if np.any(w <= 0):
        raise ValueError("all spectral weights must be strictly positive")
    if abs(w.sum() - 1.0) > max(WEIGHT_NORM_TOL, 4 * len(w) * np.finfo(float).eps):
        raise ValueError(f"weights must sum to 1 (got {w.sum()!r})")
    return w


def reconstruct_tridiagonal(eigenvalues, weights) -> TridiagonalHamiltonian:
    """Rebuild the Jacobi matrix with the prescribed spectral data.

    Runs the three-term recurrence of the orthonormal polynomials of the
    discrete measure sum_m w_m delta(x - lambda_m), with full
    reorthogonalisation at every step for numerical stability.  Couplings
    are returned with positive sign; signs are a gauge choice.

    Parameters
    ----------
    eigenvalues : array_like
        Strictly increasing target spectrum (rad/ns).
    weights : array_like
        Strictly positive spectral weights summing to one.
    """
    lam = _validate_spectrum(eigenvalues)
    w = _validate_weights(weights, len(lam))
    n = len(lam)

    basis = np.zeros((n, n))
    basis[:, 0] = np.sqrt(w)
    onsite = np.zeros(n)
    couplings = np.zeros(max(n - 1, 0))
    width = max(lam[-1] - lam[0], abs(lam).max(), 1.0)

    for k in range(n):
        v = lam * basis[:, k]
        onsite[k] = basis[:, k] @ v
        if k == n - 1:
            break
        v -= onsite[k] * basis[:, k]
        if k > 0:
            v -= couplings[k - 1] * basis[:, k - 1]
        # Two rounds of classical reorthogonalisation keep the basis
        # orthonormal to machine precision even for clustered spectra.
        for _ in range(2):
            v -= basis[:, : k + 1] @ (basis[:, : k + 1].T @ v)
        norm = np.linalg.norm(v)
        if norm <= 1e-12 * width:
            raise ReconstructionError(
                f"recurrence norm collapsed at coupling {k + 1} "
                f"(norm {norm:.3e}); spectral data is numerically degenerate",
                index=k + 1,
            )
        couplings[k] = norm
        basis[:, k + 1] = v / norm

    return TridiagonalHamiltonian(onsite, couplings)


def spectral_data(ham: TridiagonalHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (increasing) and first-site spectral weights of a chain."""
    if ham.n_sites > 1 and not ham.is_connected():
        raise ValueError("chain has a vanishing coupling; spectral data undefined")
    if ham.n_sites == 1:
        return ham.onsite.copy(), np.ones(1)
    # eigh_tridiagonal is sign-blind to the couplings for the first-row
    # weights, consistent with the positive-coupling gauge.
    lam, vecs = eigh_tridiagonal(ham.onsite, np.abs(ham.couplings))
    weights = vecs[0, :] ** 2
    return lam, weights


def mirror_symmetric_weights(eigenvalues) -> np.ndarray:
    """Weights forcing a mirror-symmetric chain for the given spectrum.

    For a spectrum of N + 1 increasing values the unique weights are
    proportional to (-1)^(N + m) divided by the derivative of the nodal
    polynomial at lambda_m.
    """
    lam = _validate_spectrum(eigenvalues)
    n = len(lam)
    if n < 2:
        raise ValueError("need at least two eigenvalues")
    # Work on a centred, unit-width copy; the normalised weights are
    # invariant under affine maps of the spectrum.
    scaled = (lam - lam.mean()) / (lam[-1] - lam[0])
    diffs = scaled[:, None] - scaled[None, :]
    np.fill_diagonal(diffs, 1.0)
    derivative = diffs.prod(axis=1)
    signs = (-1.0) ** ((n - 1) + np.arange(n))
    w = signs / derivative
    if np.any(w <= 0):
        raise ValueError("spectrum produced non-positive mirror weights")
    return w / w.sum()


def symmetric_spectrum(gammas, tau: float, m: int) -> np.ndarray:
    """Spectrum of the mirror-symmetric family for an odd chain of m sites.

    Even-indexed eigenvalues sit on a linear grid of spacing pi/tau centred
    at zero; each gap ratio gamma in (0, 1) places one odd-indexed
    eigenvalue inside the grid cell above it.
    """
    if m < 3 or m % 2 == 0:
        raise ValueError("symmetric family requires odd m >= 3")
    if tau <= 0:
        raise ValueError("tau must be positive")
    g = np.atleast_1d(np.asarray(gammas, dtype=float))
    half = (m - 1) // 2
    if len(g) != half:
        raise ValueError(f"expected {half} gap ratios for m={m}, got {len(g)}")
    if np.any((g <= 0) | (g >= 1)):
        raise ValueError("gap ratios must lie strictly inside (0, 1)")

    lam = np.empty(m)
    grid = (np.pi / tau) * (np.arange(half + 1) - half / 2.0)
    lam[0::2] = grid
    lam[1::2] = g * grid[1:] + (1 - g) * grid[:-1]
    return lam


def resonant_gamma_count(m: int) -> int:
    """Number of free gap ratios of the resonant family for m sites."""
    if m < 3 or m % 2 == 0:
        raise ValueError("resonant family requires odd m >= 3")
    return (m - 1) // 4


def resonant_spectrum(gammas, d: float, tau: float, m: int) -> np.ndarray:
    """Reflection-symmetric spectrum of the resonant (zero-detuning) family.

    The lower half sits on a linear grid scaled by d in (0, 1]; gap ratios
    place the odd-indexed eigenvalues strictly below the centre, and the
    upper half mirrors the lower.  Reconstructing with the mirror-symmetric
    weights yields a chain with vanishing on-site energies.
    """
    if m < 3 or m % 2 == 0:
        raise ValueError("resonant family requires odd m >= 3")
    if tau <= 0:
        raise ValueError("tau must be positive")
    if not 0 < d <= 1:
        raise ValueError("scale d must lie in (0, 1]")
    g = np.atleast_1d(np.asarray(gammas, dtype=float)) if np.size(gammas) else np.zeros(0)
    if len(g) != resonant_gamma_count(m):
        raise ValueError(
            f"expected {resonant_gamma_count(m)} gap ratios for m={m}, got {len(g)}"
        )
    if np.any((g <= 0) | (g >= 1)):
        raise ValueError("gap ratios must lie strictly inside (0, 1)")

    n = m - 1
    lam = np.full(m, np.nan)
    lam[n // 2] = 0.0
    for k in range(n // 4 + 1):
        lam[2 * k] = (d * np.pi / tau) * (k - n / 4.0)
    # Mirror the even grid so every interpolation anchor below the centre
    # is defined before the odd-indexed values are placed.
    for idx in range(m):
        if np.isnan(lam[idx]) and not np.isnan(lam[n - idx]):
            lam[idx] = -lam[n - idx]
    for count, idx in enumerate(range(1, n // 2, 2)):
        lam[idx] = g[count] * lam[idx + 1] + (1 - g[count]) * lam[idx - 1]
    lam[n // 2 + 1:] = -lam[: n // 2][::-1]
    if np.any(np.isnan(lam)):
        raise AssertionError("resonant spectrum construction left gaps")
    return lam


def antisymmetric_spectral_data(p, tau: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Linear spectrum plus product-form weights of the antisymmetric family.

    The spectrum is exactly linear with spacing pi/tau (centred), which makes
    the dynamics 2*tau-periodic for any initial state.  The m - 1 parameters
    p_k in (0, 1) shape the weights; p_k = p for all k gives the binomial
    weights of the Krawtchouk chain.
    """
    if m < 2:
        raise ValueError("antisymmetric family requires m >= 2")
    if tau <= 0:
        raise ValueError("tau must be positive")
    pk = np.atleast_1d(np.asarray(p, dtype=float))
    n = m - 1
    if len(pk) != n:
        raise ValueError(f"expected {n} weight parameters for m={m}, got {len(pk)}")
    if np.any((pk <= 0) | (pk >= 1)):
        raise ValueError("weight parameters must lie strictly inside (0, 1)")

    lam = (np.pi / tau) * (np.arange(m) - n / 2.0)
    # log-domain product keeps long chains with extreme ratios finite
    log_ratio = np.concatenate(([0.0], np.cumsum(np.log(pk) - np.log1p(-pk))))
    log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, m)))))
    log_w = log_ratio - log_fact - log_fact[::-1]
    log_w -= log_w.max()
    w = np.exp(log_w)
    return lam, w / w.sum()


def krawtchouk_hamiltonian(p_tilde: float, m: int, tau: float) -> TridiagonalHamiltonian:
    """Closed-form chain with binomial weights and a linear spectrum.

    Couplings are (pi/tau) sqrt(p(1-p) k (m-k)) and on-site energies
    (pi/tau)(1-2p)(k - (m+1)/2) for k = 1..m.  The values of p and 1-p give
    the same chain up to reflection about its centre.
    """
    if not 0 < p_tilde < 1:
        raise ValueError("p_tilde must lie strictly inside (0, 1)")
    if m < 2:
        raise ValueError("m must be at least 2")
    if tau <= 0:
        raise ValueError("tau must be positive")
    scale = np.pi / tau
    sites = np.arange(1, m + 1, dtype=float)
    onsite = scale * (1 - 2 * p_tilde) * (sites - (m + 1) / 2.0)
    bonds = np.arange(1, m, dtype=float)
    couplings = scale * np.sqrt(p_tilde * (1 - p_tilde) * bonds * (m - bonds))
    return TridiagonalHamiltonian(onsite, couplings)
