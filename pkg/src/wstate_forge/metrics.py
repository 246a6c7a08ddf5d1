"""Fidelities, entanglement witnesses, robustness and circuit-depth bounds.

States live on the single-excitation manifold plus an optional vacuum
level; witness operators are evaluated on the full multi-qubit Hilbert
space, where biseparable bounds are computed by alternating top-eigenvector
iteration over all bipartitions with multistart.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .dynamics import phase_align, propagator
from .spectral import TridiagonalHamiltonian

__all__ = [
    "w_state",
    "w_fidelity",
    "delocalization",
    "WitnessResult",
    "BoundResult",
    "witness_fidelity",
    "witness_tailored",
    "biseparable_bound",
    "product_w_overlaps",
    "RobustnessReport",
    "robustness_mc",
    "ScalingModel",
    "circuit_lower_bound",
]


def w_state(n: int) -> np.ndarray:
    """Uniform single-excitation superposition over n sites."""
    return np.full(n, 1.0 / np.sqrt(n), dtype=complex)


def _site_block(state_or_rho, n: int):
    arr = np.asarray(state_or_rho, dtype=complex)
    if arr.ndim == 1:
        if len(arr) not in (n, n + 1):
            raise ValueError(f"state length {len(arr)} incompatible with {n} sites")
        return arr[:n], True
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1] and arr.shape[0] in (n, n + 1):
        return arr[:n, :n], False
    raise ValueError(f"shape {arr.shape} incompatible with {n} sites")


def w_fidelity(state_or_rho, n: int) -> float:
    """Overlap with the n-site W state; vacuum components contribute zero."""
    block, pure = _site_block(state_or_rho, n)
    if pure:
        return float(abs(block.sum()) ** 2 / n)
    return float(np.real(block.sum()) / n)


def delocalization(populations) -> float:
    """Inverse participation ratio of the site populations, in [1/N, 1].

    Populations are renormalised over the sites, so the measure reports
    uniformity of the excitation distribution irrespective of loss.
    """
    p = np.asarray(populations, dtype=float)
    if np.any(p < -1e-12):
        raise ValueError("populations must be nonnegative")
    total = p.sum()
    if total <= 0:
        raise ValueError("populations are all zero")
    p = p / total
    return float(1.0 / (len(p) * np.sum(p**2)))


@dataclass(frozen=True)
class WitnessResult:
    """Evaluation of an entanglement witness on a state.

    A negative expectation certifies genuine multipartite entanglement.
    """

    tag: str
    beta: float
    gamma: float
    expectation: float
    normalized_expectation: float

    @property
    def certifies(self) -> bool:
        return self.expectation < 0


@dataclass(frozen=True)
class BoundResult:
    """Biseparable maximum of a Hermitian operator."""

    value: float
    bipartition: tuple
    state_s: np.ndarray
    state_e: np.ndarray
    converged: bool
    agreement: int


def witness_fidelity(rho, n: int) -> WitnessResult:
    """Fidelity witness: (N-1)/N * I - |W><W|.

    The biseparable ceiling of the W overlap is (N-1)/N, so a fidelity
    above it gives a negative expectation.
    """
    fid = w_fidelity(rho, n)
    gamma = (n - 1) / n
    expectation = gamma - fid
    norm = gamma - 1.0 / 2**n
    return WitnessResult(
        tag="fidelity",
        beta=0.0,
        gamma=gamma,
        expectation=float(expectation),
        normalized_expectation=float(expectation / norm),
    )


def _alternating_maximum(a4: np.ndarray, rng, restarts: int, iters: int = 300,
                         tol: float = 1e-13) -> tuple[float, np.ndarray, np.ndarray, int]:
    """max <a,b|A|a,b> over unit product vectors by alternating eigensteps."""
    ds, de = a4.shape[0], a4.shape[1]
    best_val, best_a, best_b = -np.inf, None, None
    values = []
    for r in range(restarts):
        if r == 0:
            b = np.ones(de, dtype=complex)
        else:
            b = rng.normal(size=de) + 1j * rng.normal(size=de)
        b /= np.linalg.norm(b)
        value = -np.inf
        a = None
        for _ in range(iters):
            m_s = np.einsum("ibjd,b,d->ij", a4, b.conj(), b)
            evals, evecs = np.linalg.eigh(0.5 * (m_s + m_s.conj().T))
            a = evecs[:, -1]
            m_e = np.einsum("ibjd,i,j->bd", a4, a.conj(), a)
            evals, evecs = np.linalg.eigh(0.5 * (m_e + m_e.conj().T))
            b = evecs[:, -1]
            new = float(evals[-1])
            if new - value < tol:
                value = new
                break
            value = new
        values.append(value)
        if value > best_val:
            best_val, best_a, best_b = value, a, b
    agreement = int(sum(1 for v in values if v >= best_val - 1e-6))
    return best_val, best_a, best_b, agreement


def _permutation_invariant(tensor: np.ndarray, n: int) -> bool:
    for k in range(n - 1):
        perm = list(range(2 * n))
        perm[k], perm[k + 1] = perm[k + 1], perm[k]
        perm[n + k], perm[n + k + 1] = perm[n + k + 1], perm[n + k]
        if not np.allclose(tensor, tensor.transpose(perm), atol=1e-12):
            return False
    return True


def biseparable_bound(a, n_qubits: int, restarts: int = 32, seed: int = 0) -> BoundResult:
    """Largest expectation of A over pure states product across a bipartition.

    Every bipartition (S | complement) is searched by alternating
    largest-eigenvector iteration with multistart; permutation-invariant
    operators are detected and searched once per bipartition size.  The
    result is a lower bound on the true maximum that is exact in practice
    at desk scale; ``converged`` is cleared when no second restart
    reproduced the best value within 1e-6.
    """
    if n_qubits > 8:
        raise ValueError("biseparable bound supported up to 8 qubits")
    dim = 2**n_qubits
    a = np.asarray(a, dtype=complex)
    if a.shape != (dim, dim):
        raise ValueError(f"operator must be {dim}x{dim}")
    tensor = a.reshape((2,) * (2 * n_qubits))
    symmetric = _permutation_invariant(tensor, n_qubits)

    if symmetric:
        partitions = [tuple(range(k)) for k in range(1, n_qubits // 2 + 1)]
    else:
        partitions = []
        for k in range(1, n_qubits // 2 + 1):
            for subset in combinations(range(n_qubits), k):
                if 2 * k == n_qubits and 0 not in subset:
                    continue
                partitions.append(subset)

    rng = np.random.default_rng(seed)
    best = None
    for subset in partitions:
        rest = tuple(q for q in range(n_qubits) if q not in subset)
        perm = (
            list(subset)
            + list(rest)
            + [n_qubits + q for q in subset]
            + [n_qubits + q for q in rest]
        )
        ds, de = 2 ** len(subset), 2 ** len(rest)
        a4 = tensor.transpose(perm).reshape(ds, de, ds, de)
        value, va, vb, agree = _alternating_maximum(a4, rng, restarts)
        if best is None or value > best.value:
            best = BoundResult(
                value=value,
                bipartition=subset,
                state_s=va,
                state_e=vb,
                converged=(agree >= 2 or restarts == 1),
                agreement=agree,
            )
    return best


def _reduced_witness_bound(beta: float, n: int, restarts: int, seed: int) -> float:
    """Biseparable maximum of |W><W| - beta * sum_m T_m, reduced basis.

    The reduced basis spans {vacuum, single site} on each side of a size-k
    bipartition; every operator in the W witnesses is supported there, so
    the search runs in (k+1)(n-k+1) dimensions per bipartition size.
    """
    rng = np.random.default_rng(seed)
    best = -np.inf
    for k in range(1, n // 2 + 1):
        ds, de = k + 1, n - k + 1
        w = np.zeros(ds * de)
        for i in range(1, ds):
            w[i * de] = 1.0
        for j in range(1, de):
            w[j] = 1.0
        w /= np.sqrt(n)
        ops = [np.outer(w, w)]
        coeffs = [1.0]
        for m in range(n):
            v = np.zeros(ds * de)
            for i in range(1, ds):
                if i - 1 == m:
                    continue
                v[i * de] = 1.0
            for j in range(1, de):
                if k + j - 1 == m:
                    continue
                v[j] = 1.0
            v /= np.sqrt(n - 1)
            ops.append(np.outer(v, v))
            coeffs.append(-beta)
        a_mat = sum(c * o for c, o in zip(coeffs, ops))
        a4 = a_mat.reshape(ds, de, ds, de)
        value, _, _, _ = _alternating_maximum(a4.astype(complex), rng, restarts)
        best = max(best, value)
    # product states fully outside the support reach exactly zero
    return max(best, 0.0)


def _tailored_terms(rho, n: int) -> tuple[float, float]:
    block, pure = _site_block(rho, n)
    if pure:
        block = np.outer(block, block.conj())
    fid = float(np.real(block.sum()) / n)
    t_sum = 0.0
    for m in range(n):
        idx = [i for i in range(n) if i != m]
        t_sum += float(np.real(block[np.ix_(idx, idx)].sum()) / (n - 1))
    return fid, t_sum


def witness_tailored(
    rho,
    n: int,
    restarts: int = 16,
    seed: int = 0,
    beta_max: float = 2.0,
    beta_steps: int = 25,
) -> WitnessResult:
    """Tailored witness with an adjustable penalty on one-qubit-dark states.

    The operator gamma(beta) I - |W><W| + beta sum_m |0_m><0_m| (x)
    |W_{n-1}><W_{n-1}| stays nonnegative on biseparable states by setting
    gamma(beta) to the biseparable maximum of the subtracted part.  beta is
    chosen to minimise the expectation on rho (the map is convex in beta);
    the normalised value references the maximally mixed state.
    """
    if n < 3:
        raise ValueError("tailored witness needs at least three qubits")
    fid, t_sum = _tailored_terms(rho, n)
    cache: dict[float, float] = {}

    def gamma_of(beta: float) -> float:
        if beta not in cache:
            cache[beta] = _reduced_witness_bound(beta, n, restarts, seed)
        return cache[beta]

    def expectation(beta: float) -> float:
        return gamma_of(beta) - fid + beta * t_sum

    betas = np.linspace(0.0, beta_max, beta_steps)
    values = [expectation(b) for b in betas]
    k = int(np.argmin(values))
    lo = betas[max(k - 1, 0)]
    hi = betas[min(k + 1, len(betas) - 1)]
    # golden-section refinement inside the bracketing cell
    invphi = (np.sqrt(5) - 1) / 2
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = expectation(x1), expectation(x2)
    for _ in range(40):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = expectation(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = expectation(x2)
    beta = float(x1 if f1 <= f2 else x2)
    gamma = gamma_of(beta)
    raw = expectation(beta)
    norm = gamma - (1.0 - beta * n) / 2**n
    if norm <= 0:
        raise RuntimeError(
            f"normalisation reference is nonpositive ({norm:.3e}); "
            "witness cannot be scaled to the stated convention"
        )
    return WitnessResult(
        tag="tailored",
        beta=beta,
        gamma=float(gamma),
        expectation=float(raw),
        normalized_expectation=float(raw / norm),
    )


def product_w_overlaps(a: np.ndarray, b: np.ndarray, subset, n: int):
    """Overlaps of a bipartite product state with |W_n> and each |w^(m)>.

    ``a`` lives on the qubits in ``subset`` (binary little-end ordering by
    position within the subset), ``b`` on the remaining qubits.  Only the
    vacuum and single-excitation components enter.
    """
    subset = tuple(subset)
    rest = tuple(q for q in range(n) if q not in subset)
    k = len(subset)
    if len(a) != 2**k or len(b) != 2 ** (n - k):
        raise ValueError("state dimensions do not match the bipartition")
    a0 = a[0]
    b0 = b[0]
    a_exc = np.array([a[1 << pos] for pos in range(k)])
    b_exc = np.array([b[1 << pos] for pos in range(n - k)])
    site_amp = np.zeros(n, dtype=complex)
    for pos, q in enumerate(subset):
        site_amp[q] = a_exc[pos] * b0
    for pos, q in enumerate(rest):
        site_amp[q] = a0 * b_exc[pos]
    w_overlap = site_amp.sum() / np.sqrt(n)
    w_m = np.array(
        [(site_amp.sum() - site_amp[m]) / np.sqrt(n - 1) for m in range(n)]
    )
    return w_overlap, w_m


@dataclass(frozen=True)
class RobustnessReport:
    """Monte-Carlo response of a design to static parameter noise."""

    sigma_rel: float
    j_max: float
    samples: int
    seed: int
    delocalizations: np.ndarray
    mean_delocalization: float
    std_delocalization: float
    fidelity_shot: float      # sample-averaged rho, fixed design phases
    fidelity_drift: float     # per-sample phase alignment before averaging

    def standard_error(self) -> float:
        return float(self.std_delocalization / np.sqrt(self.samples))


def robustness_mc(
    ham: TridiagonalHamiltonian,
    tau: float,
    sigma_rel: float,
    samples: int,
    seed: int,
    init: int | None = None,
) -> RobustnessReport:
    """Perturb every on-site energy and coupling with Gaussian noise.

    Each sample draws independent N(0, (sigma_rel * J_max)^2) offsets on
    all parameters, evolves the initial excitation to tau, and records the
    delocalization.  Per-sample streams are independent jumps of a
    counter-based generator keyed by the master seed, so aggregation is
    order-independent and bit-reproducible.
    """
    if sigma_rel < 0:
        raise ValueError("noise level must be nonnegative")
    if samples < 1:
        raise ValueError("need at least one sample")
    n = ham.n_sites
    init = n // 2 if init is None else init
    sigma = sigma_rel * ham.j_max

    reference = propagator(ham.matrix(), tau)[:, init]
    _, design_phases = phase_align(reference)

    states = np.zeros((samples, n), dtype=complex)
    delocs = np.zeros(samples)
    for s in range(samples):
        rng = np.random.Generator(np.random.Philox(key=seed).jumped(s + 1))
        onsite = ham.onsite + rng.normal(0.0, sigma, n) if sigma > 0 else ham.onsite
        coup = ham.couplings + rng.normal(0.0, sigma, n - 1) if sigma > 0 else ham.couplings
        noisy = TridiagonalHamiltonian(onsite, coup)
        psi = propagator(noisy.matrix(), tau)[:, init]
        states[s] = psi
        delocs[s] = delocalization(np.abs(psi) ** 2)

    corrected = states * np.exp(1j * design_phases)[None, :]
    rho_shot = np.einsum("si,sj->ij", corrected, corrected.conj()) / samples
    aligned = np.abs(states).astype(complex)
    rho_drift = np.einsum("si,sj->ij", aligned, aligned.conj()) / samples
    return RobustnessReport(
        sigma_rel=float(sigma_rel),
        j_max=float(ham.j_max),
        samples=samples,
        seed=seed,
        delocalizations=delocs,
        mean_delocalization=float(delocs.mean()),
        std_delocalization=float(delocs.std(ddof=1)) if samples > 1 else 0.0,
        fidelity_shot=w_fidelity(rho_shot, n),
        fidelity_drift=w_fidelity(rho_drift, n),
    )


@dataclass(frozen=True)
class ScalingModel:
    """Circuit-depth lower bound and gate-time model for one geometry."""

    geometry: str
    size: int
    n_qubits: int
    j_max: float
    theta_max: float
    d1_max: int
    dinf_max: int
    t_min: int
    layer_time: float
    circuit_time: float


def circuit_lower_bound(geometry: str, size: int, j_max: float,
                        theta_max: float = np.pi / 2) -> ScalingModel:
    """Minimal two-qubit-gate layer count for W generation, centred start.

    Chains need ceil(N/2) layers to push the excitation to both ends; on an
    L x L grid the bound is max(ceil(log2 N), Manhattan radius 2*floor(L/2)).
    Wall-clock per layer is theta_max / (2 J_max) for the partial-transfer
    gate, with full transfer theta = pi taking pi / (2 J).
    """
    if j_max <= 0:
        raise ValueError("j_max must be positive")
    if geometry == "chain":
        n = size
        d1 = size // 2
        dinf = size // 2
        t_min = int(np.ceil(size / 2))
    elif geometry == "grid":
        n = size * size
        d1 = 2 * (size // 2)
        dinf = size // 2
        t_min = int(max(np.ceil(np.log2(n)), d1))
    else:
        raise ValueError("geometry must be 'chain' or 'grid'")
    layer_time = theta_max / (2 * j_max)
    return ScalingModel(
        geometry=geometry,
        size=size,
        n_qubits=n,
        j_max=float(j_max),
        theta_max=float(theta_max),
        d1_max=int(d1),
        dinf_max=int(dinf),
        t_min=t_min,
        layer_time=float(layer_time),
        circuit_time=float(t_min * layer_time),
    )
