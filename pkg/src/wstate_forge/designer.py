"""End-to-end synthesis of W-state generating Hamiltonians.

The search space is the family of chains with a linear spectrum and
product-form spectral weights, whose parameters fix the Hamiltonian through
the tridiagonal reconstruction.  Designs are found by scanning the
one-parameter binomial-weight subfamily for coarse optima and refining with
a box-constrained least-squares iteration on the amplitude mismatch at the
synthesis time.  Among all converged solutions the one with the smallest
dimensionless cost J_max * tau is selected.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .dynamics import propagator
from .lattice import LatticeGraph, graph_hamiltonian, heavy_hex_graph, layer_reduce
from .spectral import (
    TridiagonalHamiltonian,
    antisymmetric_spectral_data,
    mirror_symmetric_weights,
    reconstruct_tridiagonal,
    resonant_gamma_count,
    resonant_spectrum,
    symmetric_spectrum,
)

__all__ = [
    "DesignProblem",
    "SolutionRecord",
    "GridSolution",
    "infidelity_objective",
    "objective_gradient",
    "krawtchouk_scan",
    "symmetry_reduce",
    "symmetry_expand",
    "refine_exact",
    "enumerate_solutions",
    "design_chain",
    "design_grid",
    "design_heavy_hex",
]

CONVERGENCE_TOL = 1e-9
BOX_MARGIN = 1e-9
DEDUP_TOL = 1e-6


def _max_workers() -> int:
    try:
        n = int(os.environ.get("WSTATE_FORGE_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


@dataclass(frozen=True)
class DesignProblem:
    """A chain synthesis task.

    ``target`` holds the desired site populations at the synthesis time;
    None means the uniform W state.  ``reduce_symmetry`` restricts odd
    centred searches to mirror-symmetric weight parameters.
    """

    size: int
    tau: float
    init: int | None = None
    family: str = "antisymmetric"
    target: tuple | None = None
    reduce_symmetry: bool | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("chain size must be positive")
        if self.tau <= 0:
            raise ValueError("synthesis time must be positive")
        init = self.size // 2 if self.init is None else self.init
        if not 0 <= init < self.size:
            raise ValueError("initial site index out of range")
        object.__setattr__(self, "init", init)
        if self.target is not None:
            t = np.asarray(self.target, dtype=float)
            if t.shape != (self.size,) or np.any(t <= 0):
                raise ValueError("target populations must be positive, one per site")
            object.__setattr__(self, "target", tuple(t / t.sum()))
        reduce = self.reduce_symmetry
        if reduce is None:
            reduce = (
                self.family == "antisymmetric"
                and self.size % 2 == 1
                and self.init == self.size // 2
                and self._target_symmetric()
            )
        elif reduce and (self.size % 2 == 0 or self.init != self.size // 2):
            raise ValueError("symmetry reduction needs an odd, centre-initialised chain")
        object.__setattr__(self, "reduce_symmetry", reduce)

    def _target_symmetric(self) -> bool:
        if self.target is None:
            return True
        t = np.asarray(self.target)
        return bool(np.allclose(t, t[::-1], atol=1e-14))

    @property
    def target_amplitudes(self) -> np.ndarray:
        if self.target is None:
            return np.full(self.size, 1.0 / np.sqrt(self.size))
        return np.sqrt(np.asarray(self.target))

    @property
    def n_free(self) -> int:
        if self.family == "antisymmetric":
            full = self.size - 1
            return (self.size - 1) // 2 if self.reduce_symmetry else full
        if self.family == "symmetric":
            return (self.size - 1) // 2
        if self.family == "resonant":
            return resonant_gamma_count(self.size) + 1
        raise ValueError(f"unknown family {self.family!r}")


@dataclass(frozen=True)
class SolutionRecord:
    """A designed operation and its verification summary."""

    family: str
    params: dict
    hamiltonian: TridiagonalHamiltonian
    tau: float
    init: int
    residual_infidelity: float
    jmax_tau: float
    converged: bool
    target: tuple | None = None

    @property
    def j_max(self) -> float:
        return self.hamiltonian.j_max


@dataclass(frozen=True)
class GridSolution:
    """A 2D design composed from commensurate row and column chains."""

    graph: LatticeGraph
    row_record: SolutionRecord
    col_record: SolutionRecord | None
    tau: float
    init_vertex: int
    residual_infidelity: float
    jmax_tau: float

    @property
    def converged(self) -> bool:
        ok = self.row_record.converged
        if self.col_record is not None:
            ok = ok and self.col_record.converged
        return ok


def symmetry_reduce(p, m: int) -> np.ndarray:
    """Free parameters of a mirror-symmetric weight vector (odd m)."""
    if m % 2 == 0:
        raise ValueError("symmetry reduction is defined for odd chain lengths only")
    p = np.asarray(p, dtype=float)
    if p.shape != (m - 1,):
        raise ValueError(f"expected {m - 1} parameters")
    half = (m - 1) // 2
    if not np.allclose(p, p[::-1], atol=1e-12):
        raise ValueError("parameter vector is not mirror symmetric")
    return p[:half].copy()


def symmetry_expand(reduced, m: int) -> np.ndarray:
    """Inverse of symmetry_reduce: (a, b, c) -> (a, b, c, c, b, a)."""
    if m % 2 == 0:
        raise ValueError("symmetry expansion is defined for odd chain lengths only")
    reduced = np.asarray(reduced, dtype=float)
    if reduced.shape != ((m - 1) // 2,):
        raise ValueError(f"expected {(m - 1) // 2} reduced parameters")
    return np.concatenate([reduced, reduced[::-1]])


def _family_hamiltonian(params: np.ndarray, problem: DesignProblem) -> TridiagonalHamiltonian:
    m, tau = problem.size, problem.tau
    if problem.family == "antisymmetric":
        p = symmetry_expand(params, m) if problem.reduce_symmetry else params
        lam, w = antisymmetric_spectral_data(p, tau, m)
        return reconstruct_tridiagonal(lam, w)
    if problem.family == "symmetric":
        lam = symmetric_spectrum(params, tau, m)
        return reconstruct_tridiagonal(lam, mirror_symmetric_weights(lam))
    if problem.family == "resonant":
        lam = resonant_spectrum(params[:-1], params[-1], tau, m)
        return reconstruct_tridiagonal(lam, mirror_symmetric_weights(lam))
    raise ValueError(f"unknown family {problem.family!r}")


def _residuals(params: np.ndarray, problem: DesignProblem) -> np.ndarray:
    ham = _family_hamiltonian(params, problem)
    psi = propagator(ham.matrix(), problem.tau)[:, problem.init]
    return np.abs(psi) - problem.target_amplitudes


def infidelity_objective(params, problem: DesignProblem) -> float:
    """Phase-aligned W-fidelity deficit of the family member at tau.

    Equals 1 - (sum_d sqrt(t_d) |psi_d(tau)|)^2, which vanishes exactly
    when the evolved amplitudes match the target up to local phases.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (problem.n_free,):
        raise ValueError(f"expected {problem.n_free} parameters, got {params.shape}")
    if np.any((params <= 0) | (params >= 1)):
        raise ValueError("family parameters must lie strictly inside (0, 1)")
    overlap = problem.target_amplitudes @ (_residuals(params, problem) + problem.target_amplitudes)
    return float(1.0 - overlap**2)


def objective_gradient(params, problem: DesignProblem, step: float = 1e-7) -> np.ndarray:
    """Central finite-difference gradient of the scalar objective."""
    params = np.asarray(params, dtype=float)
    grad = np.zeros_like(params)
    for k in range(len(params)):
        up = params.copy()
        dn = params.copy()
        up[k] = min(up[k] + step, 1 - 1e-12)
        dn[k] = max(dn[k] - step, 1e-12)
        grad[k] = (infidelity_objective(up, problem) - infidelity_objective(dn, problem)) / (
            up[k] - dn[k]
        )
    return grad


def krawtchouk_scan(problem: DesignProblem, resolution: float = 1e-3) -> list[tuple[float, float]]:
    """Local optima of the objective along the binomial-weight line.

    Returns (p_tilde, objective) pairs.  When the problem is symmetric
    about the chain centre the p <-> 1-p reflection maps the line onto
    itself and only one representative per mirror pair is kept; for a
    centred seven-site chain this leaves exactly six optima.
    """
    if resolution > 1e-3:
        raise ValueError("scan resolution must be at most 1e-3")
    if problem.family != "antisymmetric":
        raise ValueError("the scan line lives in the antisymmetric family")
    grid = np.arange(resolution, 1.0, resolution)
    base = replace(problem, reduce_symmetry=False)
    values = np.array(
        [infidelity_objective(np.full(problem.size - 1, pt), base) for pt in grid]
    )
    minima = [
        k
        for k in range(1, len(grid) - 1)
        if values[k] <= values[k - 1] and values[k] <= values[k + 1]
    ]
    symmetric = problem.size % 2 == 1 and problem.init == problem.size // 2 \
        and problem._target_symmetric()
    optima = []
    for k in minima:
        pt = float(grid[k])
        if symmetric and any(abs((1 - pt) - q) <= resolution / 2 for q, _ in optima):
            continue
        optima.append((pt, float(values[k])))
    return optima


def _record_from_params(params: np.ndarray, problem: DesignProblem, converged: bool) -> SolutionRecord:
    ham = _family_hamiltonian(params, problem)
    # Verification is recomputed from the realized Hamiltonian, independent
    # of whatever the optimiser last reported.
    psi = propagator(ham.matrix(), problem.tau)[:, problem.init]
    residual = float(1.0 - (problem.target_amplitudes @ np.abs(psi)) ** 2)
    full = symmetry_expand(params, problem.size) if problem.reduce_symmetry else params
    if problem.family == "antisymmetric":
        pdict = {"p": [float(x) for x in full]}
    elif problem.family == "symmetric":
        pdict = {"gamma": [float(x) for x in params]}
    else:
        pdict = {"gamma": [float(x) for x in params[:-1]], "d": float(params[-1])}
    interior = bool(np.all((params > 1e-8) & (params < 1 - 1e-8)))
    return SolutionRecord(
        family=problem.family,
        params=pdict,
        hamiltonian=ham,
        tau=problem.tau,
        init=problem.init,
        residual_infidelity=residual,
        jmax_tau=float(ham.j_max * problem.tau),
        converged=bool(converged and residual < CONVERGENCE_TOL and interior),
        target=problem.target,
    )


def refine_exact(problem: DesignProblem, start, max_iterations: int = 400) -> SolutionRecord:
    """Polish a family-parameter guess to an exact solution.

    Runs a trust-region least-squares iteration on the amplitude residuals
    with the open box (0, 1)^n as bounds and finite-difference Jacobians.
    A record that failed to reach residual infidelity 1e-9, or whose
    parameters ended on the box boundary, comes back flagged unconverged.
    """
    start = np.asarray(start, dtype=float)
    if start.shape != (problem.n_free,):
        raise ValueError(f"expected {problem.n_free} start parameters")
    if np.any((start <= 0) | (start >= 1)):
        raise ValueError("start must lie strictly inside the open box (0, 1)^n")
    if infidelity_objective(start, problem) < 1e-18:
        return _record_from_params(start, problem, converged=True)
    try:
        result = least_squares(
            _residuals,
            start,
            args=(problem,),
            bounds=(BOX_MARGIN, 1 - BOX_MARGIN),
            xtol=3e-16,
            ftol=3e-16,
            gtol=1e-15,
            max_nfev=max_iterations * max(problem.n_free, 1),
        )
        params = result.x
    except Exception:
        return _record_from_params(start, problem, converged=False)
    return _record_from_params(params, problem, converged=True)


def _mirror_params(params: np.ndarray, problem: DesignProblem) -> np.ndarray | None:
    """Parameters of the spatially reflected chain, when it solves the
    same problem (centred initialisation with a symmetric target)."""
    if problem.size % 2 != 1 or problem.init != problem.size // 2:
        return None
    if not problem._target_symmetric():
        return None
    if problem.reduce_symmetry:
        return 1.0 - params
    return (1.0 - params)[::-1]


def _is_duplicate(params: np.ndarray, problem: DesignProblem, known: list[np.ndarray]) -> bool:
    mirror = _mirror_params(params, problem)
    for other in known:
        if np.abs(params - other).max() < DEDUP_TOL:
            return True
        if mirror is not None and np.abs(mirror - other).max() < DEDUP_TOL:
            return True
    return False


def enumerate_solutions(
    problem: DesignProblem,
    seed: int = 0,
    restarts: int = 128,
    max_solutions: int | None = None,
    resolution: float = 1e-3,
) -> list[SolutionRecord]:
    """Collect distinct exact solutions of the design problem.

    Starts from the scan optima of the binomial-weight line, then from
    seeded random interior points, deduplicating up to the chain-reflection
    gauge.  The returned records are sorted by J_max * tau and all satisfy
    the convergence contract; the list is cut at ``max_solutions`` newly
    found solutions when given (the family generally admits more).
    """
    if problem.family != "antisymmetric":
        raise ValueError("solution enumeration runs in the antisymmetric family")
    m = problem.size
    starts: list[np.ndarray] = []
    for p_tilde, _ in krawtchouk_scan(problem, resolution):
        point = np.full(problem.n_free, p_tilde)
        starts.append(point)
    rng = np.random.Generator(np.random.Philox(key=seed))
    random_starts = [rng.uniform(0.01, 0.99, problem.n_free) for _ in range(restarts)]

    workers = _max_workers()
    all_starts = starts + random_starts

    def _run(x0):
        return refine_exact(problem, x0)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run, all_starts))
    else:
        records = [_run(x0) for x0 in all_starts]

    solutions: list[SolutionRecord] = []
    seen: list[np.ndarray] = []
    for rec in records:
        if not rec.converged:
            continue
        full = np.asarray(rec.params["p"], dtype=float)
        vec = symmetry_reduce(full, m) if problem.reduce_symmetry else full
        if _is_duplicate(vec, problem, seen):
            continue
        seen.append(vec)
        solutions.append(rec)
        if max_solutions is not None and len(solutions) >= max_solutions:
            break
    solutions.sort(key=lambda r: (r.jmax_tau, tuple(r.params["p"])))
    return solutions


def _closed_form_three(tau: float, family: str) -> SolutionRecord:
    """Half-period three-qubit solutions with uniform couplings."""
    k = {"antisymmetric": 1, "symmetric": 4}[family]
    choices = []
    if family == "symmetric":
        ratios = [2.0]
    else:
        ratios = [1 + np.sqrt(3), np.sqrt(3) - 1]
    for ratio in ratios:
        # tau = T/2 = pi / sqrt(delta^2 + 2 k J^2) fixes J for this tau
        j = np.pi / (tau * np.sqrt(ratio**2 + 2 * k))
        delta = ratio * j
        sign = -1.0 if family == "antisymmetric" else 1.0
        ham = TridiagonalHamiltonian([sign * delta, 0.0, delta], [j, j])
        psi = propagator(ham.matrix(), tau)[:, 1]
        residual = float(1.0 - np.sum(np.abs(psi)) ** 2 / 3)
        choices.append(
            SolutionRecord(
                family=family,
                params={"delta_over_j": float(ratio), "j_rad_ns": float(j)},
                hamiltonian=ham,
                tau=tau,
                init=1,
                residual_infidelity=residual,
                jmax_tau=float(j * tau),
                converged=residual < CONVERGENCE_TOL,
                target=None,
            )
        )
    return min(choices, key=lambda r: r.jmax_tau)


def _two_site_record(tau: float) -> SolutionRecord:
    j = np.pi / (4 * tau)
    ham = TridiagonalHamiltonian([0.0, 0.0], [j])
    psi = propagator(ham.matrix(), tau)[:, 1]
    residual = float(1.0 - np.sum(np.abs(psi)) ** 2 / 2)
    return SolutionRecord(
        family="iswap",
        params={"j_rad_ns": float(j)},
        hamiltonian=ham,
        tau=tau,
        init=1,
        residual_infidelity=residual,
        jmax_tau=float(j * tau),
        converged=residual < CONVERGENCE_TOL,
        target=None,
    )


def _optimize_family(problem: DesignProblem, seed: int, restarts: int) -> SolutionRecord:
    rng = np.random.Generator(np.random.Philox(key=seed))
    best = None
    for _ in range(restarts):
        x0 = rng.uniform(0.02, 0.98, problem.n_free)
        rec = refine_exact(problem, x0)
        if rec.converged and (best is None or rec.jmax_tau < best.jmax_tau):
            best = rec
    if best is None:
        raise RuntimeError(
            f"no converged {problem.family} solution found for m={problem.size}"
        )
    return best


def design_chain(
    m: int,
    tau: float,
    init: int | None = None,
    family: str = "auto",
    seed: int = 0,
    restarts: int = 128,
    target=None,
) -> SolutionRecord:
    """Design a chain that reaches the target state exactly at tau.

    The default policy keeps to the half-period solution classes: two
    sites use the closed-form partial swap, three sites the closed-form
    outer-detuning solutions (the symmetric choice wins on J_max * tau),
    and longer chains the antisymmetric family with the lowest-cost
    converged solution selected.
    """
    if m < 2:
        raise ValueError("design_chain needs at least two sites")
    if family == "auto":
        if target is not None:
            family = "antisymmetric"
        elif m == 2:
            return _two_site_record(tau)
        elif m == 3:
            return min(
                (_closed_form_three(tau, "symmetric"), _closed_form_three(tau, "antisymmetric")),
                key=lambda r: r.jmax_tau,
            )
        else:
            family = "antisymmetric"
    if m == 2 and family == "iswap":
        return _two_site_record(tau)
    problem = DesignProblem(
        size=m, tau=tau, init=init, family=family,
        target=tuple(target) if target is not None else None,
    )
    if family == "antisymmetric":
        solutions = enumerate_solutions(problem, seed=seed, restarts=restarts)
        if not solutions:
            raise RuntimeError(f"no converged design found for m={m} (flagged)")
        return solutions[0]
    return _optimize_family(problem, seed, restarts)


def compose_grid(
    row_record: SolutionRecord,
    col_record: SolutionRecord | None,
) -> GridSolution:
    """Assemble the Kronecker-sum lattice of two commensurate 1D designs."""
    cols = row_record.hamiltonian.n_sites
    rows = 1 if col_record is None else col_record.hamiltonian.n_sites
    if col_record is not None and abs(col_record.tau - row_record.tau) > 1e-12:
        raise ValueError(
            "row and column designs have incommensurate synthesis times "
            f"({row_record.tau} vs {col_record.tau})"
        )
    tau = row_record.tau
    vertices = tuple(range(rows * cols))
    onsite = {}
    edges = {}
    row_h = row_record.hamiltonian
    col_h = col_record.hamiltonian if col_record is not None else TridiagonalHamiltonian([0.0], [])
    for l in range(rows):
        for mm in range(cols):
            v = l * cols + mm
            onsite[v] = float(row_h.onsite[mm] + col_h.onsite[l])
            if mm + 1 < cols:
                edges[(v, v + 1)] = (float(abs(row_h.couplings[mm])), 0.0)
            if l + 1 < rows:
                edges[(v, v + cols)] = (float(abs(col_h.couplings[l])), 0.0)
    graph = LatticeGraph(vertices, onsite, edges)
    init_vertex = (col_record.init if col_record is not None else 0) * cols + row_record.init
    h = graph_hamiltonian(graph)
    psi = propagator(h, tau)[:, init_vertex]
    residual = float(1.0 - np.sum(np.abs(psi)) ** 2 / (rows * cols))
    jmax = max(
        (amp for amp, _ in edges.values()), default=0.0
    )
    return GridSolution(
        graph=graph,
        row_record=row_record,
        col_record=col_record,
        tau=tau,
        init_vertex=init_vertex,
        residual_infidelity=residual,
        jmax_tau=float(jmax * tau),
    )


def design_grid(rows: int, cols: int, tau: float, seed: int = 0, restarts: int = 128) -> GridSolution:
    """Design an exact W state over a rows x cols lattice at time tau.

    Rows and columns carry independent 1D designs with the same synthesis
    time; loop fluxes all vanish so the two directions interfere
    constructively.
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be at least 1")
    row_record = design_chain(cols, tau, seed=seed, restarts=restarts) if cols > 1 else None
    col_record = design_chain(rows, tau, seed=seed + 1, restarts=restarts) if rows > 1 else None
    if row_record is None and col_record is None:
        raise ValueError("a 1x1 grid has nothing to design")
    if row_record is None:
        # single column: treat it as a 1 x rows chain
        return compose_grid(col_record, None)
    return compose_grid(row_record, col_record)


def design_heavy_hex(tau: float, seed: int = 0, restarts: int = 256):
    """Design the 28-qubit heavy-hex W operation through its layer chain.

    The effective seven-level chain is designed to carry layer populations
    K_d / N at tau starting from the root; physical couplings divide out
    the beam-splitter factors L_d sqrt(K_d / K_{d+1}).  Returns the lattice
    graph, the effective-chain record and the layer partition.
    """
    template = heavy_hex_graph()
    _, partition = layer_reduce(template, 0)
    sizes = np.array(partition.sizes, dtype=float)
    target = sizes / sizes.sum()
    record = design_chain(
        7, tau, init=0, family="antisymmetric", seed=seed, restarts=restarts,
        target=tuple(target),
    )
    factors = np.array(
        [
            partition.inter_degree[d] * np.sqrt(sizes[d] / sizes[d + 1])
            for d in range(6)
        ]
    )
    physical = np.abs(record.hamiltonian.couplings) / factors
    graph = heavy_hex_graph(physical, record.hamiltonian.onsite)
    return graph, record, partition
