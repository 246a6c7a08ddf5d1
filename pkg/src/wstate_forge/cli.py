"""Command-line surface: design, evolve, sweep-phase, reduce, robustness, scaling.

Structured outputs are JSON with a mandatory units block; traces are CSV.
Commands with a --plot flag additionally render a PNG figure next to the
data file.  Exit codes: 0 success, 2 invalid arguments or schema, 3
unconverged design, 4 integration invariant breach, 5 reduction
preconditions unmet.  Errors print one machine-parseable line to stderr:
``error_id=<ID> <message>``.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .designer import design_chain, design_grid
from .dynamics import evolve_lindblad, evolve_unitary, state_to_density
from .lattice import LatticeGraph, LayerError, graph_hamiltonian, layer_reduce
from .metrics import circuit_lower_bound, robustness_mc
from .spectral import TridiagonalHamiltonian

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNCONVERGED = 3
EXIT_INTEGRATION = 4
EXIT_REDUCTION = 5


class CliError(Exception):
    def __init__(self, error_id: str, message: str, code: int):
        super().__init__(message)
        self.error_id = error_id
        self.code = code


def _fail(error_id: str, message: str, code: int = EXIT_INVALID):
    raise CliError(error_id, message, code)


def _time_grid(t_max: float, dt: float) -> np.ndarray:
    if t_max < 0 or dt <= 0:
        _fail("INVALID_ARGS", "t-max must be nonnegative and dt positive")
    n = int(np.floor(t_max / dt + 1e-9))
    times = [k * dt for k in range(n + 1)]
    if times[-1] < t_max - 1e-9 * max(dt, 1.0):
        times.append(t_max)
    return np.asarray(times)


def _load_matrix(path: str):
    """Returns (matrix, site labels, tau_ns or None)."""
    source, tau = fileio.read_lattice_file(path)
    if isinstance(source, TridiagonalHamiltonian):
        return source.matrix().astype(complex), [str(i) for i in range(source.n_sites)], tau, source
    labels = [str(v) for v in source.vertices]
    return graph_hamiltonian(source), labels, tau, source


def cmd_design(args) -> int:
    if args.mode == "chain":
        record = design_chain(
            args.size,
            args.tau_ns,
            init=args.init,
            family=args.family,
            seed=args.seed,
            restarts=args.restarts,
        )
        fileio.write_json(fileio.solution_to_dict(record), args.out)
        return EXIT_OK if record.converged else EXIT_UNCONVERGED
    solution = design_grid(args.rows, args.cols, args.tau_ns, seed=args.seed, restarts=args.restarts)
    fileio.write_json(fileio.grid_solution_to_dict(solution), args.out)
    return EXIT_OK if solution.converged else EXIT_UNCONVERGED


def cmd_evolve(args) -> int:
    matrix, labels, _, _ = _load_matrix(args.hamiltonian)
    n = matrix.shape[0]
    if not 0 <= args.init < n:
        _fail("INVALID_ARGS", f"init site {args.init} out of range for {n} sites")
    times = _time_grid(args.t_max, args.dt)
    psi0 = np.zeros(n, dtype=complex)
    psi0[args.init] = 1.0

    if args.noise:
        noise = fileio.read_noise(args.noise, n_sites=n)
        trace, rhos = evolve_lindblad(matrix, noise, state_to_density(psi0, n), times)
        final = rhos[-1]
        hermiticity = float(np.abs(final - final.conj().T).max())
        min_eig = float(np.linalg.eigvalsh(final).min())
        if hermiticity > 1e-8 or min_eig < -1e-8:
            _fail(
                "INTEGRATION_INVARIANT",
                f"density matrix breached invariants (hermiticity {hermiticity:.2e}, "
                f"min eigenvalue {min_eig:.2e})",
                EXIT_INTEGRATION,
            )
    else:
        trace, _ = evolve_unitary(matrix, psi0, times)
    totals = trace.total()
    if np.abs(totals - 1.0).max() > 1e-8:
        _fail(
            "INTEGRATION_INVARIANT",
            f"total population drifted by {np.abs(totals - 1.0).max():.2e}",
            EXIT_INTEGRATION,
        )
    fileio.write_trace_csv(trace, args.out, site_labels=labels)
    if args.plot:
        from . import plots

        plots.population_figure(trace, _figure_path(args.out))
    return EXIT_OK


def cmd_sweep_phase(args) -> int:
    source, _ = fileio.read_lattice_file(args.graph)
    if not isinstance(source, LatticeGraph):
        _fail("SCHEMA", "sweep-phase needs a graph file")
    try:
        i_str, j_str = args.edge.split(",")
        edge = (int(i_str), int(j_str))
    except ValueError:
        _fail("INVALID_ARGS", f"cannot parse edge {args.edge!r} (expected i,j)")
    key = tuple(sorted(edge))
    if key not in source.edges:
        _fail("INVALID_ARGS", f"edge {edge} not found in graph")
    if not 0 <= args.init < source.n_vertices:
        _fail("INVALID_ARGS", "init vertex out of range")

    if args.target is None:
        # default target: vertex at maximal graph distance from init
        from collections import deque

        dist = {source.vertices[args.init]: 0}
        queue = deque([source.vertices[args.init]])
        while queue:
            v = queue.popleft()
            for u in source.neighbors(v):
                if u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        target_vertex = max(sorted(dist), key=lambda v: dist[v])
        target = source.vertices.index(target_vertex)
    else:
        target = args.target
        if not 0 <= target < source.n_vertices:
            _fail("INVALID_ARGS", "target vertex out of range")

    dt = args.dt if args.dt is not None else args.t_max / 200.0
    times = _time_grid(args.t_max, dt)
    phases = np.linspace(-np.pi, np.pi, args.phases)
    amp, _ = source.edges[key]
    populations = np.zeros((len(phases), len(times)))
    psi0 = np.zeros(source.n_vertices, dtype=complex)
    psi0[args.init] = 1.0
    for k, phi in enumerate(phases):
        edges = dict(source.edges)
        edges[key] = (amp, float(phi))
        matrix = graph_hamiltonian(source.with_edges(edges))
        trace, _ = evolve_unitary(matrix, psi0, times)
        populations[k] = trace.site_populations[:, target]
    fileio.write_sweep_csv(phases, times, populations, args.out)
    if args.plot:
        from . import plots

        plots.sweep_figure(phases, times, populations, _figure_path(args.out))
    return EXIT_OK


def cmd_reduce(args) -> int:
    source, _ = fileio.read_lattice_file(args.graph)
    if not isinstance(source, LatticeGraph):
        _fail("SCHEMA", "reduce needs a graph file")
    if args.root not in source.onsite:
        _fail("INVALID_ARGS", f"root vertex {args.root} not in graph")
    try:
        chain, partition = layer_reduce(source, args.root)
    except LayerError as exc:
        _fail("REDUCTION_PRECONDITION", str(exc), EXIT_REDUCTION)
    payload = {
        "kind": "reduction",
        "units": fileio.UNITS,
        "root": int(args.root),
        "chain": {
            "onsite_mhz": [float(x) for x in fileio.rad_ns_to_mhz(chain.onsite)],
            "couplings_mhz": [float(x) for x in fileio.rad_ns_to_mhz(chain.couplings)],
        },
        "layers": [[int(v) for v in layer] for layer in partition.layers],
        "sizes": [int(k) for k in partition.sizes],
        "inter_degree": [int(x) for x in partition.inter_degree],
        "intra_degree": [int(x) for x in partition.intra_degree],
    }
    fileio.write_json(payload, args.out)
    return EXIT_OK


def cmd_robustness(args) -> int:
    source, tau = fileio.read_lattice_file(args.hamiltonian)
    if not isinstance(source, TridiagonalHamiltonian):
        _fail("SCHEMA", "robustness needs a chain hamiltonian or solution file")
    tau = args.tau_ns if args.tau_ns is not None else tau
    if tau is None:
        _fail("INVALID_ARGS", "no synthesis time: pass --tau-ns or use a solution file")
    report = robustness_mc(
        source, tau, args.sigma_rel, args.samples, args.seed, init=args.init
    )
    payload = {
        "kind": "robustness",
        "units": fileio.UNITS,
        "tau_ns": float(tau),
        "sigma_rel": report.sigma_rel,
        "jmax_mhz": float(fileio.rad_ns_to_mhz(report.j_max)),
        "samples": report.samples,
        "seed": report.seed,
        "mean_delocalization": report.mean_delocalization,
        "std_delocalization": report.std_delocalization,
        "fidelity_shot": report.fidelity_shot,
        "fidelity_drift": report.fidelity_drift,
        "delocalizations": [float(x) for x in report.delocalizations],
    }
    fileio.write_json(payload, args.out)
    if args.plot:
        from . import plots

        plots.robustness_figure(report, _figure_path(args.out))
    return EXIT_OK


def cmd_scaling(args) -> int:
    if args.chain_max < 2:
        _fail("INVALID_ARGS", "chain-max must be at least 2")
    j_max = float(fileio.mhz_to_rad_ns(args.jmax_mhz))
    rows = []
    for size in range(2, args.chain_max + 1):
        record = design_chain(size, 1.0, seed=args.seed, restarts=args.restarts)
        bound = circuit_lower_bound("chain", size, j_max)
        rows.append(
            {
                "size": size,
                "jmax_tau": record.jmax_tau,
                "single_step_tau_ns": record.jmax_tau / j_max,
                "circuit_layers": bound.t_min,
                "circuit_time_ns": bound.circuit_time,
            }
        )
    payload = {
        "kind": "scaling",
        "units": fileio.UNITS,
        "jmax_mhz": float(args.jmax_mhz),
        "theta_max_rad": float(np.pi / 2),
        "chains": rows,
    }
    if args.grid_max is not None:
        grids = []
        for side in range(2, args.grid_max + 1):
            bound = circuit_lower_bound("grid", side, j_max)
            grids.append(
                {
                    "side": side,
                    "n_qubits": bound.n_qubits,
                    "t_min": bound.t_min,
                    "d1_max": bound.d1_max,
                    "dinf_max": bound.dinf_max,
                    "circuit_time_ns": bound.circuit_time,
                }
            )
        payload["grids"] = grids
    fileio.write_json(payload, args.out)
    if args.plot:
        from . import plots

        plots.scaling_figure(rows, _figure_path(args.out))
    return EXIT_OK


def _figure_path(out: str) -> str:
    return str(Path(out).with_suffix(".png"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wstate-forge",
        description="Design and verify single-step W-state generation Hamiltonians.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="synthesise a chain or grid operation")
    design_sub = p_design.add_subparsers(dest="mode", required=True)
    p_chain = design_sub.add_parser("chain")
    p_chain.add_argument("--size", type=int, required=True)
    p_chain.add_argument("--init", type=int, default=None)
    p_chain.add_argument("--tau-ns", type=float, required=True)
    p_chain.add_argument("--family", default="auto",
                         choices=["auto", "antisymmetric", "symmetric", "resonant"])
    p_chain.add_argument("--seed", type=int, default=0)
    p_chain.add_argument("--restarts", type=int, default=128)
    p_chain.add_argument("--out", required=True)
    p_grid = design_sub.add_parser("grid")
    p_grid.add_argument("--rows", type=int, required=True)
    p_grid.add_argument("--cols", type=int, required=True)
    p_grid.add_argument("--tau-ns", type=float, required=True)
    p_grid.add_argument("--seed", type=int, default=0)
    p_grid.add_argument("--restarts", type=int, default=128)
    p_grid.add_argument("--out", required=True)

    p_evolve = sub.add_parser("evolve", help="propagate a localised excitation")
    p_evolve.add_argument("--hamiltonian", required=True)
    p_evolve.add_argument("--init", type=int, required=True)
    p_evolve.add_argument("--t-max", type=float, required=True)
    p_evolve.add_argument("--dt", type=float, required=True)
    p_evolve.add_argument("--noise", default=None)
    p_evolve.add_argument("--out", required=True)
    p_evolve.add_argument("--plot", action="store_true")

    p_sweep = sub.add_parser("sweep-phase", help="sweep one coupling phase")
    p_sweep.add_argument("--graph", required=True)
    p_sweep.add_argument("--edge", required=True, help="i,j")
    p_sweep.add_argument("--phases", type=int, required=True)
    p_sweep.add_argument("--t-max", type=float, required=True)
    p_sweep.add_argument("--dt", type=float, default=None)
    p_sweep.add_argument("--init", type=int, required=True)
    p_sweep.add_argument("--target", type=int, default=None)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--plot", action="store_true")

    p_reduce = sub.add_parser("reduce", help="collapse a distance-regular graph")
    p_reduce.add_argument("--graph", required=True)
    p_reduce.add_argument("--root", type=int, required=True)
    p_reduce.add_argument("--out", required=True)

    p_rob = sub.add_parser("robustness", help="Monte-Carlo parameter noise")
    p_rob.add_argument("--hamiltonian", required=True)
    p_rob.add_argument("--tau-ns", type=float, default=None)
    p_rob.add_argument("--sigma-rel", type=float, required=True)
    p_rob.add_argument("--samples", type=int, required=True)
    p_rob.add_argument("--seed", type=int, required=True)
    p_rob.add_argument("--init", type=int, default=None)
    p_rob.add_argument("--out", required=True)
    p_rob.add_argument("--plot", action="store_true")

    p_scale = sub.add_parser("scaling", help="single-step vs circuit-depth scaling")
    p_scale.add_argument("--chain-max", type=int, required=True)
    p_scale.add_argument("--jmax-mhz", type=float, required=True)
    p_scale.add_argument("--grid-max", type=int, default=None)
    p_scale.add_argument("--seed", type=int, default=0)
    p_scale.add_argument("--restarts", type=int, default=96)
    p_scale.add_argument("--out", required=True)
    p_scale.add_argument("--plot", action="store_true")

    return parser


_HANDLERS = {
    "design": cmd_design,
    "evolve": cmd_evolve,
    "sweep-phase": cmd_sweep_phase,
    "reduce": cmd_reduce,
    "robustness": cmd_robustness,
    "scaling": cmd_scaling,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, which matches the documented code
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return _HANDLERS[args.command](args)
    except CliError as exc:
        print(f"error_id={exc.error_id} {exc}", file=sys.stderr)
        return exc.code
    except (fileio.SchemaError, FileNotFoundError) as exc:
        print(f"error_id=SCHEMA {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error_id=INVALID_ARGS {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RuntimeError as exc:
        print(f"error_id=UNCONVERGED {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
