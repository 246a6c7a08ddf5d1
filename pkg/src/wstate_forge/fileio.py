"""File formats for Hamiltonians, graphs, noise models, traces and reports.

JSON files carry a mandatory ``units`` block; frequencies in files are
linear (MHz, J / 2 pi) and are converted to angular rad/ns internally.
Traces are RFC-4180 CSV with '.' decimals and LF line endings.  Writers
emit deterministic output so every file round-trips bit-identically.
"""

import csv
import json

import numpy as np

from .dynamics import NoiseModel, PopulationTrace
from .lattice import LatticeGraph
from .spectral import TridiagonalHamiltonian

__all__ = [
    "UNITS",
    "mhz_to_rad_ns",
    "rad_ns_to_mhz",
    "write_hamiltonian",
    "read_hamiltonian",
    "write_graph",
    "read_graph",
    "read_lattice_file",
    "write_noise",
    "read_noise",
    "write_trace_csv",
    "read_trace_csv",
    "write_sweep_csv",
    "read_sweep_csv",
    "write_json",
    "read_json",
    "solution_to_dict",
    "grid_solution_to_dict",
]

UNITS = {"time": "ns", "frequency": "MHz"}


class SchemaError(ValueError):
    """File does not conform to the expected schema."""


def mhz_to_rad_ns(value):
    return np.asarray(value, dtype=float) * (2 * np.pi * 1e-3)


def rad_ns_to_mhz(value):
    return np.asarray(value, dtype=float) / (2 * np.pi * 1e-3)


def _check_units(payload: dict, path: str):
    units = payload.get("units")
    if units != UNITS:
        raise SchemaError(f"{path}: missing or wrong units block (need {UNITS})")


def write_json(payload: dict, path: str):
    with open(path, "w", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_hamiltonian(ham: TridiagonalHamiltonian, path: str, tau_ns: float | None = None):
    payload = {
        "kind": "hamiltonian",
        "units": UNITS,
        "onsite_mhz": [float(x) for x in rad_ns_to_mhz(ham.onsite)],
        "couplings": [
            {"amp_mhz": float(rad_ns_to_mhz(abs(j))), "phase_rad": 0.0 if j >= 0 else float(np.pi)}
            for j in ham.couplings
        ],
    }
    if tau_ns is not None:
        payload["tau_ns"] = float(tau_ns)
    write_json(payload, path)


def read_hamiltonian(path: str) -> tuple[TridiagonalHamiltonian, float | None]:
    payload = read_json(path)
    _check_units(payload, path)
    if payload.get("kind") != "hamiltonian":
        raise SchemaError(f"{path}: expected kind 'hamiltonian'")
    onsite = mhz_to_rad_ns(payload["onsite_mhz"])
    couplings = []
    for item in payload.get("couplings", []):
        amp = float(mhz_to_rad_ns(item["amp_mhz"]))
        phase = float(item.get("phase_rad", 0.0))
        couplings.append(amp * np.cos(phase))
    return TridiagonalHamiltonian(onsite, couplings), payload.get("tau_ns")


def write_graph(graph: LatticeGraph, path: str, extra: dict | None = None):
    payload = {
        "kind": "graph",
        "units": UNITS,
        "vertices": [int(v) for v in graph.vertices],
        "onsite_mhz": {str(v): float(rad_ns_to_mhz(e)) for v, e in graph.onsite.items()},
        "edges": [
            {
                "i": int(i),
                "j": int(j),
                "amp_mhz": float(rad_ns_to_mhz(amp)),
                "phase_rad": float(phase),
            }
            for (i, j), (amp, phase) in sorted(graph.edges.items())
        ],
    }
    if extra:
        payload.update(extra)
    write_json(payload, path)


def read_graph(path: str) -> LatticeGraph:
    payload = read_json(path)
    _check_units(payload, path)
    if payload.get("kind") != "graph":
        raise SchemaError(f"{path}: expected kind 'graph'")
    vertices = tuple(int(v) for v in payload["vertices"])
    onsite = {int(v): float(mhz_to_rad_ns(e)) for v, e in payload["onsite_mhz"].items()}
    edges = {}
    for item in payload["edges"]:
        edges[(int(item["i"]), int(item["j"]))] = (
            float(mhz_to_rad_ns(item["amp_mhz"])),
            float(item.get("phase_rad", 0.0)),
        )
    return LatticeGraph(vertices, onsite, edges)


def read_lattice_file(path: str):
    """Load any Hamiltonian-bearing file as (source, tau or None).

    Accepts 'hamiltonian', 'graph' and 'solution' kinds and returns a
    (TridiagonalHamiltonian | LatticeGraph, tau_ns) pair.
    """
    payload = read_json(path)
    kind = payload.get("kind")
    if kind == "hamiltonian":
        return read_hamiltonian(path)
    if kind == "graph":
        return read_graph(path), payload.get("tau_ns")
    if kind == "solution":
        _check_units(payload, path)
        block = payload["hamiltonian"]
        onsite = mhz_to_rad_ns(block["onsite_mhz"])
        couplings = [
            float(mhz_to_rad_ns(item["amp_mhz"])) * np.cos(item.get("phase_rad", 0.0))
            for item in block.get("couplings", [])
        ]
        return TridiagonalHamiltonian(onsite, couplings), payload.get("tau_ns")
    raise SchemaError(f"{path}: unknown kind {kind!r}")


def write_noise(noise: NoiseModel, path: str):
    payload = {
        "kind": "noise",
        "units": UNITS,
        "t1_ns": [float(x) for x in noise.t1],
        "t2_ns": [float(x) for x in noise.t2],
    }
    write_json(payload, path)


def read_noise(path: str, n_sites: int | None = None) -> NoiseModel:
    payload = read_json(path)
    _check_units(payload, path)
    if payload.get("kind") != "noise":
        raise SchemaError(f"{path}: expected kind 'noise'")
    t1 = payload["t1_ns"]
    t2 = payload["t2_ns"]
    if np.isscalar(t1):
        t1 = [t1] * (n_sites or 1)
    if np.isscalar(t2):
        t2 = [t2] * (n_sites or 1)
    if n_sites is not None and len(t1) == 1 and n_sites > 1:
        t1 = list(t1) * n_sites
        t2 = list(t2) * n_sites
    noise = NoiseModel(np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))
    if n_sites is not None and noise.n_sites != n_sites:
        raise SchemaError(f"{path}: noise lists have {noise.n_sites} sites, need {n_sites}")
    return noise


def _format_float(x: float) -> str:
    return repr(float(x))


def write_trace_csv(trace: PopulationTrace, path: str, site_labels=None):
    labels = site_labels or [str(i) for i in range(trace.n_sites)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_ns"] + [f"p_{s}" for s in labels] + ["p_vac"])
        for k, t in enumerate(trace.times):
            row = [_format_float(t)]
            row += [_format_float(x) for x in trace.site_populations[k]]
            row.append(_format_float(trace.vacuum[k]))
            writer.writerow(row)


def read_trace_csv(path: str) -> tuple[PopulationTrace, list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "time_ns" or header[-1] != "p_vac":
            raise SchemaError(f"{path}: malformed trace header")
        labels = [h[2:] for h in header[1:-1]]
        rows = [[float(x) for x in row] for row in reader]
    data = np.asarray(rows)
    trace = PopulationTrace(data[:, 0], data[:, 1:-1], data[:, -1])
    return trace, labels


def write_sweep_csv(phases, times, populations, path: str):
    """Interference map rows (phi_rad, time_ns, p_target)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["phi_rad", "time_ns", "p_target"])
        for i, phi in enumerate(phases):
            for k, t in enumerate(times):
                writer.writerow(
                    [_format_float(phi), _format_float(t), _format_float(populations[i, k])]
                )


def read_sweep_csv(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of write_sweep_csv: (phases, times, population grid)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["phi_rad", "time_ns", "p_target"]:
            raise SchemaError(f"{path}: malformed sweep header")
        rows = [[float(x) for x in row] for row in reader]
    data = np.asarray(rows)
    phases = np.unique(data[:, 0])
    times = np.unique(data[:, 1])
    grid = data[:, 2].reshape(len(phases), len(times))
    return phases, times, grid


def solution_to_dict(record) -> dict:
    ham = record.hamiltonian
    payload = {
        "kind": "solution",
        "units": UNITS,
        "family": record.family,
        "params": record.params,
        "tau_ns": float(record.tau),
        "init_site": int(record.init),
        "residual_infidelity": float(record.residual_infidelity),
        "jmax_tau": float(record.jmax_tau),
        "converged": bool(record.converged),
        "hamiltonian": {
            "onsite_mhz": [float(x) for x in rad_ns_to_mhz(ham.onsite)],
            "couplings": [
                {
                    "amp_mhz": float(rad_ns_to_mhz(abs(j))),
                    "phase_rad": 0.0 if j >= 0 else float(np.pi),
                }
                for j in ham.couplings
            ],
        },
    }
    if record.target is not None:
        payload["target_populations"] = [float(t) for t in record.target]
    return payload


def grid_solution_to_dict(solution) -> dict:
    payload = {
        "kind": "grid_solution",
        "units": UNITS,
        "tau_ns": float(solution.tau),
        "init_vertex": int(solution.init_vertex),
        "residual_infidelity": float(solution.residual_infidelity),
        "jmax_tau": float(solution.jmax_tau),
        "converged": bool(solution.converged),
        "row_solution": solution_to_dict(solution.row_record),
        "graph": {
            "vertices": [int(v) for v in solution.graph.vertices],
            "onsite_mhz": {
                str(v): float(rad_ns_to_mhz(e)) for v, e in solution.graph.onsite.items()
            },
            "edges": [
                {
                    "i": int(i),
                    "j": int(j),
                    "amp_mhz": float(rad_ns_to_mhz(amp)),
                    "phase_rad": float(phase),
                }
                for (i, j), (amp, phase) in sorted(solution.graph.edges.items())
            ],
        },
    }
    if solution.col_record is not None:
        payload["col_solution"] = solution_to_dict(solution.col_record)
    return payload
