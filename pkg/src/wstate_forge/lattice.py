"""Arbitrary-connectivity single-excitation Hamiltonians on graphs.

Couplings carry a magnitude and an oriented phase; flipping the edge
orientation negates the phase.  Sums of phases around closed loops are
gauge invariant and control interference between excitation paths, while
tree-like phase patterns can always be absorbed into the qubit frames.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .spectral import TridiagonalHamiltonian

__all__ = [
    "LatticeGraph",
    "FluxError",
    "DetuningError",
    "LayerError",
    "LayerPartition",
    "graph_hamiltonian",
    "kron_sum",
    "cycle_phase_sums",
    "gauge_fix",
    "apply_gauge",
    "onsite_from_detunings",
    "layer_reduce",
    "lift_layer_state",
    "grid_graph",
    "heavy_hex_graph",
    "chain_graph",
]

PHASE_TOL = 1e-10


def _canonical(i, j):
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class LatticeGraph:
    """Simple graph with on-site energies and complex couplings.

    ``edges`` maps canonically ordered vertex pairs (i < j) to
    ``(amplitude, phase)``; the stored phase refers to the i -> j
    orientation.  Energies and amplitudes are in rad/ns.
    """

    vertices: tuple
    onsite: dict
    edges: dict

    def __post_init__(self):
        verts = tuple(self.vertices)
        vset = set(verts)
        if len(vset) != len(verts):
            raise ValueError("duplicate vertices")
        onsite = {v: float(self.onsite.get(v, 0.0)) for v in verts}
        edges = {}
        for (i, j), value in self.edges.items():
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if i not in vset or j not in vset:
                raise ValueError(f"edge ({i}, {j}) references unknown vertex")
            amp, phase = value
            key = _canonical(i, j)
            if key in edges:
                raise ValueError(f"duplicate edge {key}")
            if key != (i, j):
                phase = -phase
            edges[key] = (float(amp), float(phase))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "onsite", onsite)
        object.__setattr__(self, "edges", edges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def index(self, vertex) -> int:
        return self.vertices.index(vertex)

    def coupling(self, i, j) -> tuple[float, float]:
        """Amplitude and phase of edge i -> j in that orientation."""
        amp, phase = self.edges[_canonical(i, j)]
        return (amp, phase) if i < j else (amp, -phase)

    def neighbors(self, v) -> list:
        out = []
        for (i, j) in self.edges:
            if i == v:
                out.append(j)
            elif j == v:
                out.append(i)
        return sorted(out)

    def with_edges(self, edges) -> "LatticeGraph":
        return LatticeGraph(self.vertices, dict(self.onsite), edges)

    def with_onsite(self, onsite) -> "LatticeGraph":
        return LatticeGraph(self.vertices, dict(onsite), dict(self.edges))


class FluxError(ValueError):
    """A closed loop carries a gauge-invariant flux that cannot be removed."""

    def __init__(self, message, cycle, flux):
        super().__init__(message)
        self.cycle = cycle
        self.flux = flux


class DetuningError(ValueError):
    """Edge detunings are inconsistent around a closed loop."""

    def __init__(self, message, cycle, residual):
        super().__init__(message)
        self.cycle = cycle
        self.residual = residual


class LayerError(ValueError):
    """Graph is not distance-regular (or not layer-uniform) from the root."""


def graph_hamiltonian(graph: LatticeGraph) -> np.ndarray:
    """Hermitian matrix over the localised basis in vertex order."""
    n = graph.n_vertices
    pos = {v: k for k, v in enumerate(graph.vertices)}
    h = np.zeros((n, n), dtype=complex)
    for v, e in graph.onsite.items():
        h[pos[v], pos[v]] = e
    for (i, j), (amp, phase) in graph.edges.items():
        # H[j, i] multiplies |q_j><q_i|, the i -> j hop
        h[pos[j], pos[i]] = amp * np.exp(1j * phase)
        h[pos[i], pos[j]] = amp * np.exp(-1j * phase)
    return h


def kron_sum(h_left: np.ndarray, h_right: np.ndarray) -> np.ndarray:
    """H_L (x) I + I (x) H_M with row-major composite ordering.

    The two terms commute exactly, so single-excitation dynamics factorise
    along the two directions.
    """
    hl = np.asarray(h_left, dtype=complex)
    hm = np.asarray(h_right, dtype=complex)
    return np.kron(hl, np.eye(hm.shape[0])) + np.kron(np.eye(hl.shape[0]), hm)


def _spanning_tree(graph: LatticeGraph):
    """BFS tree from the smallest vertex; returns (parent map, order)."""
    root = sorted(graph.vertices)[0]
    parent = {root: None}
    order = [root]
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in graph.neighbors(v):
            if u not in parent:
                parent[u] = v
                order.append(u)
                queue.append(u)
    if len(parent) != graph.n_vertices:
        raise ValueError("graph is not connected")
    return parent, order


def _tree_path(parent, a, b):
    """Vertex path a -> b through the tree."""
    anc_a = [a]
    while parent[anc_a[-1]] is not None:
        anc_a.append(parent[anc_a[-1]])
    mark = set(anc_a)
    anc_b = [b]
    while anc_b[-1] not in mark:
        anc_b.append(parent[anc_b[-1]])
    meet = anc_b[-1]
    up = anc_a[: anc_a.index(meet) + 1]
    return up + anc_b[:-1][::-1]


def _wrap_phase(phi: float) -> float:
    """Map to the interval (-pi, pi]."""
    out = (phi + np.pi) % (2 * np.pi) - np.pi
    if out < -np.pi + 1e-12:
        out += 2 * np.pi
    return float(out)


def cycle_phase_sums(graph: LatticeGraph) -> list[tuple[list, float]]:
    """Loop phases of a deterministic fundamental cycle basis.

    One entry per chord of the BFS spanning tree rooted at the smallest
    vertex; chords are visited in sorted order.  Phase sums are wrapped to
    (-pi, pi].
    """
    parent, _ = _spanning_tree(graph)
    tree_edges = {_canonical(v, p) for v, p in parent.items() if p is not None}
    chords = sorted(e for e in graph.edges if e not in tree_edges)
    results = []
    for (a, b) in chords:
        path = _tree_path(parent, b, a)  # close the loop a -> b via the tree
        cycle = [a, b] + path[1:-1]
        total = graph.coupling(a, b)[1]
        for u, v in zip(path[:-1], path[1:]):
            total += graph.coupling(u, v)[1]
        results.append((cycle, _wrap_phase(total)))
    return results


def gauge_fix(graph: LatticeGraph) -> tuple[LatticeGraph, dict]:
    """Absorb all edge phases into per-vertex frame rotations.

    Only possible when every loop flux vanishes (mod 2 pi); otherwise a
    FluxError reports the offending cycle.  Returns the phase-free graph
    and the frame angles theta with theta_j - theta_i = phi_ij on tree
    edges and theta_root = 0.
    """
    for cycle, flux in cycle_phase_sums(graph):
        if abs(flux) > PHASE_TOL:
            raise FluxError(
                f"loop {cycle} carries gauge-invariant flux {flux:.6g} rad; "
                "dynamics are physically inequivalent to the phase-free graph",
                cycle,
                flux,
            )
    parent, order = _spanning_tree(graph)
    theta = {order[0]: 0.0}
    for v in order[1:]:
        p = parent[v]
        theta[v] = theta[p] + graph.coupling(p, v)[1]
    edges = {key: (amp, 0.0) for key, (amp, _) in graph.edges.items()}
    return graph.with_edges(edges), theta


def apply_gauge(graph: LatticeGraph, theta: dict) -> LatticeGraph:
    """Rotate qubit frames: phi_ij -> phi_ij + theta_i - theta_j."""
    edges = {}
    for (i, j), (amp, phase) in graph.edges.items():
        edges[(i, j)] = (amp, phase + theta.get(i, 0.0) - theta.get(j, 0.0))
    return graph.with_edges(edges)


def onsite_from_detunings(graph: LatticeGraph, detunings: dict, reference) -> dict:
    """Solve Delta_i - Delta_j = delta_ij over the graph.

    ``detunings`` maps oriented edges (i, j) to delta_ij; the reference
    vertex is pinned to zero energy.  Inconsistent loop sums raise a
    DetuningError with the cycle and its residual.
    """
    if reference not in graph.onsite:
        raise ValueError(f"unknown reference vertex {reference!r}")
    delta = {}
    for (i, j), value in detunings.items():
        key = _canonical(i, j)
        if key not in graph.edges:
            raise ValueError(f"detuning given for non-edge ({i}, {j})")
        delta[key] = float(value) if (i, j) == key else -float(value)
    missing = set(graph.edges) - set(delta)
    if missing:
        raise ValueError(f"missing detunings for edges {sorted(missing)}")

    parent, order = _spanning_tree(graph)
    assignment = {order[0]: 0.0}
    for v in order[1:]:
        p = parent[v]
        d_pv = delta[_canonical(p, v)] if p < v else -delta[_canonical(v, p)]
        # Delta_p - Delta_v = delta_pv
        assignment[v] = assignment[p] - d_pv
    tree_edges = {_canonical(v, p) for v, p in parent.items() if p is not None}
    for (i, j) in sorted(graph.edges):
        residual = assignment[i] - assignment[j] - delta[(i, j)]
        if abs(residual) > PHASE_TOL and (i, j) not in tree_edges:
            path = _tree_path(parent, j, i)
            cycle = [i, j] + path[1:-1]
            raise DetuningError(
                f"drive detunings around loop {cycle} sum to {residual:.6g}; "
                "no consistent on-site energies exist",
                cycle,
                residual,
            )
    shift = assignment[reference]
    return {v: val - shift for v, val in assignment.items()}


@dataclass(frozen=True)
class LayerPartition:
    """Distance-regular layer structure rooted at a vertex."""

    root: object
    layers: tuple            # tuple of vertex tuples, one per distance d
    sizes: tuple             # K_d
    inter_degree: tuple      # L_d, neighbours of a layer-d vertex in layer d+1
    intra_degree: tuple      # L'_d, neighbours within layer d
    inter_coupling: tuple    # J_d (amplitude), one per boundary d -> d+1
    intra_coupling: tuple    # J'_d, zero when the layer has no internal edges
    onsite: tuple            # Delta_d

    @property
    def depth(self) -> int:
        return len(self.layers)


def _layers_from(graph: LatticeGraph, root) -> list[list]:
    dist = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in graph.neighbors(v):
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    if len(dist) != graph.n_vertices:
        raise ValueError("graph is not connected")
    depth = max(dist.values()) + 1
    layers = [[] for _ in range(depth)]
    for v in sorted(dist, key=lambda x: (dist[x], x)):
        layers[dist[v]].append(v)
    return layers


def layer_reduce(graph: LatticeGraph, root) -> tuple[TridiagonalHamiltonian, LayerPartition]:
    """Collapse a distance-regular rooted graph onto its layer chain.

    Every vertex at distance d must have the same number of neighbours in
    layers d, d+1 and d-1, and all couplings and energies must be uniform
    per layer (with vanishing edge phases).  The effective chain carries
    on-site energies Delta_d + L'_d J'_d and couplings
    J_d L_d sqrt(K_d / K_{d+1}) between the layer superposition states.
    """
    if root not in graph.onsite:
        raise ValueError(f"unknown root vertex {root!r}")
    layers = _layers_from(graph, root)
    depth = len(layers)
    index_of = {}
    for d, layer in enumerate(layers):
        for v in layer:
            index_of[v] = d

    sizes, inter_deg, intra_deg = [], [], []
    inter_amp, intra_amp, onsite = [], [], []
    for d, layer in enumerate(layers):
        sizes.append(len(layer))
        energies = {graph.onsite[v] for v in layer}
        e0 = graph.onsite[layer[0]]
        if any(abs(graph.onsite[v] - e0) > PHASE_TOL for v in layer):
            raise LayerError(f"layer {d} has non-uniform on-site energies")
        onsite.append(e0)

        fwd_counts, intra_counts, back_counts = set(), set(), set()
        fwd_amps, intra_amps = [], []
        for v in layer:
            fwd = intra = back = 0
            for u in graph.neighbors(v):
                amp, phase = graph.coupling(v, u)
                if abs(_wrap_phase(phase)) > PHASE_TOL:
                    raise LayerError(
                        f"edge ({v}, {u}) carries a nonzero phase; gauge-fix first"
                    )
                du = index_of[u]
                if du == d + 1:
                    fwd += 1
                    fwd_amps.append(amp)
                elif du == d:
                    intra += 1
                    intra_amps.append(amp)
                elif du == d - 1:
                    back += 1
                else:
                    raise LayerError(
                        f"edge ({v}, {u}) skips layers {d} -> {du}"
                    )
            fwd_counts.add(fwd)
            intra_counts.add(intra)
            back_counts.add(back)
        if len(fwd_counts) > 1 or len(intra_counts) > 1 or len(back_counts) > 1:
            raise LayerError(
                f"layer {d} is not distance-regular: forward degrees {sorted(fwd_counts)}, "
                f"intra {sorted(intra_counts)}, backward {sorted(back_counts)}"
            )
        inter_deg.append(fwd_counts.pop())
        intra_deg.append(intra_counts.pop())
        if fwd_amps:
            if max(fwd_amps) - min(fwd_amps) > PHASE_TOL:
                raise LayerError(f"layer {d} inter-layer couplings are not uniform")
            inter_amp.append(fwd_amps[0])
        else:
            inter_amp.append(0.0)
        if intra_amps:
            if max(intra_amps) - min(intra_amps) > PHASE_TOL:
                raise LayerError(f"layer {d} intra-layer couplings are not uniform")
            intra_amp.append(intra_amps[0])
        else:
            intra_amp.append(0.0)

    chain_onsite = np.array(
        [onsite[d] + intra_deg[d] * intra_amp[d] for d in range(depth)]
    )
    chain_couplings = np.array(
        [
            inter_amp[d] * inter_deg[d] * np.sqrt(sizes[d] / sizes[d + 1])
            for d in range(depth - 1)
        ]
    )
    partition = LayerPartition(
        root=root,
        layers=tuple(tuple(l) for l in layers),
        sizes=tuple(sizes),
        inter_degree=tuple(inter_deg),
        intra_degree=tuple(intra_deg),
        inter_coupling=tuple(inter_amp),
        intra_coupling=tuple(intra_amp),
        onsite=tuple(onsite),
    )
    return TridiagonalHamiltonian(chain_onsite, chain_couplings), partition


def lift_layer_state(chain_state, partition: LayerPartition, graph: LatticeGraph) -> np.ndarray:
    """Expand a layer-chain state onto the full graph (graph vertex order)."""
    out = np.zeros(graph.n_vertices, dtype=complex)
    pos = {v: k for k, v in enumerate(graph.vertices)}
    for d, layer in enumerate(partition.layers):
        amp = chain_state[d] / np.sqrt(partition.sizes[d])
        for v in layer:
            out[pos[v]] = amp
    return out


def chain_graph(onsite, couplings) -> LatticeGraph:
    """Path graph carrying the parameters of a tridiagonal Hamiltonian."""
    onsite = np.atleast_1d(np.asarray(onsite, dtype=float))
    couplings = np.atleast_1d(np.asarray(couplings, dtype=float)) \
        if np.size(couplings) else np.zeros(0)
    n = len(onsite)
    vertices = tuple(range(n))
    edges = {(i, i + 1): (abs(couplings[i]), 0.0 if couplings[i] >= 0 else np.pi)
             for i in range(n - 1)}
    return LatticeGraph(vertices, {i: onsite[i] for i in range(n)}, edges)


def grid_graph(rows: int, cols: int, coupling: float = 1.0, onsite: float = 0.0) -> LatticeGraph:
    """Rectangular lattice with row-major vertex ids l * cols + m."""
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be at least 1")
    vertices = tuple(range(rows * cols))
    edges = {}
    for l in range(rows):
        for m in range(cols):
            v = l * cols + m
            if m + 1 < cols:
                edges[(v, v + 1)] = (coupling, 0.0)
            if l + 1 < rows:
                edges[(v, v + cols)] = (coupling, 0.0)
    return LatticeGraph(vertices, {v: onsite for v in vertices}, edges)


# Rooted layer profile of the 28-qubit heavy-hex patch: three hexagons
# sharing the central corner vertex.  Layers alternate corner and bond
# qubits; the outermost corners close the three hexagonal loops.
HEAVY_HEX_SIZES = (1, 3, 3, 6, 6, 6, 3)
HEAVY_HEX_INTER_DEGREE = (3, 1, 2, 1, 1, 1)


def heavy_hex_graph(inter_couplings=None, layer_onsite=None) -> LatticeGraph:
    """28-qubit heavy-hex patch, distance-regular about its centre.

    ``inter_couplings`` gives the physical coupling amplitude per layer
    boundary (six values); ``layer_onsite`` the per-layer energies (seven
    values).  Defaults are uniform unit couplings and zero energies.
    """
    if inter_couplings is None:
        inter_couplings = np.ones(6)
    if layer_onsite is None:
        layer_onsite = np.zeros(7)
    inter_couplings = np.asarray(inter_couplings, dtype=float)
    layer_onsite = np.asarray(layer_onsite, dtype=float)
    if inter_couplings.shape != (6,) or layer_onsite.shape != (7,):
        raise ValueError("expected 6 boundary couplings and 7 layer energies")

    # Vertex ids by layer:
    # 0: root; 1-3: root bonds; 4-6: first-ring corners C_i;
    # 7-12: bonds m[i][j]; 13-18: corners w[i][j]; 19-24: bonds n[i][j];
    # 25-27: closing corners V_ij for ij in (12, 13, 23).
    pairs = [(1, 2), (1, 3), (2, 3)]
    m_id = {}
    w_id = {}
    n_id = {}
    next_id = 7
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            if i == j:
                continue
            m_id[(i, j)] = next_id
            w_id[(i, j)] = next_id + 6
            n_id[(i, j)] = next_id + 12
            next_id += 1
    v_id = {pair: 25 + k for k, pair in enumerate(pairs)}

    edges = {}
    layer_of = {0: 0}
    for i in (1, 2, 3):
        edges[(0, i)] = (inter_couplings[0], 0.0)
        edges[(i, i + 3)] = (inter_couplings[1], 0.0)
        layer_of[i] = 1
        layer_of[i + 3] = 2
    for (i, j), mid in m_id.items():
        corner = i + 3
        edges[_canonical(corner, mid)] = (inter_couplings[2], 0.0)
        edges[_canonical(mid, w_id[(i, j)])] = (inter_couplings[3], 0.0)
        edges[_canonical(w_id[(i, j)], n_id[(i, j)])] = (inter_couplings[4], 0.0)
        pair = _canonical(i, j)
        edges[_canonical(n_id[(i, j)], v_id[pair])] = (inter_couplings[5], 0.0)
        layer_of[mid] = 3
        layer_of[w_id[(i, j)]] = 4
        layer_of[n_id[(i, j)]] = 5
    for pair in pairs:
        layer_of[v_id[pair]] = 6

    vertices = tuple(range(28))
    onsite = {v: layer_onsite[layer_of[v]] for v in vertices}
    return LatticeGraph(vertices, onsite, edges)
