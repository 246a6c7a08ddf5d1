import numpy as np
import pytest

from wstate_forge.dynamics import evolve_unitary, propagator
from wstate_forge.lattice import (
    DetuningError,
    FluxError,
    LatticeGraph,
    LayerError,
    apply_gauge,
    chain_graph,
    cycle_phase_sums,
    gauge_fix,
    graph_hamiltonian,
    grid_graph,
    heavy_hex_graph,
    kron_sum,
    layer_reduce,
    lift_layer_state,
    onsite_from_detunings,
)


class TestGraphHamiltonian:
    def test_matches_three_site_form(self):
        j = 0.9
        g = chain_graph([-2 * j, 0.0, 2 * j], [j, j])
        h = graph_hamiltonian(g)
        expected = np.array(
            [[-2 * j, j, 0], [j, 0, j], [0, j, 2 * j]], dtype=complex
        )
        np.testing.assert_allclose(h, expected, atol=1e-15)

    def test_empty_edges_is_diagonal(self):
        g = LatticeGraph((0, 1, 2), {0: 0.1, 1: -0.2, 2: 0.3}, {})
        np.testing.assert_allclose(
            graph_hamiltonian(g), np.diag([0.1, -0.2, 0.3]), atol=1e-15
        )

    def test_pi_phase_equals_negated_coupling(self):
        g = grid_graph(2, 2, coupling=1.0)
        edges = dict(g.edges)
        edges[(2, 3)] = (1.0, np.pi)
        h_phase = graph_hamiltonian(g.with_edges(edges))
        h_neg = graph_hamiltonian(g).astype(complex)
        h_neg[2, 3] = h_neg[3, 2] = -1.0
        np.testing.assert_allclose(h_phase, h_neg, atol=1e-12)

    def test_orientation_flip_negates_phase(self):
        g = LatticeGraph((0, 1), {}, {(1, 0): (1.0, 0.4)})
        amp, phase = g.coupling(0, 1)
        assert (amp, phase) == pytest.approx((1.0, -0.4))
        amp, phase = g.coupling(1, 0)
        assert (amp, phase) == pytest.approx((1.0, 0.4))

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            LatticeGraph((0, 1), {}, {(0, 0): (1.0, 0.0)})


class TestKronSum:
    def test_trivial_left_factor(self):
        hm = np.array([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(kron_sum(np.zeros((1, 1)), hm), hm)

    def test_terms_commute_exactly(self):
        rng = np.random.default_rng(4)
        hl = rng.normal(size=(3, 3))
        hl = hl + hl.T
        hm = rng.normal(size=(2, 2))
        hm = hm + hm.T
        a = np.kron(hl, np.eye(2))
        b = np.kron(np.eye(3), hm)
        np.testing.assert_array_equal(a @ b - b @ a, np.zeros((6, 6)))

    def test_populations_factorize(self):
        rng = np.random.default_rng(5)
        hl = rng.normal(size=(2, 2))
        hl = hl + hl.T
        hm = rng.normal(size=(3, 3))
        hm = hm + hm.T
        h2d = kron_sum(hl, hm)
        psi_l = np.zeros(2, dtype=complex)
        psi_l[1] = 1.0
        psi_m = np.zeros(3, dtype=complex)
        psi_m[1] = 1.0
        times = np.linspace(0, 4, 9)
        tl, _ = evolve_unitary(hl, psi_l, times)
        tm, _ = evolve_unitary(hm, psi_m, times)
        t2d, _ = evolve_unitary(h2d, np.kron(psi_l, psi_m), times)
        product = np.einsum("tl,tm->tlm", tl.site_populations, tm.site_populations)
        np.testing.assert_allclose(
            t2d.site_populations, product.reshape(len(times), 6), atol=1e-12
        )


class TestCyclePhaseSums:
    def test_tree_has_no_cycles(self):
        g = chain_graph([0.0] * 4, [1.0, 1.0, 1.0])
        assert cycle_phase_sums(g) == []

    def test_single_plaquette_phase(self):
        g = grid_graph(2, 2)
        edges = dict(g.edges)
        edges[(2, 3)] = (1.0, 0.8)
        sums = cycle_phase_sums(g.with_edges(edges))
        assert len(sums) == 1
        assert sums[0][1] == pytest.approx(0.8, abs=1e-12)

    def test_grid_cycle_count(self):
        for rows, cols in ((2, 2), (3, 4), (4, 3)):
            g = grid_graph(rows, cols)
            assert len(cycle_phase_sums(g)) == (rows - 1) * (cols - 1)
            assert len(g.edges) == 2 * rows * cols - rows - cols

    def test_gauge_invariance_of_sums(self):
        rng = np.random.default_rng(6)
        g = grid_graph(3, 3)
        edges = {k: (amp, rng.uniform(-2, 2)) for k, (amp, _) in g.edges.items()}
        g = g.with_edges(edges)
        before = [s for _, s in cycle_phase_sums(g)]
        theta = {v: rng.uniform(-3, 3) for v in g.vertices}
        after = [s for _, s in cycle_phase_sums(apply_gauge(g, theta))]
        np.testing.assert_allclose(before, after, atol=1e-12)


class TestGaugeFix:
    def test_already_trivial(self):
        g = grid_graph(2, 3)
        fixed, theta = gauge_fix(g)
        assert all(phase == 0.0 for _, phase in fixed.edges.values())
        assert all(abs(t) < 1e-12 for t in theta.values())

    def test_two_pi_flux_is_fixable(self):
        g = grid_graph(2, 2)
        edges = dict(g.edges)
        edges[(2, 3)] = (1.0, 2 * np.pi)
        fixed, _ = gauge_fix(g.with_edges(edges))
        assert all(phase == 0.0 for _, phase in fixed.edges.values())

    def test_pi_flux_rejected_with_cycle(self):
        g = grid_graph(2, 2)
        edges = dict(g.edges)
        edges[(2, 3)] = (1.0, np.pi)
        with pytest.raises(FluxError) as excinfo:
            gauge_fix(g.with_edges(edges))
        assert abs(excinfo.value.flux) == pytest.approx(np.pi, abs=1e-12)
        assert set(excinfo.value.cycle) == {0, 1, 2, 3}

    def test_tree_phases_removed_and_dynamics_unchanged(self):
        rng = np.random.default_rng(7)
        g = chain_graph([0.1, -0.3, 0.2, 0.0], [1.0, 0.7, 1.2])
        edges = {k: (amp, rng.uniform(-3, 3)) for k, (amp, _) in g.edges.items()}
        g = g.with_edges(edges)
        fixed, theta = gauge_fix(g)
        psi0 = np.zeros(4, dtype=complex)
        psi0[1] = 1.0
        times = np.linspace(0, 3, 13)
        t1, _ = evolve_unitary(graph_hamiltonian(g), psi0, times)
        t2, _ = evolve_unitary(graph_hamiltonian(fixed), psi0, times)
        np.testing.assert_allclose(t1.site_populations, t2.site_populations, atol=1e-12)

    def test_population_gauge_invariance(self):
        rng = np.random.default_rng(8)
        g = grid_graph(2, 3, coupling=1.1)
        theta = {v: rng.uniform(-3, 3) for v in g.vertices}
        gauged = apply_gauge(g, theta)
        psi0 = np.zeros(6, dtype=complex)
        psi0[2] = 1.0
        times = np.linspace(0, 2, 11)
        t1, _ = evolve_unitary(graph_hamiltonian(g), psi0, times)
        t2, _ = evolve_unitary(graph_hamiltonian(gauged), psi0, times)
        np.testing.assert_allclose(t1.site_populations, t2.site_populations, atol=1e-12)


class TestAharonovBohmInterference:
    def test_pi_flux_decouples_opposite_corner(self):
        j = 2 * np.pi * 1.5e-3  # 1.5 MHz
        g = grid_graph(2, 2, coupling=j)
        edges = dict(g.edges)
        edges[(2, 3)] = (j, np.pi)
        h = graph_hamiltonian(g.with_edges(edges))
        psi0 = np.zeros(4, dtype=complex)
        psi0[0] = 1.0
        times = np.linspace(0, 400, 401)
        trace, _ = evolve_unitary(h, psi0, times)
        assert trace.site_populations[:, 3].max() <= 1e-12

    def test_zero_flux_full_transfer(self):
        j = 2 * np.pi * 1.5e-3
        g = grid_graph(2, 2, coupling=j)
        h = graph_hamiltonian(g)
        t_pi = np.pi / (2 * j)
        psi = propagator(h, t_pi) @ np.array([1, 0, 0, 0], dtype=complex)
        assert abs(psi[3]) ** 2 == pytest.approx(1.0, abs=1e-10)


class TestDetunings:
    def test_symmetric_profile_from_detunings(self):
        j = 1.0
        g = chain_graph([0.0, 0.0, 0.0], [j, j])
        delta = onsite_from_detunings(g, {(0, 1): 2 * j, (1, 2): -2 * j}, reference=1)
        assert delta == pytest.approx({0: 2 * j, 1: 0.0, 2: 2 * j})

    def test_all_zero(self):
        g = grid_graph(2, 2)
        delta = onsite_from_detunings(
            g, {(0, 1): 0.0, (0, 2): 0.0, (1, 3): 0.0, (2, 3): 0.0}, reference=0
        )
        assert all(abs(v) < 1e-14 for v in delta.values())

    def test_inconsistent_loop_reports_residual(self):
        g = grid_graph(2, 2)
        with pytest.raises(DetuningError) as excinfo:
            onsite_from_detunings(
                g, {(0, 1): 1.0, (0, 2): 0.0, (1, 3): 0.0, (2, 3): 1.5}, reference=0
            )
        assert abs(excinfo.value.residual) == pytest.approx(0.5, abs=1e-12)


class TestLayerReduce:
    def test_path_is_identity_reduction(self):
        g = chain_graph([0.1, -0.2, 0.3], [1.0, 0.8])
        chain, partition = layer_reduce(g, 0)
        np.testing.assert_allclose(chain.onsite, [0.1, -0.2, 0.3])
        np.testing.assert_allclose(chain.couplings, [1.0, 0.8])
        assert partition.sizes == (1, 1, 1)

    def test_star_beam_splitter(self):
        j = 0.7
        g = LatticeGraph(
            (0, 1, 2, 3), {}, {(0, 1): (j, 0.0), (0, 2): (j, 0.0), (0, 3): (j, 0.0)}
        )
        chain, partition = layer_reduce(g, 0)
        assert chain.couplings == pytest.approx([np.sqrt(3) * j])
        assert partition.sizes == (1, 3)

    def test_heavy_hex_profile(self):
        g = heavy_hex_graph()
        chain, partition = layer_reduce(g, 0)
        assert g.n_vertices == 28
        assert partition.sizes == (1, 3, 3, 6, 6, 6, 3)
        assert sum(partition.sizes) == 28
        assert partition.depth == 7
        assert set(partition.inter_degree[:-1]) <= {1, 2, 3}
        assert all(d == 0 for d in partition.intra_degree)

    def test_heavy_hex_dynamics_equivalence(self):
        rng = np.random.default_rng(12)
        couplings = rng.uniform(0.5, 1.5, 6)
        onsite = rng.uniform(-1.0, 1.0, 7)
        g = heavy_hex_graph(couplings, onsite)
        chain, partition = layer_reduce(g, 0)
        h_full = graph_hamiltonian(g)
        psi0 = np.zeros(28, dtype=complex)
        psi0[0] = 1.0
        times = np.linspace(0, 6, 25)
        full, _ = evolve_unitary(h_full, psi0, times)
        reduced, _ = evolve_unitary(
            chain.matrix(), np.eye(7, dtype=complex)[:, 0], times
        )
        pos = {v: k for k, v in enumerate(g.vertices)}
        for d, layer in enumerate(partition.layers):
            summed = sum(full.site_populations[:, pos[v]] for v in layer)
            np.testing.assert_allclose(
                summed, reduced.site_populations[:, d], atol=1e-10
            )

    def test_lift_layer_state_unit_norm(self):
        g = heavy_hex_graph()
        chain, partition = layer_reduce(g, 0)
        psi = np.sqrt(np.array(partition.sizes) / 28)
        lifted = lift_layer_state(psi, partition, g)
        assert np.linalg.norm(lifted) == pytest.approx(1.0)
        np.testing.assert_allclose(np.abs(lifted), 1 / np.sqrt(28), atol=1e-14)

    def test_non_uniform_coupling_rejected(self):
        g = heavy_hex_graph()
        edges = dict(g.edges)
        edges[(0, 1)] = (1.3, 0.0)
        with pytest.raises(LayerError, match="not uniform"):
            layer_reduce(g.with_edges(edges), 0)

    def test_non_regular_graph_rejected(self):
        # extra chord makes forward degrees non-uniform in layer 1
        g = grid_graph(1, 4)
        edges = dict(g.edges)
        edges[(0, 2)] = (1.0, 0.0)
        with pytest.raises(LayerError):
            layer_reduce(g.with_edges(edges), 0)


class TestGenerators:
    def test_grid_1xm_is_path(self):
        g = grid_graph(1, 5)
        assert g.n_vertices == 5
        assert sorted(g.edges) == [(0, 1), (1, 2), (2, 3), (3, 4)]

    def test_grid_3x2_edge_count(self):
        assert len(grid_graph(3, 2).edges) == 7

    def test_heavy_hex_contains_hexagons(self):
        g = heavy_hex_graph()
        cycles = cycle_phase_sums(g)
        assert len(cycles) == 3  # three closed plaquettes in the patch
        for cycle, _ in cycles:
            assert len(cycle) == 12  # heavy-hex loops traverse 12 qubits
