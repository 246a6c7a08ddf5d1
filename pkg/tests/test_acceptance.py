"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the verdict lines.
"""

import json
import math
import time

import numpy as np

from wstate_forge.cli import run as cli_run
from wstate_forge.designer import (
    DesignProblem,
    design_chain,
    design_grid,
    design_heavy_hex,
    enumerate_solutions,
    krawtchouk_scan,
    refine_exact,
    symmetry_reduce,
)
from wstate_forge.dynamics import (
    NoiseModel,
    evolve_lindblad,
    evolve_unitary,
    phase_align,
    propagator,
    state_to_density,
    three_qubit_half_period_detunings,
    three_qubit_hamiltonian,
    three_qubit_period,
)
from wstate_forge.lattice import (
    graph_hamiltonian,
    grid_graph,
    heavy_hex_graph,
    layer_reduce,
    lift_layer_state,
)
from wstate_forge.metrics import (
    product_w_overlaps,
    robustness_mc,
    w_fidelity,
    witness_fidelity,
    witness_tailored,
)
from wstate_forge.metrics import _reduced_witness_bound
from wstate_forge.spectral import (
    TridiagonalHamiltonian,
    antisymmetric_spectral_data,
    krawtchouk_hamiltonian,
    mirror_symmetric_weights,
    reconstruct_tridiagonal,
    resonant_spectrum,
    spectral_data,
    symmetric_spectrum,
)

MHZ = 2 * np.pi * 1e-3


def verdict(number, name, checks):
    failed = [label for label, ok in checks if not ok]
    status = "PASS" if not failed else "FAIL"
    line = f"ACCEPTANCE {number}: {status} - {name}"
    if failed:
        line += f" [failed: {'; '.join(failed)}]"
    print(line)
    assert not failed, line


def aligned_infidelity(psi):
    n = len(psi)
    return 1.0 - float(np.sum(np.abs(psi))) ** 2 / n


def binomial(n, p):
    return np.array(
        [math.comb(n, m) * p**m * (1 - p) ** (n - m) for m in range(n + 1)]
    )


def test_acceptance_01_spectral_round_trip():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        m = int(rng.integers(2, 17))
        ham = TridiagonalHamiltonian(rng.normal(0, 1, m), rng.uniform(0.2, 2.0, m - 1))
        lam, w = spectral_data(ham)
        rebuilt = reconstruct_tridiagonal(lam, w)
        worst = max(
            worst,
            float(np.abs(rebuilt.onsite - ham.onsite).max()),
            float(np.abs(rebuilt.couplings - ham.couplings).max()),
        )
    elapsed = time.perf_counter() - start
    verdict(
        1,
        f"spectral round trip (worst {worst:.2e}, {elapsed:.2f} s)",
        [("error <= 1e-10", worst <= 1e-10), ("runtime < 5 s", elapsed < 5.0)],
    )


def test_acceptance_02_krawtchouk_closed_form():
    worst = 0.0
    for m in range(2, 11):
        for p in (0.1, 0.3, 0.5, 0.7, 0.9):
            lam = (np.pi / 1.0) * (np.arange(m) - (m - 1) / 2.0)
            ham = reconstruct_tridiagonal(lam, binomial(m - 1, p))
            closed = krawtchouk_hamiltonian(p, m, 1.0)
            worst = max(
                worst,
                float(np.abs(ham.onsite - closed.onsite).max()),
                float(np.abs(np.abs(ham.couplings) - np.abs(closed.couplings)).max()),
            )
    verdict(2, f"Krawtchouk closed form (worst {worst:.2e})",
            [("match <= 1e-10", worst <= 1e-10)])


def test_acceptance_03_three_qubit_solutions():
    j = 1.0
    checks = []
    for family in ("antisymmetric", "symmetric"):
        for delta in three_qubit_half_period_detunings(j, family):
            h = three_qubit_hamiltonian(j, delta, family)
            period = three_qubit_period(j, delta, family)
            psi = propagator(h, period / 2) @ np.array([0, 1, 0], dtype=complex)
            checks.append(
                (f"{family} delta={delta:.4f} 1-F<1e-12", aligned_infidelity(psi) < 1e-12)
            )
    ds = three_qubit_half_period_detunings(j, "symmetric")[0]
    da = max(three_qubit_half_period_detunings(j, "antisymmetric"))
    ratio = three_qubit_period(j, ds, "symmetric") / three_qubit_period(j, da, "antisymmetric")
    checks.append(("period ratio 0.888 +- 0.001", abs(ratio - 0.888) <= 1e-3))
    verdict(3, f"three-qubit exact solutions (ratio {ratio:.5f})", checks)


PRINTED_FIVE_QUBIT = {
    "antisymmetric": np.array([0.137471, 0.027229, 0.027229, 0.137471]),
    "symmetric": np.array([0.705411, 0.935872]),
    "resonant": np.array([0.248504, 0.589178]),
}


def _five_qubit_hamiltonian(family, params):
    if family == "antisymmetric":
        lam, w = antisymmetric_spectral_data(params, 1.0, 5)
        return reconstruct_tridiagonal(lam, w)
    if family == "symmetric":
        lam = symmetric_spectrum(params, 1.0, 5)
    else:
        lam = resonant_spectrum(params[:-1], params[-1], 1.0, 5)
    return reconstruct_tridiagonal(lam, mirror_symmetric_weights(lam))


def test_acceptance_04_five_qubit_paper_parameters():
    # The spec expects the three printed parameter sets to be exact to
    # better than 1e-9 in infidelity and to be reproduced within 1e-4.
    # Direct computation shows the paper prints the symmetric and resonant
    # values only to about 1e-3 of the true solutions of its own
    # construction, so those sub-checks fail; see the decisions ledger.
    checks = []
    for family, printed in PRINTED_FIVE_QUBIT.items():
        ham = _five_qubit_hamiltonian(family, printed)
        psi = propagator(ham.matrix(), 1.0)[:, 2]
        infid = aligned_infidelity(psi)
        checks.append((f"{family} printed 1-F<1e-9 (got {infid:.1e})", infid < 1e-9))
        problem = DesignProblem(size=5, tau=1.0, family=family, reduce_symmetry=False)
        start = symmetry_reduce(printed, 5) if family == "antisymmetric" else printed
        if family == "antisymmetric":
            problem = DesignProblem(size=5, tau=1.0, family=family)
        record = refine_exact(problem, start)
        refined = (
            np.asarray(record.params["p"])
            if family == "antisymmetric"
            else np.asarray(record.params["gamma"] + ([record.params["d"]] if "d" in record.params else []))
        )
        full_printed = printed
        distance = float(np.abs(refined - full_printed).max())
        checks.append(
            (f"{family} refined<1e-9", record.converged and record.residual_infidelity < 1e-9)
        )
        checks.append(
            (f"{family} params within 1e-4 (got {distance:.1e})", distance <= 1e-4)
        )
    verdict(4, "five-qubit paper parameters", checks)


def test_acceptance_05_designer_regression():
    problem = DesignProblem(size=7, tau=1.0)
    optima = krawtchouk_scan(problem, resolution=1e-3)
    best_fidelity = 1.0 - min(v for _, v in optima)
    checks = [
        ("six scan optima", len(optima) == 6),
        (f"best scan fidelity in [0.94, 0.95] (got {best_fidelity:.4f})",
         0.94 <= best_fidelity <= 0.95),
    ]
    solutions = enumerate_solutions(problem, seed=7, restarts=200, max_solutions=12)
    checks.append((f"twelve exact solutions (got {len(solutions)})", len(solutions) == 12))
    checks.append(("all converged", all(s.residual_infidelity < 1e-9 for s in solutions)))

    def canonical(p):
        reduced = symmetry_reduce(np.asarray(p), 7)
        mirror = 1 - reduced
        return tuple(np.round(min(tuple(reduced), tuple(mirror)), 7))

    kraw = set()
    for p_tilde, _ in optima:
        rec = refine_exact(problem, np.full(3, p_tilde))
        if rec.converged:
            kraw.add(canonical(rec.params["p"]))
    found = {canonical(s.params["p"]) for s in solutions}
    checks.append((f"six Krawtchouk-reachable (got {len(kraw & found)})",
                   len(kraw & found) == 6))

    selected = design_chain(7, 264.0, seed=7, restarts=200)
    amps = np.abs(selected.hamiltonian.couplings) / MHZ
    checks.append(
        (f"couplings in [1.1, 1.5] MHz (got [{amps.min():.3f}, {amps.max():.3f}])",
         bool(np.all((amps >= 1.1) & (amps <= 1.5))))
    )
    verdict(5, "designer regression for seven sites", checks)


def test_acceptance_06_two_d_composition():
    grid = design_grid(2, 3, 99.0)
    row_mhz = grid.row_record.j_max / MHZ
    col_mhz = grid.col_record.j_max / MHZ
    checks = [
        (f"3x2 infidelity < 1e-9 (got {grid.residual_infidelity:.1e})",
         grid.residual_infidelity < 1e-9),
        (f"row coupling 1.46 MHz +-2% (got {row_mhz:.4f})",
         abs(row_mhz - 1.46) <= 0.02 * 1.46 + 1e-12),
        (f"column coupling 1.26 MHz +-2% (got {col_mhz:.4f})",
         abs(col_mhz - 1.26) <= 0.02 * 1.26 + 1e-12),
    ]
    j_ref = 2.2 * MHZ
    tau_grid = grid.jmax_tau / j_ref
    chain6 = design_chain(6, 1.0, seed=5, restarts=96)
    tau_chain = chain6.jmax_tau / j_ref
    checks.append(
        (f"tau(3x2)={tau_grid:.1f} ns < tau(1D,6)={tau_chain:.1f} ns", tau_grid < tau_chain)
    )
    verdict(6, "2D Kronecker-sum composition", checks)


def test_acceptance_07_aharonov_bohm():
    j = 1.5 * MHZ
    g = grid_graph(2, 2, coupling=j)
    edges = dict(g.edges)
    edges[(2, 3)] = (j, np.pi)
    h_pi = graph_hamiltonian(g.with_edges(edges))
    psi0 = np.zeros(4, dtype=complex)
    psi0[0] = 1.0
    t_pi = np.pi / (2 * j)
    times = np.linspace(0.0, 2.5 * t_pi, 1201)
    trace_pi, _ = evolve_unitary(h_pi, psi0, times)
    leak = float(trace_pi.site_populations[:, 3].max())

    h_0 = graph_hamiltonian(g)
    psi_transfer = propagator(h_0, t_pi) @ psi0
    transfer = abs(psi_transfer[3]) ** 2
    t_w = t_pi / 2
    psi_w = propagator(h_0, t_w) @ psi0
    infid = aligned_infidelity(psi_w)
    verdict(
        7,
        f"Aharonov-Bohm loop control (transfer at {t_pi:.2f} ns, W4 at {t_w:.2f} ns)",
        [
            (f"pi flux leak {leak:.1e} <= 1e-12", leak <= 1e-12),
            ("transfer time 167 +- 0.5 ns", abs(t_pi - 167.0) <= 0.5),
            (f"full transfer (1-P={1-transfer:.1e})", 1 - transfer <= 1e-10),
            ("W4 time 83.5 +- 0.5 ns", abs(t_w - 83.5) <= 0.5),
            (f"W4 infidelity {infid:.1e} < 1e-9", infid < 1e-9),
        ],
    )


def test_acceptance_08_heavy_hex():
    rng = np.random.default_rng(88)
    g_random = heavy_hex_graph(rng.uniform(0.5, 1.5, 6), rng.uniform(-1, 1, 7))
    chain, partition = layer_reduce(g_random, 0)
    h_full = graph_hamiltonian(g_random)
    psi0 = np.zeros(28, dtype=complex)
    psi0[0] = 1.0
    times = np.linspace(0, 5, 41)
    full, _ = evolve_unitary(h_full, psi0, times)
    reduced, _ = evolve_unitary(chain.matrix(), np.eye(7, dtype=complex)[:, 0], times)
    pos = {v: k for k, v in enumerate(g_random.vertices)}
    gap = 0.0
    for d, layer in enumerate(partition.layers):
        summed = sum(full.site_populations[:, pos[v]] for v in layer)
        gap = max(gap, float(np.abs(summed - reduced.site_populations[:, d]).max()))

    graph, record, partition2 = design_heavy_hex(1.0, seed=0, restarts=64)
    h_design = graph_hamiltonian(graph)
    psi_tau = propagator(h_design, 1.0) @ psi0
    sizes = np.array(partition2.sizes)
    pos2 = {v: k for k, v in enumerate(graph.vertices)}
    layer_pop = np.array(
        [sum(abs(psi_tau[pos2[v]]) ** 2 for v in layer) for layer in partition2.layers]
    )
    pop_err = float(np.abs(layer_pop - sizes / 28).max())
    infid = aligned_infidelity(psi_tau)
    target = lift_layer_state(np.sqrt(sizes / 28), partition2, graph)
    verdict(
        8,
        "heavy-hex reduction and 28-qubit design",
        [
            (f"reduction equivalence {gap:.1e} <= 1e-10", gap <= 1e-10),
            ("designed chain converged", record.converged),
            (f"layer populations K_d/N within 1e-8 (got {pop_err:.1e})", pop_err <= 1e-8),
            (f"lifted W28 infidelity {infid:.1e} < 1e-9", infid < 1e-9),
            ("lifted basis is uniform", np.allclose(np.abs(target), 1 / np.sqrt(28))),
        ],
    )


def test_acceptance_09_lindblad():
    lam, w = antisymmetric_spectral_data(
        [0.1374712, 0.02722928, 0.02722928, 0.1374712], 1.0, 5
    )
    ham = reconstruct_tridiagonal(lam, w)
    psi0 = np.zeros(5, dtype=complex)
    psi0[2] = 1.0
    rho0 = state_to_density(psi0, 5)
    times = np.linspace(0.0, 10.0, 41)

    zero_noise = NoiseModel.uniform(5, np.inf, np.inf)
    open_trace, _ = evolve_lindblad(ham.matrix(), zero_noise, rho0, times)
    closed_trace, _ = evolve_unitary(ham.matrix(), psi0, times)
    closed_gap = float(
        np.abs(open_trace.site_populations - closed_trace.site_populations).max()
    )

    noise = NoiseModel.uniform(5, 30.0, 20.0)
    noisy_trace, rhos = evolve_lindblad(ham.matrix(), noise, rho0, times)
    trace_err = float(np.abs(noisy_trace.total() - 1.0).max())
    herm_err = float(max(np.abs(r - r.conj().T).max() for r in rhos))
    min_eig = float(min(np.linalg.eigvalsh(r).min() for r in rhos))

    g = NoiseModel(np.full(3, np.inf), np.array([40.0, 80.0, 120.0]))
    rates = g.dephasing_rates
    psi_u = np.full(3, 1 / np.sqrt(3), dtype=complex)
    _, deph_rhos = evolve_lindblad(
        np.zeros((3, 3)), g, state_to_density(psi_u, 3), np.array([0.0, 11.0])
    )
    deph_err = 0.0
    for i in range(3):
        for jdx in range(3):
            expected = (1 / 3) * (
                np.exp(-(rates[i] + rates[jdx]) * 11.0 / 2) if i != jdx else 1.0
            )
            deph_err = max(deph_err, abs(deph_rhos[-1][i, jdx] - expected))
    verdict(
        9,
        "Lindblad evolution",
        [
            (f"zero noise matches unitary ({closed_gap:.1e})", closed_gap <= 1e-8),
            (f"trace preserved ({trace_err:.1e})", trace_err <= 1e-8),
            (f"hermiticity ({herm_err:.1e})", herm_err <= 1e-8),
            (f"positivity (min eig {min_eig:.1e})", min_eig >= -1e-8),
            (f"dephasing analytic ({deph_err:.1e})", deph_err <= 1e-6),
        ],
    )


def test_acceptance_10_robustness():
    start = time.perf_counter()
    exact = {}
    for family, printed in PRINTED_FIVE_QUBIT.items():
        problem = DesignProblem(
            size=5, tau=1.0, family=family,
            reduce_symmetry=family == "antisymmetric" or None,
        )
        start_params = (
            symmetry_reduce(printed, 5) if family == "antisymmetric" else printed
        )
        exact[family] = refine_exact(problem, start_params)
        assert exact[family].converged
    d_gap, f_res_gap, f_sym_gap = [], [], []
    for seed in range(10):
        reports = {
            family: robustness_mc(rec.hamiltonian, 1.0, 0.08, 450, seed)
            for family, rec in exact.items()
        }
        d_gap.append(
            reports["antisymmetric"].mean_delocalization
            - reports["resonant"].mean_delocalization
        )
        f_res_gap.append(
            reports["antisymmetric"].fidelity_shot - reports["resonant"].fidelity_shot
        )
        f_sym_gap.append(
            reports["antisymmetric"].fidelity_shot - reports["symmetric"].fidelity_shot
        )
    elapsed = time.perf_counter() - start

    def separation(values):
        arr = np.asarray(values)
        return arr.mean() / arr.std(ddof=1)

    verdict(
        10,
        f"robustness Monte-Carlo ({elapsed:.1f} s)",
        [
            ("D(anti) > D(res) every seed", all(v > 0 for v in d_gap)),
            (f"D separation {separation(d_gap):.1f} sigma >= 3", separation(d_gap) >= 3),
            ("F(anti) highest every seed",
             all(v > 0 for v in f_res_gap) and all(v > 0 for v in f_sym_gap)),
            (f"F separation vs res {separation(f_res_gap):.1f} sigma >= 3",
             separation(f_res_gap) >= 3),
            (f"F separation vs sym {separation(f_sym_gap):.1f} sigma >= 3",
             separation(f_sym_gap) >= 3),
            (f"runtime {elapsed:.1f} s < 60 s", elapsed < 60.0),
        ],
    )


def test_acceptance_11_witnesses():
    checks = []
    for n in (4, 6, 7):
        w = np.full(n, 1 / np.sqrt(n), dtype=complex)
        res = witness_fidelity(np.outer(w, w.conj()), n)
        checks.append(
            (f"W_F on W{n} = -1/{n}", abs(res.expectation + 1 / n) <= 1e-14)
        )

    rng = np.random.default_rng(1234)
    for n in (4, 6, 7):
        beta = 0.15
        gamma = _reduced_witness_bound(beta, n, restarts=24, seed=3)
        worst_f = np.inf
        worst_t = np.inf
        for _ in range(10_000):
            k = int(rng.integers(1, n // 2 + 1))
            subset = tuple(sorted(rng.choice(n, size=k, replace=False)))
            a = rng.normal(size=2**k) + 1j * rng.normal(size=2**k)
            b = rng.normal(size=2 ** (n - k)) + 1j * rng.normal(size=2 ** (n - k))
            a /= np.linalg.norm(a)
            b /= np.linalg.norm(b)
            w_ov, wm_ov = product_w_overlaps(a, b, subset, n)
            fid = abs(w_ov) ** 2
            worst_f = min(worst_f, (n - 1) / n - fid)
            worst_t = min(worst_t, gamma - fid + beta * float(np.sum(np.abs(wm_ov) ** 2)))
        checks.append((f"W_F valid at N={n} (worst {worst_f:.1e})", worst_f >= -1e-9))
        checks.append((f"W_T valid at N={n} (worst {worst_t:.1e})", worst_t >= -1e-9))

    record = design_chain(7, 264.0, seed=7, restarts=48)
    ham = record.hamiltonian
    psi0 = np.zeros(7, dtype=complex)
    psi0[3] = 1.0
    reference = propagator(ham.matrix(), 264.0) @ psi0
    _, phases = phase_align(reference)
    correction = np.diag(np.exp(1j * np.concatenate([phases, [0.0]])))
    noise = NoiseModel.uniform(7, 1500.0, 3000.0)
    _, rhos = evolve_lindblad(
        ham.matrix(), noise, state_to_density(psi0, 7), [0.0, 264.0]
    )
    rho = correction @ rhos[-1] @ correction.conj().T
    fid = w_fidelity(rho, 7)
    res_f = witness_fidelity(rho, 7)
    res_t = witness_tailored(rho, 7, restarts=16, seed=5)
    checks.append((f"decohered F={fid:.4f} < 6/7", fid < 6 / 7))
    checks.append((f"W_F fails ({res_f.expectation:+.4f})", res_f.expectation >= 0))
    checks.append(
        (f"W_T certifies ({res_t.expectation:+.5f} at beta={res_t.beta:.3f})",
         res_t.expectation < 0)
    )
    verdict(11, "entanglement witnesses", checks)


def test_acceptance_12_scaling(tmp_path):
    # The spec asserts the emitted single-step times are monotone in size.
    # The designer's optimal costs genuinely dip from even to the next odd
    # size (matched travel distance; the dips reproduce the published
    # five-qubit design), so that sub-check fails; see the decisions
    # ledger.  The circuit-depth tables are monotone as stated.
    out = tmp_path / "scaling.json"
    code = cli_run(
        ["scaling", "--chain-max", "9", "--jmax-mhz", "2.2", "--grid-max", "7",
         "--seed", "3", "--restarts", "96", "--out", str(out)]
    )
    payload = json.loads(out.read_text())
    chains = payload["chains"]
    layers = {row["size"]: row["circuit_layers"] for row in chains}
    taus = [row["single_step_tau_ns"] for row in chains]
    circuit = [row["circuit_time_ns"] for row in chains]
    grid7 = [g for g in payload["grids"] if g["side"] == 7][0]
    checks = [
        ("command succeeded", code == 0),
        ("chain layers = ceil(N/2)",
         all(layers[n] == -(-n // 2) for n in range(2, 10))),
        ("N=7 -> 4 layers", layers[7] == 4),
        ("7x7 bound = 6", grid7["t_min"] == 6),
        ("circuit table monotone",
         all(b >= a for a, b in zip(circuit, circuit[1:]))),
        (
            "single-step tau monotone in size (got "
            + ", ".join(f"{t:.1f}" for t in taus) + ")",
            all(b >= a - 1e-12 for a, b in zip(taus, taus[1:])),
        ),
    ]
    verdict(12, "circuit-depth scaling", checks)
