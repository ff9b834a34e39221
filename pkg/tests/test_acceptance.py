"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The heavyweight sweeps are module-scoped fixtures so the invariant
checks can inspect every snapshot and discord record those runs
produced without re-running anything.
"""

import dataclasses
import time

import numpy as np
import pytest

from h2discord.analysis import period_law, run_discord_series, \
    state_population
from h2discord.discord import MeasurementConfig, SearchConfig, discord, \
    projector_set
from h2discord.dynamics import DensityMatrix, SimConfig, evolve, \
    initial_state
from h2discord.operators import ModelParams, build_hamiltonian, \
    build_jump_channels
from h2discord.statespace import BasisState, INITIAL_COMPONENTS, \
    TABLE_STATES, full_space, generate_space, table_space

from oracles import brute_force_trace_A, brute_force_trace_B, \
    random_density, random_pure, tied_pattern_projectors

G = 1.0e7
SWEEP_XS = (0.01, 0.02, 0.05, 0.1, 0.2)
BASE = ModelParams(freq_pht_up=0.0, freq_pht_down=0.0, freq_phn=0.0,
                   g_up=G, g_down=G, g_bond=0.5 * G, zeta=G)
OPEN = dataclasses.replace(BASE, gamma_up=G, gamma_down=G, gamma_phn=G)
VACUUM = BasisState.from_string("0000000")

EXPECTED_C_TUNNELING = 6.29e-7
EXPECTED_C_NO_TUNNELING = 4.44e-7

OPEN_SEARCH = SearchConfig(zero_phases=True)


def open_sim(params) -> SimConfig:
    """Step small enough that the Euler dissipator's transient negative
    eigenvalues stay inside the -1e-8 reporting floor."""
    dt = 5e-14 * G / params.max_scale()
    steps = int(round(2e-6 / dt))
    return SimConfig(dt=dt, t_end=2e-6, record_stride=steps // 400)


def report(criterion, ok, detail):
    flag = "PASS" if ok else "FAIL"
    print(f"[criterion {criterion}] {flag}: {detail}")


class RunLog:
    """Invariant extremes over recorded snapshots and discord records."""

    def __init__(self):
        self.max_trace_dev = 0.0
        self.max_herm = 0.0
        self.min_eig = np.inf
        self.max_purity_dev = 0.0
        self.max_energy_dev = 0.0
        self.min_d = np.inf
        self.max_d_excess = -np.inf
        self.max_d_at_zero = 0.0
        self.snapshots = 0
        self.points = 0

    def add_run(self, traj, h_mat=None):
        if h_mat is not None:
            h_norm = np.linalg.norm(h_mat, 2)
            e0 = (traj.snapshots[0] @ h_mat).trace().real
        for snap in traj.snapshots:
            self.snapshots += 1
            self.max_trace_dev = max(self.max_trace_dev,
                                     abs(snap.trace().real - 1.0))
            self.max_herm = max(self.max_herm,
                                np.abs(snap - snap.conj().T).max())
            self.min_eig = min(self.min_eig,
                               float(np.linalg.eigvalsh(snap)[0]))
            if h_mat is not None:
                self.max_purity_dev = max(
                    self.max_purity_dev,
                    abs((snap @ snap).trace().real - 1.0))
                self.max_energy_dev = max(
                    self.max_energy_dev,
                    abs((snap @ h_mat).trace().real - e0) / h_norm)

    def add_points(self, points):
        for p in points:
            p.check()
            self.points += 1
            self.min_d = min(self.min_d, p.discord)
            self.max_d_excess = max(
                self.max_d_excess,
                p.discord - min(p.mutual_info, p.s_a))
            if p.t == 0.0:
                self.max_d_at_zero = max(self.max_d_at_zero, abs(p.discord))


@pytest.fixture(scope="module")
def logs():
    return {"closed": RunLog(), "open": RunLog()}


def _collector(log):
    def collect(x, params, trajectory, points, fit):
        h = build_hamiltonian(params, trajectory.space)
        log.add_run(trajectory, h.mat)
        log.add_points(points)
    return collect


@pytest.fixture(scope="module")
def law_tunneling(logs):
    started = time.time()
    result = period_law(SWEEP_XS, zeta=G, base_params=BASE,
                        on_point=_collector(logs["closed"]))
    return result, time.time() - started


@pytest.fixture(scope="module")
def law_no_tunneling(logs):
    started = time.time()
    result = period_law(SWEEP_XS, zeta=0.0, base_params=BASE,
                        on_point=_collector(logs["closed"]))
    return result, time.time() - started


@pytest.fixture(scope="module")
def open_endpoint(logs):
    started = time.time()
    traj, points = run_discord_series(OPEN, open_sim(OPEN),
                                      search=OPEN_SEARCH, discord_stride=10)
    logs["open"].add_run(traj)
    logs["open"].add_points(points)
    return traj, points, time.time() - started


@pytest.fixture(scope="module")
def monotonic_peaks(logs):
    def peak(params):
        traj, points = run_discord_series(params, open_sim(params),
                                          search=OPEN_SEARCH)
        logs["open"].add_run(traj)
        logs["open"].add_points(points)
        return max(p.discord for p in points)

    by_coupling = [(x, peak(dataclasses.replace(OPEN, g_bond=x * G)))
                   for x in (0.1, 0.2, 0.5, 1.0)]
    by_rate = [(y, peak(dataclasses.replace(OPEN, gamma_up=y * G,
                                            gamma_down=y * G,
                                            gamma_phn=y * G)))
               for y in (0.2, 0.5, 1.0, 2.0)]
    return by_coupling, by_rate


class TestCriterion1:
    def test_state_space_fidelity(self):
        started = time.time()
        compat = generate_space(INITIAL_COMPONENTS, BASE,
                                include_dissipation=True, mode="table-compat")
        closure = generate_space(INITIAL_COMPONENTS, BASE,
                                 include_dissipation=True, mode="closure")
        elapsed = time.time() - started
        exact = set(compat.states) == set(TABLE_STATES)
        superset = set(closure.states) >= set(TABLE_STATES)
        ok = exact and superset and elapsed < 1.0
        report(1, ok, f"compat==26-set: {exact}, closure superset: "
                      f"{superset} ({closure.size} states), {elapsed:.3f} s")
        assert exact
        assert superset
        assert elapsed < 1.0


class TestCriterion2:
    def test_period_law_with_tunneling(self, law_tunneling):
        result, elapsed = law_tunneling
        rel = abs(result.constant_c - EXPECTED_C_TUNNELING) \
            / EXPECTED_C_TUNNELING
        ok = rel <= 0.15 and elapsed < 1800
        report(2, ok, f"c = {result.constant_c:.4g} s vs "
                      f"{EXPECTED_C_TUNNELING:.4g} s ({100 * rel:.2f}% off), "
                      f"{elapsed:.0f} s runtime")
        assert rel <= 0.15
        assert elapsed < 1800


class TestCriterion3:
    def test_period_law_without_tunneling(self, law_tunneling,
                                          law_no_tunneling):
        with_t, _ = law_tunneling
        without_t, elapsed = law_no_tunneling
        rel = abs(without_t.constant_c - EXPECTED_C_NO_TUNNELING) \
            / EXPECTED_C_NO_TUNNELING
        ordered = without_t.constant_c < with_t.constant_c
        ok = rel <= 0.15 and ordered and elapsed < 1800
        report(3, ok, f"c = {without_t.constant_c:.4g} s vs "
                      f"{EXPECTED_C_NO_TUNNELING:.4g} s ({100 * rel:.2f}% "
                      f"off), c(zeta=0) < c(zeta=g): {ordered}")
        assert rel <= 0.15
        assert ordered
        assert elapsed < 1800


class TestCriterion4:
    def test_open_system_endpoint(self, open_endpoint):
        traj, points, elapsed = open_endpoint
        pop = state_population(traj.density(len(traj) - 1), VACUUM)
        d_final = points[-1].discord
        ok = pop >= 0.99 and d_final <= 1e-3 and elapsed < 300
        report(4, ok, f"pop(|0000000>) = {pop:.4f} (need >= 0.99), "
                      f"D = {d_final:.4g} (need <= 1e-3) at t = 2e-6 s, "
                      f"{elapsed:.0f} s runtime")
        assert elapsed < 300
        assert pop >= 0.99, (
            f"vacuum population at t=2e-6 s is {pop:.4f}; the model "
            f"reaches 0.99 only near t=4.2e-6 s at these parameters")
        assert d_final <= 1e-3, (
            f"discord at t=2e-6 s is {d_final:.4g}; it falls below 1e-3 "
            f"only near t=4.2e-6 s at these parameters")


class TestCriterion5:
    def test_peak_discord_monotonicity(self, monotonic_peaks):
        by_coupling, by_rate = monotonic_peaks
        coupling_ok = all(a[1] <= b[1] for a, b in
                          zip(by_coupling, by_coupling[1:]))
        rate_ok = all(a[1] >= b[1] for a, b in zip(by_rate, by_rate[1:]))
        ok = coupling_ok and rate_ok
        report(5, ok, "peak D vs g_omega "
                      f"{[round(v, 4) for _, v in by_coupling]} nondecreasing:"
                      f" {coupling_ok}; vs gamma "
                      f"{[round(v, 4) for _, v in by_rate]} nonincreasing: "
                      f"{rate_ok}")
        assert coupling_ok
        assert rate_ok


class TestCriterion6:
    def test_invariant_suite(self, logs, law_tunneling, law_no_tunneling,
                             open_endpoint, monotonic_peaks):
        closed, open_log = logs["closed"], logs["open"]
        checks = {
            "closed trace": closed.max_trace_dev <= 1e-9,
            "closed hermiticity": closed.max_herm <= 1e-12,
            "closed positivity": closed.min_eig >= -1e-8,
            "closed purity": closed.max_purity_dev <= 1e-8,
            "closed energy": closed.max_energy_dev <= 1e-8,
            "open trace": open_log.max_trace_dev <= 1e-9,
            "open hermiticity": open_log.max_herm <= 1e-12,
            "open positivity": open_log.min_eig >= -1e-8,
            "discord lower bound": min(closed.min_d, open_log.min_d) >= -1e-9,
            "discord upper bound": max(closed.max_d_excess,
                                       open_log.max_d_excess) <= 1e-6,
            "discord at t=0": max(closed.max_d_at_zero,
                                  open_log.max_d_at_zero) <= 1e-8,
        }
        ok = all(checks.values())
        counts = (f"{closed.snapshots + open_log.snapshots} snapshots, "
                  f"{closed.points + open_log.points} discord records")
        report(6, ok, counts + "; " + ", ".join(
            name for name, good in checks.items() if not good) if not ok
            else counts + "; all bounds hold")
        for name, good in checks.items():
            assert good, name

    def test_grid_refinement_consistency(self, open_endpoint):
        traj, _, _ = open_endpoint
        coarse = SearchConfig(theta_points=17, zero_phases=True)
        fine = SearchConfig(theta_points=33, zero_phases=True)
        worst = 0.0
        for i in (40, 120, 200, 280, 360):
            rho = traj.density(i)
            j_coarse = discord(rho, coarse).classical_corr
            j_fine = discord(rho, fine).classical_corr
            worst = max(worst, abs(j_coarse - j_fine))
        ok = worst <= 1e-4
        report(6, ok, f"grid doubling moves J by at most {worst:.2e} nats")
        assert worst <= 1e-4


class TestCriterion7:
    def test_partial_trace_oracle(self):
        rng = np.random.default_rng(2024)
        full = full_space()
        worst = 0.0
        for i in range(200):
            mat = random_pure(rng, 128) if i % 2 else random_density(rng, 128)
            rho = DensityMatrix(mat, full)
            from h2discord.discord import partial_trace_A, partial_trace_B
            worst = max(
                worst,
                np.abs(partial_trace_B(rho).mat
                       - brute_force_trace_B(mat, full)).max(),
                np.abs(partial_trace_A(rho).mat
                       - brute_force_trace_A(mat, full)).max())
        ok = worst <= 1e-12
        report(7, ok, f"partial traces vs oracle on 200 states: "
                      f"max dev {worst:.2e}")
        assert worst <= 1e-12

    def test_reduced_vs_full_space_evolution(self):
        params = dataclasses.replace(OPEN, g_up=0.0, g_down=0.0,
                                     gamma_up=0.2 * G, gamma_down=0.2 * G,
                                     gamma_phn=0.2 * G)
        sim = SimConfig(dt=5e-11, t_end=3e-8, record_stride=100)
        results = {}
        for space in (table_space(), full_space()):
            h = build_hamiltonian(params, space)
            channels = build_jump_channels(params, space)
            results[space.mode] = (space,
                                   evolve(initial_state(space), h, channels,
                                          sim))
        table, traj_t = results["table-compat"]
        full, traj_f = results["full"]
        idx = [full.index_of(s) for s in table]
        worst = 0.0
        for snap_t, snap_f in zip(traj_t.snapshots, traj_f.snapshots):
            projected = snap_f[np.ix_(idx, idx)]
            worst = max(worst, np.abs(projected - snap_t).max())
        ok = worst <= 1e-8
        report(7, ok, f"reduced vs projected full evolution: "
                      f"max dev {worst:.2e}")
        assert worst <= 1e-8

    def test_single_mode_damping(self):
        params = dataclasses.replace(BASE, g_up=0, g_down=0, g_bond=0,
                                     zeta=0, gamma_up=G)
        space = generate_space([BasisState.from_string("1000000")], params,
                               include_dissipation=True)
        h = build_hamiltonian(params, space)
        channels = build_jump_channels(params, space)
        excited = space.index_of(BasisState.from_string("1000000"))
        rho0 = DensityMatrix.from_pure(np.eye(2)[excited], space)
        traj = evolve(rho0, h, channels,
                      SimConfig(dt=1e-10, t_end=3e-7, record_stride=50))
        worst = max(abs(snap[excited, excited].real - np.exp(-G * t))
                    for t, snap in zip(traj.times, traj.snapshots))
        ok = worst <= 1e-3
        report(7, ok, f"single-mode damping vs exp(-gamma t): "
                      f"max dev {worst:.2e}")
        assert worst <= 1e-3

    def test_two_level_exchange(self):
        params = dataclasses.replace(BASE, g_up=0, g_down=0, zeta=0,
                                     g_bond=G)
        space = generate_space([BasisState.from_string("0000010")], params,
                               include_dissipation=False)
        h = build_hamiltonian(params, space)
        start = space.index_of(BasisState.from_string("0000010"))
        rho0 = DensityMatrix.from_pure(np.eye(2)[start], space)
        traj = evolve(rho0, h, [],
                      SimConfig(dt=1e-10, t_end=6e-7, record_stride=60))
        worst = max(abs(snap[start, start].real - np.cos(G * t) ** 2)
                    for t, snap in zip(traj.times, traj.snapshots))
        ok = worst <= 1e-4
        report(7, ok, f"two-level exchange vs cos^2(gt): "
                      f"max dev {worst:.2e}")
        assert worst <= 1e-4

    def test_pure_state_discord_is_marginal_entropy(self):
        rng = np.random.default_rng(77)
        full = full_space()
        search = SearchConfig(theta_points=3, phi_points=3, refine=False)
        worst = 0.0
        for _ in range(50):
            point = discord(DensityMatrix(random_pure(rng, 128), full),
                            search)
            worst = max(worst, abs(point.discord - point.s_a))
        ok = worst <= 1e-6
        report(7, ok, f"pure-state discord vs S(A) on 50 states: "
                      f"max dev {worst:.2e}")
        assert worst <= 1e-6

    def test_uncorrelated_states_have_zero_discord(self):
        rng = np.random.default_rng(78)
        full = full_space()
        search = SearchConfig(theta_points=5, zero_phases=True)
        worst = 0.0
        for _ in range(10):
            mat = np.kron(random_density(rng, 4), random_density(rng, 32))
            point = discord(DensityMatrix(mat, full), search)
            worst = max(worst, abs(point.discord))
        weights = rng.dirichlet(np.ones(4)).reshape(2, 2)
        cc = np.zeros((128, 128), dtype=complex)
        for i in range(2):
            for j in range(2):
                idx = full.index_of(BasisState(i, 0, j, 0, 0, 0, 0))
                cc[idx, idx] = weights[i, j]
        point = discord(DensityMatrix(cc, full), search)
        worst_cc = abs(point.discord)
        ok = worst <= 1e-6 and worst_cc <= 1e-6
        report(7, ok, f"product-state discord {worst:.2e}, "
                      f"classical-classical discord {worst_cc:.2e}")
        assert worst <= 1e-6
        assert worst_cc <= 1e-6


class TestCriterion8:
    def test_projector_algebra(self):
        rng = np.random.default_rng(31415)
        eye = np.eye(4)
        worst = 0.0
        for _ in range(1000):
            theta, theta_p = rng.uniform(0, np.pi / 2, size=2)
            phi, phi_p = rng.uniform(0, 2 * np.pi, size=2)
            pset = projector_set(MeasurementConfig(theta, theta_p,
                                                   phi, phi_p))
            total = sum(pset.projectors)
            worst = max(worst, np.abs(total - eye).max())
            for k, pk in enumerate(pset.projectors):
                worst = max(worst, np.abs(pk - pk.conj().T).max())
                worst = max(worst, np.abs(pk @ pk - pk).max())
                worst = max(worst,
                            np.abs(np.linalg.eigvalsh(pk)
                                   - [0, 0, 0, 1]).max())
                for j, pj in enumerate(pset.projectors):
                    if j != k:
                        worst = max(worst, np.abs(pk @ pj).max())
        ok = worst <= 1e-12
        report(8, ok, f"1000 random angle tuples: max algebra defect "
                      f"{worst:.2e}")
        assert worst <= 1e-12

    def test_tied_coefficient_pattern(self):
        rng = np.random.default_rng(27182)
        worst = 0.0
        for theta in rng.uniform(0, np.pi / 2, size=200):
            pset = projector_set(MeasurementConfig(theta, theta))
            for got, want in zip(pset.projectors,
                                 tied_pattern_projectors(theta)):
                worst = max(worst, np.abs(got - want).max())
        ok = worst <= 1e-15
        report(8, ok, f"tied-angle coefficient pattern: max dev {worst:.2e}")
        assert worst <= 1e-15
