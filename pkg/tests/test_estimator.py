import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwcouple.assembly import DofLayout, ProblemData
from dwcouple.bem import BoundaryMesh, assemble
from dwcouple.estimator import (AdaptiveOptions, adaptive_loop, dist_surrogate, estimate,
                                jump_terms, lp_norm, mark, sigma_difference, solve_level,
                                transfer_state, volume_terms)
from dwcouple.mesh import Mesh, generate_initial_mesh, refine_uniform
from dwcouple.solver import SolveOptions
from conftest import WELLS, Setup, benchmark_mesh
from oracles import dipole, dorfler_bruteforce

BENCH = ProblemData(f=0.2)


@pytest.fixture(scope="module")
def bench_uniform():
    return adaptive_loop(benchmark_mesh(0.25), WELLS, BENCH, options=AdaptiveOptions(mode="uniform", max_levels=3))


def test_zero_case():
    s = Setup(benchmark_mesh(0.25))
    res = solve_level(s.mesh, WELLS, s.data, SolveOptions())
    r = res.report
    assert r.total == 0.0
    assert not r.local_indicators().any()
    assert mark(r, 0.5).size == 0


def test_volume_term_hand_computation():
    mesh = generate_initial_mesh("unit_square", h0=0.5)
    vol = volume_terms(mesh, lambda x, y: np.ones_like(x))
    for k, tri in enumerate(mesh.triangles):
        p = mesh.vertices[tri]
        h = max(np.linalg.norm(p[i] - p[j]) for i in range(3) for j in range(i))
        e1, e2 = p[1] - p[0], p[2] - p[0]
        area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
        assert vol[k] == pytest.approx(h * area ** 0.75, rel=1e-13)


def test_manufactured_jump():
    mesh = Mesh.from_arrays([[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 1, 2], [1, 3, 2]])
    sigma = np.array([[1.0, 2.0], [3.0, -1.0]])
    jump, tris = jump_terms(mesh, sigma)
    interior = tris[:, 1] >= 0
    assert interior.sum() == 1
    assert jump[interior][0] == pytest.approx(2 ** 0.25, rel=1e-14)
    assert np.all(jump[~interior] == 0)


def test_mark_theta_one():
    eta = np.array([0.0, 1.0, 0.0, 3.0, 2.0])
    assert mark(eta, 1.0).tolist() == [1, 3, 4]


def test_mark_dominant_element():
    assert mark(np.array([0.1, 5.0, 0.2, 0.3]), 0.5).tolist() == [1]


def test_mark_uniform_ties():
    assert mark(np.ones(8), 0.5).tolist() == [0, 1, 2, 3]


@pytest.mark.parametrize("theta", [0.0, -0.1, 1.5])
def test_mark_rejects_theta(theta):
    with pytest.raises(ValueError, match="theta"):
        mark(np.ones(3), theta)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=8), st.sampled_from([0.1, 0.3, 0.5, 0.7, 0.9]))
def test_mark_matches_bruteforce(values, theta):
    eta = np.array(values, dtype=float)
    got = mark(eta, theta).tolist()
    if eta.sum() == 0:
        assert got == []
    else:
        assert got == dorfler_bruteforce(eta, theta)


def test_local_indicators_conserve_total(bench_uniform):
    for lvl in bench_uniform.levels:
        r = lvl.report
        assert r.local_indicators().sum() == pytest.approx(r.total, rel=1e-12)
        assert np.all(r.local_indicators() >= 0)


def test_relabeling_invariance(bench_uniform):
    res = bench_uniform.levels[1]
    mesh = res.mesh
    perm = np.random.default_rng(0).permutation(mesh.n_triangles)
    other = Mesh(mesh.vertices, mesh.triangles[perm], mesh.boundary_edges, mesh.boundary_labels)
    layout = DofLayout(other, BoundaryMesh.from_mesh(other))
    r2 = estimate(other, layout, WELLS, res.sp, BENCH, res.state)
    r1 = res.report
    for name in ("eta_omega", "eta_c1", "eta_c2", "eta_s"):
        assert getattr(r2, name) == pytest.approx(getattr(r1, name), rel=1e-12)
    assert np.allclose(r2.local_indicators(), r1.local_indicators()[perm], rtol=1e-12)


def test_contact_terms_vanish_under_complementarity(bench_uniform):
    # every jump is active on the benchmark, so the complementarity term is exactly zero
    for lvl in bench_uniform.levels:
        assert np.all(lvl.state.v == 0)
        assert lvl.report.eta_c2 == 0.0


def test_uniform_refinement_monotone(bench_uniform):
    levels = bench_uniform.levels
    etas = [lvl.report.total for lvl in levels]
    js = [lvl.j_h for lvl in levels]
    assert all(b < a for a, b in zip(etas, etas[1:]))
    assert all(b <= a + 1e-12 for a, b in zip(js, js[1:]))
    assert [lvl.n_elements for lvl in levels] == [64 * 4 ** k for k in range(3)]


def test_sigma_difference_and_reliability(bench_uniform):
    lv = bench_uniform.levels
    d = sigma_difference(lv[0].mesh, lv[0].macro.sigma, lv[1].mesh, lv[1].macro.sigma)
    assert 0 < d < lv[0].report.total
    with pytest.raises(ValueError, match="refinement"):
        sigma_difference(lv[1].mesh, lv[1].macro.sigma, lv[0].mesh, lv[0].macro.sigma)
    assert lp_norm(lv[0].mesh, np.ones(lv[0].n_elements), 4 / 3) == pytest.approx(1.0)


def test_adaptive_zero_data_stops_immediately():
    rec = adaptive_loop(benchmark_mesh(0.25), WELLS, ProblemData(), options=AdaptiveOptions(max_levels=4))
    assert len(rec.levels) == 1
    assert rec.levels[0].report.total == 0.0


def test_adaptive_run_refines_locally():
    rec = adaptive_loop(benchmark_mesh(0.25), WELLS, BENCH, options=AdaptiveOptions(theta=0.5, max_levels=3))
    n = [lvl.n_elements for lvl in rec.levels]
    assert n[0] < n[1] < n[2] < 64 * 16
    for lvl in rec.levels:
        lvl.mesh.check()


def test_dof_budget_stops_loop():
    rec = adaptive_loop(benchmark_mesh(0.25), WELLS, BENCH,
                        options=AdaptiveOptions(mode="uniform", max_levels=5, dof_budget=100))
    assert rec.levels[-1].n_dofs >= 100 and len(rec.levels) == 2


def test_warm_start_is_feasible_and_faster(bench_uniform):
    coarse = bench_uniform.levels[0]
    fine = refine_uniform(coarse.mesh)
    layout = DofLayout(fine, BoundaryMesh.from_mesh(fine))
    x0 = transfer_state(coarse, fine, layout)
    assert x0[layout.n_u:].min() >= 0
    warm = solve_level(fine, WELLS, BENCH, SolveOptions(), initial=x0)
    cold = solve_level(fine, WELLS, BENCH, SolveOptions(seed=5))
    assert warm.state.iterations <= cold.state.iterations
    assert warm.j_h == pytest.approx(cold.j_h, rel=1e-8, abs=1e-12)


def test_dist_surrogate_zero_datum():
    bm = BoundaryMesh.from_mesh(benchmark_mesh(0.25))
    assert dist_surrogate(bm, assemble(bm.refined()), np.zeros(bm.n_nodes)) == 0.0


def test_dist_surrogate_decreases_for_smooth_datum():
    u, _ = dipole((0.4, 0.55), (1.0, 0.5))
    values = []
    for h in (0.25, 0.125, 0.0625):
        bm = BoundaryMesh.from_mesh(benchmark_mesh(h))
        values.append(dist_surrogate(bm, assemble(bm.refined()), bm.interpolate(u)))
    assert values[0] > values[1] > values[2] > 0


def test_unknown_mode_rejected():
    with pytest.raises(ValueError, match="mode"):
        adaptive_loop(benchmark_mesh(0.25), WELLS, BENCH, options=AdaptiveOptions(mode="random"))


@pytest.mark.xfail(strict=True, reason="local bisection adds stress jumps across new edges; "
                                       "eta and J_h oscillate on the adaptive benchmark sequence")
def test_adaptive_benchmark_monotone():
    rec = adaptive_loop(benchmark_mesh(0.25), WELLS, BENCH, options=AdaptiveOptions(theta=0.5, max_levels=6))
    etas = [lvl.report.total for lvl in rec.levels]
    js = [lvl.j_h for lvl in rec.levels]
    assert all(b < a for a, b in zip(etas, etas[1:]))
    assert all(b <= a for a, b in zip(js, js[1:]))
