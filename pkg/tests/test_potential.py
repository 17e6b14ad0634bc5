import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwcouple import potential as pot
from oracles import envelope_by_lamination, w_scalar

P = pot.WellParams((-1.0, 0.0), (1.0, 0.0))
ROTATED = pot.WellParams((0.3, -1.2), (2.1, 0.9))

vec = st.tuples(st.floats(-10, 10), st.floats(-10, 10))
wells = st.tuples(vec, vec).filter(lambda w: np.hypot(w[0][0] - w[1][0], w[0][1] - w[1][1]) > 0.1)


def test_well_params_derived():
    assert np.array_equal(P.a, [1.0, 0.0])
    assert np.array_equal(P.b, [0.0, 0.0])
    assert P.a_norm2 == 1.0
    assert ROTATED.a_norm2 == pytest.approx(ROTATED.a @ ROTATED.a, rel=1e-15)


def test_identical_wells_rejected():
    with pytest.raises(ValueError, match="distinct"):
        pot.WellParams((1.0, 2.0), (1.0, 2.0))


@pytest.mark.parametrize("f, expected", [((-1, 0), 0.0), ((0, 0), 1.0), ((2, 0), 9.0)])
def test_eval_w_examples(f, expected):
    assert pot.eval_w(P, f) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("f, expected", [((0, 0), 0.0), ((2, 0), 3.0), ((0, 1), 0.0)])
def test_eval_q_examples(f, expected):
    assert pot.eval_q(P, f) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("f, expected", [((-1, 0), 0.0), ((2, 0), 9.0), ((0, 1), 4.0)])
def test_eval_wss_examples(f, expected):
    assert pot.eval_wss(P, f) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("f, expected", [((1, 0), (0, 0)), ((0, 1), (0, 8)), ((2, 0), (24, 0))])
def test_grad_wss_examples(f, expected):
    assert np.allclose(pot.grad_wss(P, f), expected, atol=1e-13)


def test_project_perp_examples():
    assert np.allclose(pot.project_perp(P, (3, 5)), (0, 5))
    assert np.allclose(pot.project_perp(ROTATED, ROTATED.a), 0, atol=1e-15)
    diag = pot.WellParams((0, 0), (2, 2))  # A = (1, 1)
    assert np.allclose(pot.project_perp(diag, (1, 0)), (0.5, -0.5))


def test_w4_gap_examples():
    assert pot.w4_gap(P, (0.3, -2.0), (0.3, -2.0)) == 0.0
    g = float(pot.w4_gap(P, (0, 1), (0, 0)))
    # both sides equal 8 here: DW**(0,1) = (0,8), Q vanishes at both points
    assert g == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("f", [(0.0, 0.0), (0.4, 0.3), (-0.9, 0.2), (0.0, 1.0), (1.5, 0.5),
                               (2.0, 0.0), (-0.5, -1.5)])
def test_envelope_matches_lamination_oracle(f):
    ref = envelope_by_lamination(P.f1, P.f2, f)
    assert pot.eval_wss(P, f) == pytest.approx(ref, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("f", [(0.5, 1.0), (1.0, 1.0), (3.0, -2.0), (1.2, 0.0)])
def test_envelope_matches_lamination_oracle_rotated(f):
    ref = envelope_by_lamination(ROTATED.f1, ROTATED.f2, f)
    assert pot.eval_wss(ROTATED, f) == pytest.approx(ref, rel=1e-6, abs=1e-9)


def test_vectorized_shapes():
    f = np.random.default_rng(0).normal(size=(4, 5, 2))
    assert pot.eval_wss(P, f).shape == (4, 5)
    assert pot.grad_wss(P, f).shape == (4, 5, 2)
    assert pot.hess_wss(P, f).shape == (4, 5, 2, 2)
    assert pot.eval_wss(P, f)[2, 3] == pot.eval_wss(P, f[2, 3])


def test_zero_set_of_wss():
    t = np.linspace(-1, 1, 11)
    on_segment = P.b + t[:, None] * P.a
    assert np.allclose(pot.eval_wss(P, on_segment), 0.0, atol=1e-14)
    assert np.all(pot.eval_wss(P, P.b + np.array([1.0001, 0.0]) * P.a) > 0)
    assert pot.eval_wss(P, (0.0, 1e-3)) > 0


@settings(max_examples=200, deadline=None)
@given(wells, vec)
def test_envelope_below_w(w, f):
    p = pot.WellParams(*w)
    # rounding is relative to the size of the individual terms, not of the result
    scale = 1 + (np.sum(np.square(np.asarray(f) - p.b)) + p.a_norm2) ** 2
    assert pot.eval_wss(p, f) <= pot.eval_w(p, f) + 1e-13 * scale
    assert pot.eval_wss(p, f) >= -1e-13 * scale


def test_envelope_below_w_unit_wells():
    f = np.random.default_rng(7).uniform(-10, 10, size=(100000, 2))
    assert np.all(pot.eval_wss(P, f) <= pot.eval_w(P, f) + 1e-12 * (1 + np.sum(f * f, 1) ** 2))


@settings(max_examples=200, deadline=None)
@given(wells, st.floats(-5, 5).filter(lambda t: abs(t) >= 1))
def test_envelope_equals_w_on_rank_one_line(w, t):
    p = pot.WellParams(*w)
    f = p.b + t * p.a
    assert pot.eval_wss(p, f) == pytest.approx(float(pot.eval_w(p, f)), rel=1e-10, abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(wells, vec, vec, st.floats(0, 1))
def test_convexity_sampled(w, f, e, t):
    p = pot.WellParams(*w)
    f, e = np.array(f), np.array(e)
    lhs = pot.eval_wss(p, t * f + (1 - t) * e)
    rhs = t * pot.eval_wss(p, f) + (1 - t) * pot.eval_wss(p, e)
    assert lhs <= rhs + 1e-10 * (1 + abs(rhs))


@settings(max_examples=200, deadline=None)
@given(wells, vec, vec)
def test_w4_gap_nonnegative(w, f, e):
    p = pot.WellParams(*w)
    scale = 1 + np.sum(np.square(f)) ** 2 + np.sum(np.square(e)) ** 2
    assert pot.w4_gap(p, f, e) >= -1e-10 * scale


@settings(max_examples=200, deadline=None)
@given(wells, vec)
def test_projection_idempotent_and_orthogonal(w, f):
    p = pot.WellParams(*w)
    pf = pot.project_perp(p, f)
    assert abs(pf @ p.a) <= 1e-12 * (1 + np.linalg.norm(f)) * np.linalg.norm(p.a)
    assert np.allclose(pot.project_perp(p, pf), pf, atol=1e-12 * (1 + np.linalg.norm(f)))


def _fd_grad(p, f, eps=1e-6):
    f = np.asarray(f, float)
    out = np.zeros(2)
    for i in range(2):
        d = np.zeros(2)
        d[i] = eps
        out[i] = (pot.eval_wss(p, f + d) - pot.eval_wss(p, f - d)) / (2 * eps)
    return out


@pytest.mark.parametrize("p", [P, ROTATED])
def test_gradient_matches_finite_differences(p):
    rng = np.random.default_rng(3)
    for f in rng.uniform(-3, 3, size=(400, 2)):
        g = pot.grad_wss(p, f)
        q = float(pot.eval_q(p, f))
        tol = 1e-6 if q > 1e-3 else 1e-4
        assert np.linalg.norm(g - _fd_grad(p, f)) / (1 + np.linalg.norm(g)) <= tol


def test_hessian_matches_gradient_differences_off_kink():
    rng = np.random.default_rng(4)
    for f in rng.uniform(-3, 3, size=(200, 2)):
        if abs(np.sum((f - P.b) ** 2) - P.a_norm2) < 1e-2:
            continue
        h = pot.hess_wss(P, f)
        eps = 1e-6
        fd = np.stack([(pot.grad_wss(P, f + eps * e) - pot.grad_wss(P, f - eps * e)) / (2 * eps)
                       for e in np.eye(2)], axis=1)
        assert np.allclose(h, fd, rtol=1e-6, atol=1e-5)
        assert np.allclose(h, h.T)
        assert np.linalg.eigvalsh(h).min() >= -1e-12


def test_growth_quartic():
    rng = np.random.default_rng(5)
    for p in (P, ROTATED):
        dirs = rng.normal(size=(50, 2))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        for r in (1e2, 1e3, 1e4):
            ratio = pot.eval_wss(p, r * dirs) / r ** 4
            assert np.all(ratio > 0.5) and np.all(ratio < 2.0)


def test_w3_ratio_bounded():
    rng = np.random.default_rng(6)
    f = rng.uniform(-10, 10, size=(20000, 2))
    e = rng.uniform(-10, 10, size=(20000, 2))
    dg = pot.grad_wss(P, f) - pot.grad_wss(P, e)
    mono = np.sum(dg * (f - e), axis=1)
    keep = mono > 1e-8
    ratio = np.sum(dg * dg, axis=1)[keep] / ((1 + np.sum(f * f, 1) + np.sum(e * e, 1))[keep] * mono[keep])
    assert np.isfinite(ratio).all()
    assert ratio.max() < 100.0


def test_scalar_oracle_agrees_with_vectorized_w():
    for f in [(0.1, 0.2), (-3, 4), (7, -1)]:
        assert pot.eval_w(ROTATED, f) == pytest.approx(w_scalar(ROTATED.f1, ROTATED.f2, f), rel=1e-14)


def test_matches_three_term_formula():
    f = np.random.default_rng(8).uniform(-10, 10, size=(10000, 2))
    for p in (P, ROTATED):
        x = f - p.b
        q = np.maximum(0.0, np.sum(x * x, 1) - p.a_norm2)
        ref = q * q + 4 * p.a_norm2 * np.sum(x * x, 1) - 4 * (x @ p.a) ** 2
        scale = (np.sum(x * x, 1) + p.a_norm2) ** 2
        assert np.all(np.abs(pot.eval_wss(p, f) - ref) <= 1e-14 * scale)
