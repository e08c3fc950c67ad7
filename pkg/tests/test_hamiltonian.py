import numpy as np
import pytest
from hypothesis import given, strategies as st

from hjpdhg.hamiltonian import (
    HomogeneousData,
    L1EO,
    NormEO,
    QuadraticEO,
    conjugate_prox,
    conjugate_value,
    eo_split_quadratic,
    l1_eo,
    make_hamiltonian,
    osher_sethian_norm,
    project_orthant_ball,
)
from helpers import prox_objective

X, T = (np.array(0.3),), np.array(0.5)
slope = st.floats(-10, 10, allow_nan=False)


def ev(h, pp, pm):
    return float(h.value(X, T, (np.array(pp),), (np.array(pm),)))


def conj(h, vp, vm):
    return float(h.conjugate(X, T, (np.array(vp),), (np.array(vm),)))


def test_quadratic_examples():
    h = eo_split_quadratic()
    assert ev(h, -1.0, 2.0) == 2.5
    assert conj(h, 0.5, 0.5) == np.inf
    assert conj(h, 0.0, 0.0) == 0.0
    assert conj(h, -0.3, 0.4) == pytest.approx(0.125)


def test_norm_examples():
    h = osher_sethian_norm()
    assert ev(h, -3.0, 4.0) == 5.0
    assert conj(h, -0.6, 0.8) == 0.0
    one = osher_sethian_norm(shift=lambda x, t: np.ones_like(x))
    assert conj(one, -0.6, 0.8) == -1.0


def test_shift_enters_value_and_conjugate_with_opposite_signs():
    f = lambda x, t: x + t
    h = QuadraticEO(shift=f)
    assert ev(h, 0.0, 0.0) == pytest.approx(0.8)
    assert conj(h, 0.0, 0.0) == pytest.approx(-0.8)


@pytest.mark.parametrize("h", [QuadraticEO(), L1EO(), NormEO()])
@given(p=slope)
def test_consistency(h, p):
    exact = {QuadraticEO: 0.5 * p * p, L1EO: abs(p), NormEO: abs(p)}[type(h)]
    assert ev(h, p, p) == pytest.approx(exact, abs=1e-12)


@pytest.mark.parametrize("h", [QuadraticEO(), L1EO(), NormEO()])
@given(pp=slope, pm=slope, step=st.floats(0.0, 5.0))
def test_monotone(h, pp, pm, step):
    base = ev(h, pp, pm)
    assert ev(h, pp + step, pm) <= base + 1e-12
    assert ev(h, pp, pm + step) >= base - 1e-12


@pytest.mark.parametrize("h", [QuadraticEO(), L1EO(), NormEO()])
@given(a=st.tuples(slope, slope), b=st.tuples(slope, slope), lam=st.floats(0, 1))
def test_jointly_convex(h, a, b, lam):
    mid = ev(h, lam * a[0] + (1 - lam) * b[0], lam * a[1] + (1 - lam) * b[1])
    assert mid <= lam * ev(h, *a) + (1 - lam) * ev(h, *b) + 1e-9


def _feasible_sample(h, rng):
    if isinstance(h, QuadraticEO):
        return -rng.uniform(0, 4), rng.uniform(0, 4)
    if isinstance(h, L1EO):
        return -rng.uniform(0, 1), rng.uniform(0, 1)
    r, ang = rng.uniform(0, 1), rng.uniform(0, np.pi / 2)
    return -r * np.cos(ang), r * np.sin(ang)


@pytest.mark.parametrize("h", [QuadraticEO(), L1EO(), NormEO()])
def test_conjugate_matches_grid_supremum(h, rng):
    p = np.linspace(-5, 5, 201)
    pp, pm = np.meshgrid(p, p, indexing="ij")
    vals = h.value(X, T, (pp,), (pm,))
    for _ in range(50):
        vp, vm = _feasible_sample(h, rng)
        sup = np.max(vp * pp + vm * pm - vals)
        assert conj(h, vp, vm) == pytest.approx(sup, abs=1e-2)


@pytest.mark.parametrize("h", [QuadraticEO(), L1EO()])
def test_separable_prox_beats_grid_search(h, rng):
    y = np.arange(-5, 5 + 5e-4, 1e-3)
    for _ in range(100):
        dp, dm, vp, vm = rng.uniform(-3, 3, 4)
        rho, sigma = rng.uniform(0.01, 3), rng.uniform(0.05, 2)
        (np_,), (nm,) = conjugate_prox(h, X, T, (dp,), (dm,), (vp,), (vm,), rho, sigma)
        got = prox_objective(h, X, T, (dp,), (dm,), (vp,), (vm,), rho, sigma, (np_,), (nm,))
        # separable: minimise each component on its own with the other fixed at the optimum
        plus = prox_objective(h, X, T, (dp,), (dm,), (vp,), (vm,), rho, sigma, (y,), (nm,))
        minus = prox_objective(h, X, T, (dp,), (dm,), (vp,), (vm,), rho, sigma, (np_,), (y,))
        assert got <= np.min(plus) + 1e-8 and got <= np.min(minus) + 1e-8


def test_quadratic_prox_example():
    (vp,), (vm,) = conjugate_prox(QuadraticEO(), X, T, (0.0,), (1.0,), (0.0,), (0.0,), 0.7, 0.7)
    assert vm == pytest.approx(0.5) and vp == 0.0
    (vp,), (vm,) = conjugate_prox(QuadraticEO(), X, T, (0.0,), (0.0,), (0.0,), (0.0,), 2.0, 0.3)
    assert vp == 0.0 and vm == 0.0


def test_norm_prox_example():
    (vp,), (vm,) = conjugate_prox(NormEO(), X, T, (-2.0,), (0.0,), (0.0,), (0.0,), 1.0, 1.0)
    assert vp == pytest.approx(-1.0) and vm == 0.0


def test_prox_at_zero_rho_is_support_point():
    (vp,), (vm,) = QuadraticEO().prox(X, T, (-2.0,), (3.0,), (0.4,), (0.4,), 0.0, 1.0)
    assert vp == -2.0 and vm == 3.0
    (vp,), (vm,) = L1EO().prox(X, T, (-2.0,), (3.0,), (0.0,), (0.0,), 0.0, 1.0)
    assert vp == -1.0 and vm == 1.0
    (vp,), (vm,) = L1EO().prox(X, T, (2.0,), (-3.0,), (0.0,), (0.0,), 0.0, 1.0)
    assert vp == 0.0 and vm == 0.0
    (vp,), (vm,) = NormEO().prox(X, T, (-3.0,), (4.0,), (0.0,), (0.0,), 0.0, 1.0)
    assert vp == pytest.approx(-0.6) and vm == pytest.approx(0.8)


def test_prox_rejects_bad_steps():
    with pytest.raises(ValueError):
        conjugate_prox(QuadraticEO(), X, T, (0.0,), (0.0,), (0.0,), (0.0,), 1.0, 0.0)
    with pytest.raises(ValueError):
        conjugate_prox(QuadraticEO(), X, T, (0.0,), (0.0,), (0.0,), (0.0,), -1.0, 1.0)


def test_conjugate_value_flags_infeasible():
    with pytest.raises(FloatingPointError):
        conjugate_value(QuadraticEO(), X, T, (np.array(0.5),), (np.array(0.5),))
    assert conjugate_value(QuadraticEO(), X, T, (np.array(-0.3),), (np.array(0.4),)) == pytest.approx(0.125)


def _project_by_gradient(w, iters=4000):
    """Projected gradient onto ``{w+ <= 0 <= w-, |w| <= 1}`` with an exact
    projection onto each of the two convex pieces alternately (Dykstra)."""
    x = w.copy()
    p = np.zeros_like(w)
    q = np.zeros_like(w)
    sign = np.array([-1.0, 1.0] * (w.size // 2))
    for _ in range(iters):
        y = x + p
        y_new = np.where(sign * y < 0, 0.0, y)  # orthant
        p = y - y_new
        z = y_new + q
        n = np.linalg.norm(z)
        z_new = z / n if n > 1 else z  # ball
        q = z - z_new
        x = z_new
    return x


def test_orthant_ball_projection_matches_iterative(rng):
    for _ in range(200):
        w = rng.normal(scale=1.5, size=4)  # (p1+, p1-, p2+, p2-)
        clamp_p = (min(w[0], 0.0), min(w[2], 0.0))
        clamp_m = (max(w[1], 0.0), max(w[3], 0.0))
        (a, c), (b, d) = project_orthant_ball(clamp_p, clamp_m)
        got = np.array([a, b, c, d])
        np.testing.assert_allclose(got, _project_by_gradient(w), atol=1e-8)


def test_two_dimensional_shapes():
    h = QuadraticEO(ndim=2)
    x = (np.zeros((3, 1)), np.zeros((1, 4)))
    p = (np.ones((3, 4)), -np.ones((3, 4)))
    assert h.value(x, 0.0, p, p).shape == (3, 4)
    with pytest.raises(ValueError):
        h.value(x, 0.0, p[:1], p)


def test_make_hamiltonian_names():
    f = lambda x, t: 0 * x
    assert isinstance(make_hamiltonian("quadratic", 1), QuadraticEO)
    assert make_hamiltonian("quadratic_shifted", 2, shift=f).shift is f
    assert isinstance(make_hamiltonian("l1_homogeneous", 1), L1EO)
    assert isinstance(make_hamiltonian("norm_potential", 1, shift=f), NormEO)
    with pytest.raises(ValueError):
        make_hamiltonian("quadratic", 1, shift=f)
    with pytest.raises(ValueError):
        make_hamiltonian("cubic", 1)


def test_homogeneous_data():
    d = HomogeneousData(ndim=1, gamma=lambda x, t: 2 + 0 * x, f=0.5)
    assert d.speed(X, T) == 2
    assert d.shift(X, T) == 0.5
    assert isinstance(d.hamiltonian(), L1EO)
    assert l1_eo().speed(X, T) == 1.0
    with pytest.raises(ValueError):
        HomogeneousData(gamma=-1.0).speed(X, T)
