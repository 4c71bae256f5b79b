import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from mfgnet import presets
from mfgnet.hamiltonian import (AssumptionSamples, HamiltonianModel,
                                LagrangianSpec, check_assumptions,
                                clipped_linear, clipped_quadratic, eval_H,
                                eval_Hp, legendre, zero_hamiltonian)


def brute_force_conjugate(lfun, lo, hi, y, p, n=20001):
    """Independent oracle: dense-grid maximization of -a p - L(y, a)."""
    a = np.linspace(lo, hi, n)
    return float(np.max(-a * p - lfun(y, a)))


@pytest.fixture
def quad_spec(star):
    return LagrangianSpec(star.lengths(), [(-1.0, 1.0)] * 3,
                          [lambda y, a: 0.5 * a * a] * 3)


def test_legendre_matches_brute_force_oracle(quad_spec):
    model = legendre(quad_spec)
    for p in (-2.5, -1.0, -0.3, 0.0, 0.7, 2.0):
        oracle = brute_force_conjugate(quad_spec.l_funcs[0], -1.0, 1.0, 0.5, p)
        assert eval_H(model, 0, 0.5, p) == pytest.approx(oracle, abs=1e-6)


def test_legendre_clipped_quadratic_closed_form(quad_spec):
    model = legendre(quad_spec)
    # saturated branch: maximizer a* = -1, H(2) = 2 - 1/2
    assert eval_H(model, 0, 0.5, 2.0) == pytest.approx(1.5, abs=1e-8)
    assert eval_H(model, 0, 0.5, 0.0) == pytest.approx(0.0, abs=1e-10)
    assert eval_Hp(model, 0, 0.5, 0.0) == pytest.approx(0.0, abs=1e-8)
    assert eval_Hp(model, 0, 0.5, 2.0) == pytest.approx(1.0, abs=1e-8)


def test_legendre_absolute_value_lagrangian(star):
    spec = LagrangianSpec(star.lengths(), [(-1.0, 1.0)] * 3,
                          [lambda y, a: np.abs(a)] * 3)
    model = legendre(spec)
    oracle = brute_force_conjugate(spec.l_funcs[0], -1.0, 1.0, 0.0, 0.5)
    assert oracle == pytest.approx(0.0, abs=1e-9)
    assert eval_H(model, 0, 0.0, 0.5) == pytest.approx(0.0, abs=1e-8)
    assert eval_H(model, 0, 0.0, 2.0) == pytest.approx(1.0, abs=1e-6)


def test_legendre_rejects_nonconvex_lagrangian(star):
    spec = LagrangianSpec(star.lengths(), [(-1.0, 1.0)] * 3,
                          [lambda y, a: -a * a] * 3)
    with pytest.raises(ValueError, match="convex"):
        legendre(spec)


def test_builtin_clipped_quadratic_values(star):
    model = clipped_quadratic(star, 1.0)
    assert eval_H(model, 0, 0.5, 2.0) == pytest.approx(1.5)
    assert eval_H(model, 0, 0.5, 0.5) == pytest.approx(0.125)
    assert eval_Hp(model, 0, 0.5, 2.0) == 1.0
    assert eval_Hp(model, 0, 0.5, -2.0) == -1.0


def test_builtin_clipped_linear_values(star):
    model = clipped_linear(star, amax=1.0, cost=1.0)
    assert eval_H(model, 0, 0.0, 0.5) == 0.0
    assert eval_H(model, 0, 0.0, 2.0) == pytest.approx(1.0)


def test_eval_out_of_range_raises(star):
    model = clipped_quadratic(star, 1.0)
    with pytest.raises(ValueError):
        eval_H(model, 0, 1.5, 0.0)


def test_hp_matches_finite_differences_away_from_kinks(star):
    model = clipped_quadratic(star, 1.0)
    eps = 1e-6
    for p in (-0.7, -0.2, 0.4, 1.8):  # not near the kinks at +-1
        fd = (eval_H(model, 0, 0.5, p + eps)
              - eval_H(model, 0, 0.5, p - eps)) / (2 * eps)
        assert eval_Hp(model, 0, 0.5, p) == pytest.approx(fd, abs=1e-8)


def test_one_sided_differences_bracket_hp_at_kink(star):
    model = clipped_quadratic(star, 1.0)
    eps = 1e-8
    p = 1.0
    left = (eval_H(model, 0, 0.5, p) - eval_H(model, 0, 0.5, p - eps)) / eps
    right = (eval_H(model, 0, 0.5, p + eps) - eval_H(model, 0, 0.5, p)) / eps
    hp = eval_Hp(model, 0, 0.5, p)
    assert left - 1e-6 <= hp <= right + 1e-6


def test_even_lagrangian_gives_even_h_odd_hp(quad_spec):
    model = legendre(quad_spec)
    for p in (0.3, 0.9, 1.7):
        assert eval_H(model, 0, 0.5, p) == pytest.approx(
            eval_H(model, 0, 0.5, -p), abs=1e-8)
        assert eval_Hp(model, 0, 0.5, p) == pytest.approx(
            -eval_Hp(model, 0, 0.5, -p), abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 2.0), st.floats(-0.5, 0.5), st.floats(0.0, 1.0))
def test_legendre_output_convex_in_p(alpha, beta, kappa):
    net = presets.single_edge()
    spec = LagrangianSpec(net.lengths(), [(-1.0, 1.0)],
                          [lambda y, a: alpha * (a - beta) ** 2
                           + kappa * np.abs(a)])
    model = legendre(spec)
    ps = np.linspace(-3.0, 3.0, 41)
    h = np.array([eval_H(model, 0, 0.5, p) for p in ps])
    chords = h[:-2] - 2.0 * h[1:-1] + h[2:]
    assert np.min(chords) > -1e-7


def test_check_assumptions_passes_for_clipped_quadratic(star):
    rep = check_assumptions(clipped_quadratic(star, 1.0))
    assert rep.ok


def test_check_assumptions_passes_for_zero(star):
    assert check_assumptions(zero_hamiltonian(star)).ok


def test_check_assumptions_flags_understated_lipschitz_bound(star):
    # H(p) = p^2 declared with C0 = 1 violates the derivative bound at p = 1
    model = HamiltonianModel(
        star.lengths(),
        [lambda y, p: np.asarray(p) ** 2] * 3,
        [lambda y, p: 2.0 * np.asarray(p)] * 3,
        c0=1.0)
    rep = check_assumptions(model, AssumptionSamples(p_max=2.0))
    assert not rep.ok
    assert any("Lipschitz" in v for v in rep.violations)


def test_check_assumptions_flags_nonconvexity(star):
    model = HamiltonianModel(
        star.lengths(),
        [lambda y, p: -np.asarray(p) ** 2] * 3,
        [lambda y, p: -2.0 * np.asarray(p)] * 3,
        c0=10.0)
    rep = check_assumptions(model, AssumptionSamples(p_max=2.0))
    assert any("convexity" in v for v in rep.violations)
