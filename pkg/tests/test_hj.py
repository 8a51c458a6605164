import numpy as np
import pytest

from dedonder_hj.cauchy import make_grid, run_simulation
from dedonder_hj.hj import (GammaDomainError, HJSection,
                            IncompatibleDataError, connection_lift_vector,
                            evolve_characteristics, gamma_closedness_residual,
                            gamma_family, hj_lift_solution_check, hj_residual,
                            lift_by_gamma, lift_variation, linear_gamma,
                            oscillator_gamma, reduced_connection,
                            restricted_connection_residual)
from dedonder_hj.legendre import flatness_residual, hamiltonian_from_lagrangian
from dedonder_hj.models import Dimensions, ModelError, builtin_model

M1 = Dimensions(m=1, n=1)
TWO_PI = 2.0 * np.pi


def wave_H():
    return hamiltonian_from_lagrangian(builtin_model("free_wave"))


def kg_H(mass=1.0):
    return hamiltonian_from_lagrangian(
        builtin_model("klein_gordon", {"mass": mass}))


def box_samples(dims, count=60, seed=15):
    rng = np.random.default_rng(seed)
    return [(float(rng.uniform(0, 1)), rng.uniform(0, 1, dims.m),
             rng.uniform(-2, 2, dims.n)) for _ in range(count)]


# -- closedness ---------------------------------------------------------------

def test_linear_gamma_closed():
    lg = linear_gamma(M1, a=0.7, b=0.3, c=-0.4, d=1.1, p_const=2.0)
    res = gamma_closedness_residual(lg, box_samples(M1))
    assert res.max_abs() == 0.0


def test_time_linear_section_mixed_component():
    # gamma_pt = t u with gamma_p = 0: the mixed component is -u
    sec = HJSection(M1, pt=lambda t, x, u: t * np.asarray(u, dtype=float),
                    px=lambda t, x, u: np.zeros((1, 1) + np.shape(np.asarray(u)[0])))
    res = gamma_closedness_residual(sec, [(0.5, [0.1], [2.0])])
    assert res.mixed[0, 0] == pytest.approx(-2.0, abs=1e-9)


def test_two_component_symmetry_residual():
    # gamma_pt_1 = u_2, gamma_pt_2 = 0: antisymmetrized u-derivative is 1
    dims = Dimensions(m=1, n=2)

    def pt(t, x, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        out[0] = u[1]
        return out

    sec = HJSection(dims, pt=pt,
                    px=lambda t, x, u: np.zeros((2, 1) + np.shape(np.asarray(u)[0])))
    res = gamma_closedness_residual(sec, [(0.0, [0.0], [0.3, -1.2])])
    assert res.symmetry_t[0, 0, 1] == pytest.approx(1.0, abs=1e-9)
    assert res.symmetry_t[0, 1, 0] == pytest.approx(-1.0, abs=1e-9)


def test_oscillator_gamma_closed():
    og = oscillator_gamma(Dimensions(m=0, n=1), omega=1.3, phi=0.2)
    samples = [(0.2, np.zeros(0), np.array([1.5])),
               (0.6, np.zeros(0), np.array([-0.4]))]
    assert gamma_closedness_residual(og, samples).max_abs() <= 1e-12


# -- the pointwise Hamilton-Jacobi condition -----------------------------------

def test_hj_residual_linear_wave():
    # (a^2 - c^2) u + (a b - c d) vanishes identically for a = c, b = d
    lg = linear_gamma(M1, a=0.5, c=0.5)
    H = wave_H()
    for (t, x, u) in box_samples(M1):
        assert np.max(np.abs(hj_residual(H, lg, t, x, u))) == 0.0


def test_hj_residual_linear_parameter_dependence():
    # residual = (a^2 - c^2) u + (a b - c d): constants drop iff a b = c d
    H = wave_H()
    u = np.array([1.3])
    point = (0.2, np.array([0.4]), u)
    res = hj_residual(H, linear_gamma(M1, a=0.5, b=1.0, c=0.5, d=0.0), *point)
    assert res[0] == pytest.approx(0.5, abs=1e-12)
    res = hj_residual(H, linear_gamma(M1, a=0.5, b=2.0, c=0.5, d=2.0), *point)
    assert res[0] == pytest.approx(0.0, abs=1e-12)
    res = hj_residual(H, linear_gamma(M1, a=0.8, c=0.2), *point)
    assert res[0] == pytest.approx((0.64 - 0.04) * 1.3, abs=1e-12)


def test_hj_residual_zero_section_klein_gordon():
    zero = linear_gamma(M1, a=0.0)
    H = kg_H(1.0)
    for (t, x, u) in box_samples(M1):
        res = hj_residual(H, zero, t, x, u)
        assert np.allclose(res, u, atol=1e-14)


def test_hj_residual_oscillator_family():
    # a' + a^2 + omega^2 = 0 for a = -omega tan(omega t)
    osc = builtin_model("mechanics_oscillator", {"omega": 1.0})
    H = hamiltonian_from_lagrangian(osc)
    og = oscillator_gamma(osc.dims, omega=1.0)
    for t in (0.0, 0.3, 0.9, 1.3):
        res = hj_residual(H, og, t, np.zeros(0), np.array([0.7]))
        assert abs(res[0]) <= 1e-12


def test_hj_residual_oscillator_on_klein_gordon():
    # same cancellation drives the mass-1 Klein-Gordon family
    H = kg_H(1.0)
    og = oscillator_gamma(M1, omega=1.0)
    for t in (0.0, 0.4, 1.0):
        res = hj_residual(H, og, t, np.array([0.3]), np.array([1.4]))
        assert abs(res[0]) <= 1e-12


# -- induced connection ----------------------------------------------------------

def test_reduced_connection_values():
    lg = linear_gamma(M1, a=0.5, c=0.5)
    conn = reduced_connection(wave_H(), lg)
    G = conn.coefficients(0.0, np.array([0.2]), np.array([2.0]))
    assert G[0, 0] == 1.0 and G[0, 1] == -1.0
    zero = linear_gamma(M1, a=0.0)
    conn0 = reduced_connection(wave_H(), zero)
    assert not conn0.coefficients(0.0, np.array([0.2]), np.array([2.0])).any()


def test_reduced_connection_oscillator_time_zero():
    og = oscillator_gamma(M1, omega=1.0)
    conn = reduced_connection(kg_H(1.0), og)
    G = conn.coefficients(0.0, np.array([0.1]), np.array([1.0]))
    assert G[0, 0] == 0.0  # tan(0) = 0


def test_flatness_of_induced_connection():
    # closed + Hamilton-Jacobi implies flat; exact for these families
    conn = reduced_connection(wave_H(), linear_gamma(M1, a=0.5, c=0.5))
    for (t, x, u) in box_samples(M1, count=30):
        assert np.max(np.abs(flatness_residual(conn, t, x, u))) <= 1e-12
    conn = reduced_connection(kg_H(1.0), oscillator_gamma(M1, omega=1.0))
    for (t, x, u) in box_samples(M1, count=30):
        assert np.max(np.abs(flatness_residual(conn, t, x, u))) <= 1e-12


def test_flatness_detects_non_solution_family():
    # a d != b c leaves a constant curvature a d - b c
    lg = linear_gamma(M1, a=0.5, b=1.0, c=0.0, d=0.4)
    conn = reduced_connection(wave_H(), lg)
    res = flatness_residual(conn, 0.1, np.array([0.2]), np.array([0.9]))
    # Gamma_0 = a u + b, Gamma_1 = -(c u + d): the bracket leaves a d - b c
    assert res[0, 0, 1] == pytest.approx(0.5 * 0.4 - 1.0 * 0.0, abs=1e-12)


# -- restricted connection and characteristics -----------------------------------

def test_restricted_residual_constant_field():
    g = make_grid(32)
    zero = linear_gamma(M1, a=0.0)
    res = restricted_connection_residual(wave_H(), zero, g,
                                         np.full((1, 32), 1.7), 0.0)
    assert not res.any()


def test_restricted_residual_constant_on_oscillator_family():
    g = make_grid(32)
    og = oscillator_gamma(M1, omega=1.0)
    res = restricted_connection_residual(kg_H(1.0), og, g,
                                         np.full((1, 32), 2.0), 0.5)
    assert np.max(np.abs(res)) <= 1e-14


def test_restricted_residual_sine_against_flat_section():
    g = make_grid(128)
    zero = linear_gamma(M1, a=0.0)
    u = np.sin(TWO_PI * g.x[0])[None, :]
    res = restricted_connection_residual(wave_H(), zero, g, u, 0.0)
    assert np.max(np.abs(res[0, 0] - TWO_PI * np.cos(TWO_PI * g.x[0]))) <= 1e-2


def test_characteristics_oscillator():
    osc = builtin_model("mechanics_oscillator", {"omega": 1.0})
    H = hamiltonian_from_lagrangian(osc)
    og = oscillator_gamma(osc.dims, omega=1.0)
    g = make_grid(1, m=0)
    times, frames = evolve_characteristics(H, og, g, np.array([[1.0]]),
                                           0.0, 1e-3, 1.0)
    assert abs(frames[-1][0, 0] - np.cos(1.0)) <= 1e-9


def test_characteristics_constant_klein_gordon():
    g = make_grid(16)
    og = oscillator_gamma(M1, omega=1.0)
    times, frames = evolve_characteristics(kg_H(1.0), og, g,
                                           np.ones((1, 16)), 0.0, 1e-3, 1.0)
    assert np.max(np.abs(frames[-1] - np.cos(1.0))) <= 1e-9


def test_characteristics_zero_section_is_static():
    g = make_grid(16)
    zero = linear_gamma(M1, a=0.0)
    u0 = np.cos(TWO_PI * g.x[0])[None, :]
    times, frames = evolve_characteristics(wave_H(), zero, g, u0,
                                           0.0, 1e-2, 0.1)
    assert np.array_equal(frames[-1], u0)


def test_pole_guard():
    og = oscillator_gamma(M1, omega=1.0, pole_tol=1e-3)
    with pytest.raises(GammaDomainError):
        og.pt(np.pi / 2, np.zeros((1, 1)), np.ones((1, 1)))


# -- lifting ---------------------------------------------------------------------

def test_lift_by_gamma_values():
    g = make_grid(8)
    lg = linear_gamma(M1, a=0.5, c=0.5)
    state = lift_by_gamma(lg, 0.0, g, np.full((1, 8), 2.0))
    assert np.allclose(state.p_t, 1.0) and np.allclose(state.p_x, 1.0)
    zero = linear_gamma(M1, a=0.0)
    state = lift_by_gamma(zero, 0.0, g, np.full((1, 8), 2.0))
    assert not state.p_t.any() and not state.p_x.any()
    og = oscillator_gamma(M1, omega=1.0)
    state = lift_by_gamma(og, 0.0, g, np.full((1, 8), 2.0))
    assert not state.p_t.any()


def test_lift_variation_chain_rule():
    g = make_grid(8)
    og = oscillator_gamma(M1, omega=1.0)
    u = np.full((1, 8), 0.8)
    du = np.full((1, 8), 0.1)
    t = 0.4
    lv = lift_variation(og, t, g, u, 2.0, du)
    a = -np.tan(t)
    a_prime = -1.0 / np.cos(t) ** 2
    expected = 2.0 * a_prime * u + a * du
    assert np.allclose(lv.dp_t, expected, atol=1e-14)
    assert not lv.dp_x.any()


# -- certification of lifted characteristic trajectories ----------------------------

def test_hj_lift_solution_check_certifies_kg_scenario():
    g = make_grid(16)
    H = kg_H(1.0)
    og = oscillator_gamma(M1, omega=1.0)
    times, frames = evolve_characteristics(H, og, g, np.ones((1, 16)),
                                           0.0, 1e-3, 1.0)
    rep = hj_lift_solution_check(H, og, g, times, frames,
                                 rng=np.random.default_rng(1))
    assert rep.compatibility_residual <= 1e-12
    assert rep.split_residual <= 1e-6
    assert rep.contraction_residual <= 1e-6
    assert rep.pullback_residual <= 1e-6


def test_hj_lift_check_flags_non_solution_section():
    # gamma = 0 is not a Hamilton-Jacobi solution for mass 1: the
    # contraction residual retains the mass term
    g = make_grid(16)
    H = kg_H(1.0)
    zero = linear_gamma(M1, a=0.0)
    times, frames = evolve_characteristics(H, zero, g, np.ones((1, 16)),
                                           0.0, 1e-3, 0.05)
    rep = hj_lift_solution_check(H, zero, g, times, frames,
                                 rng=np.random.default_rng(1))
    assert rep.contraction_residual >= 0.1


def test_hj_lift_check_trivial_wave_solution():
    # gamma = 0 with constant data is an exact solution of the free wave
    g = make_grid(16)
    H = wave_H()
    zero = linear_gamma(M1, a=0.0)
    times, frames = evolve_characteristics(H, zero, g,
                                           np.full((1, 16), 0.9),
                                           0.0, 1e-3, 0.05)
    rep = hj_lift_solution_check(H, zero, g, times, frames,
                                 rng=np.random.default_rng(1))
    assert rep.split_residual <= 1e-10
    assert rep.contraction_residual <= 1e-12
    assert rep.pullback_residual <= 1e-12


def test_hj_lift_check_refuses_incompatible_data():
    # sine data is not an integral submanifold of the flat section's
    # restricted connection; the residual is the full gradient, about 2 pi
    g = make_grid(128)
    H = wave_H()
    zero = linear_gamma(M1, a=0.0)
    u0 = np.sin(TWO_PI * g.x[0])[None, :]
    times, frames = evolve_characteristics(H, zero, g, u0, 0.0, 1e-3, 0.01)
    with pytest.raises(IncompatibleDataError) as err:
        hj_lift_solution_check(H, zero, g, times, frames)
    assert err.value.residual == pytest.approx(TWO_PI, rel=1e-3)


def test_connection_lift_vector_components():
    g = make_grid(8)
    H = kg_H(1.0)
    og = oscillator_gamma(M1, omega=1.0)
    t = 0.3
    u = np.full((1, 8), np.cos(t))
    X = connection_lift_vector(H, og, g, t, u)
    assert X.k == 1.0
    # du = Gamma_0 = a(t) u; dp_t = d_t gamma_pt + d_u gamma_pt Gamma_0 = -u
    a = -np.tan(t)
    assert np.allclose(X.du, a * u, atol=1e-14)
    assert np.allclose(X.dp_t, -u, atol=1e-13)


def test_two_component_certified_pipeline():
    # the full verify-integrate-lift-certify chain for two field components
    L = builtin_model("klein_gordon", {"mass": 1.0, "n": 2})
    H = hamiltonian_from_lagrangian(L)
    og = oscillator_gamma(L.dims, omega=1.0)
    sample = (0.3, np.array([0.2]), np.array([1.1, -0.7]))
    assert gamma_closedness_residual(og, [sample]).max_abs() == 0.0
    assert np.max(np.abs(hj_residual(H, og, *sample))) <= 1e-12
    conn = reduced_connection(H, og)
    assert np.max(np.abs(flatness_residual(conn, *sample))) <= 1e-12
    g = make_grid(12)
    u0 = np.vstack([np.ones(12), 1.5 * np.ones(12)])
    times, frames = evolve_characteristics(H, og, g, u0, 0.0, 1e-3, 0.5)
    assert np.max(np.abs(frames[-1] - u0 * np.cos(0.5))) <= 1e-9
    rep = hj_lift_solution_check(H, og, g, times, frames,
                                 rng=np.random.default_rng(0))
    assert rep.split_residual <= 1e-6
    assert rep.contraction_residual <= 1e-9
    assert rep.pullback_residual <= 1e-9
    lifted0 = lift_by_gamma(og, 0.0, g, u0)
    direct = run_simulation(H, g, lifted0, 1e-3, 500, store_every=500)
    assert np.max(np.abs(direct.states[-1].u - u0 * np.cos(0.5))) <= 1e-9


def test_gamma_family_registry():
    lg = gamma_family("linear", M1, {"a": 0.5, "c": 0.5})
    assert lg.name == "linear_gamma"
    with pytest.raises(ModelError):
        gamma_family("generating_function", M1, {})
