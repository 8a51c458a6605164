import numpy as np
import pytest

from dedonder_hj.models import (Dimensions, JetSample, LagrangianModel,
                                ModelError, ReducedMomentumSample,
                                builtin_model, eval_with_partials,
                                finite_difference_partial)

M1 = Dimensions(m=1, n=1)


def jet(u=0.0, u_t=0.0, u_x=0.0, t=0.0, x=0.0):
    return JetSample(t, [x], [u], [u_t], [[u_x]], M1)


def random_jet(rng, dims):
    return JetSample(rng.uniform(-1, 1), rng.uniform(-1, 1, dims.m),
                     rng.uniform(-2, 2, dims.n), rng.uniform(-2, 2, dims.n),
                     rng.uniform(-2, 2, (dims.n, dims.m)), dims)


def all_builtins():
    return [builtin_model("free_wave"),
            builtin_model("klein_gordon", {"mass": 1.3}),
            builtin_model("scalar_potential",
                          {"mass": 0.5, "potential": (0.0, 0.2, 0.0, 0.1)}),
            builtin_model("mechanics_oscillator", {"omega": 1.7})]


def test_dimensions_validation():
    with pytest.raises(ModelError):
        Dimensions(m=2, n=1)
    with pytest.raises(ModelError):
        Dimensions(m=1, n=0)
    assert Dimensions(m=1, n=3).base_dim == 2
    assert Dimensions(m=1, n=3).n_velocity_slots == 6


def test_free_wave_value():
    # hand evaluation: 0.5*4 - 0.5*9
    fw = builtin_model("free_wave")
    assert fw(jet(u=1.0, u_t=2.0, u_x=3.0)) == -2.5


def test_klein_gordon_zero_mass_reduces_to_free_wave():
    fw = builtin_model("free_wave")
    kg0 = builtin_model("klein_gordon", {"mass": 0.0})
    rng = np.random.default_rng(0)
    for _ in range(20):
        j = random_jet(rng, M1)
        assert kg0(j) == fw(j)


def test_oscillator_value():
    osc = builtin_model("mechanics_oscillator", {"omega": 1.0})
    j = JetSample(0.0, [], [1.0], [0.0], np.zeros((1, 0)), osc.dims)
    assert osc(j) == -0.5


def test_partial_values():
    fw = builtin_model("free_wave")
    rec = eval_with_partials(fw, jet(u=1.0, u_t=2.0, u_x=3.0))
    assert rec.d_ut[0] == 2.0
    assert rec.d_ux[0, 0] == -3.0
    assert rec.d_u[0] == 0.0
    kg = builtin_model("klein_gordon", {"mass": 1.0})
    rec = eval_with_partials(kg, jet(u=1.0))
    assert rec.d_u[0] == -1.0


def test_finite_difference_partial():
    assert finite_difference_partial(lambda z: z * z, 3.0, 0, 1e-4) \
        == pytest.approx(6.0, abs=1e-7)
    assert finite_difference_partial(lambda z: 4.25, 1.0, 0, 1e-4) == 0.0
    assert finite_difference_partial(np.sin, 0.0, 0, 1e-5) \
        == pytest.approx(1.0, abs=1e-8)
    v = finite_difference_partial(lambda p: p[0] ** 2 + 3 * p[1],
                                  np.array([1.0, 2.0]), 1, 1e-5)
    assert v == pytest.approx(3.0, abs=1e-9)
    with pytest.raises(ModelError):
        finite_difference_partial(lambda z: z, 0.0, 0, step=0.0)


@pytest.mark.parametrize("model", all_builtins(), ids=lambda m: m.name)
def test_analytic_partials_match_finite_differences(model):
    # spec tolerance: 1e-6 relative against step-1e-5 central differences
    rng = np.random.default_rng(7)
    bare = LagrangianModel(model.dims, model._value, name="fd_only")
    for _ in range(100):
        j = random_jet(rng, model.dims)
        args = (j.t, j.x, j.u, j.u_t, j.u_x)
        for attr in ("d_u", "d_ut", "d_ux"):
            a = getattr(model, attr)(*args)
            b = getattr(bare, attr)(*args)
            if a.size == 0:
                assert b.size == 0
                continue
            scale = max(1.0, float(np.max(np.abs(a))))
            assert np.max(np.abs(a - b)) <= 1e-6 * scale


@pytest.mark.parametrize("model", all_builtins(), ids=lambda m: m.name)
def test_velocity_hessian_signature(model):
    rng = np.random.default_rng(1)
    n, m = model.dims.n, model.dims.m
    expected = np.diag(np.concatenate([np.ones(n), -np.ones(n * m)]))
    for _ in range(5):
        j = random_jet(rng, model.dims)
        H = model.velocity_hessian(j.t, j.x, j.u, j.u_t, j.u_x)
        assert np.array_equal(np.asarray(H), expected)


def test_eval_deterministic():
    kg = builtin_model("klein_gordon", {"mass": 0.7})
    j = jet(u=0.3, u_t=-1.2, u_x=0.9)
    values = {kg(j) for _ in range(10)}
    assert len(values) == 1


def test_batched_evaluation_matches_pointwise():
    kg = builtin_model("klein_gordon", {"mass": 1.1})
    rng = np.random.default_rng(5)
    u = rng.normal(size=(1, 9))
    u_t = rng.normal(size=(1, 9))
    u_x = rng.normal(size=(1, 1, 9))
    x = rng.normal(size=(1, 9))
    vals = kg.value(0.0, x, u, u_t, u_x)
    for k in range(9):
        j = JetSample(0.0, x[:, k], u[:, k], u_t[:, k], u_x[:, :, k], M1)
        assert vals[k] == kg(j)


def test_builtin_model_errors():
    with pytest.raises(ModelError):
        builtin_model("heat_equation")
    with pytest.raises(ModelError):
        builtin_model("klein_gordon", {"mass": -1.0})
    with pytest.raises(ModelError):
        builtin_model("free_wave", {"m": 0})
    with pytest.raises(ModelError):
        builtin_model("mechanics_oscillator", {"m": 1})


def test_eval_with_partials_rejects_mismatch():
    fw = builtin_model("free_wave")
    osc = builtin_model("mechanics_oscillator", {})
    j = JetSample(0.0, [], [1.0], [0.0], np.zeros((1, 0)), osc.dims)
    with pytest.raises(ModelError):
        eval_with_partials(fw, j)
    r = ReducedMomentumSample(0.0, [0.0], [1.0], [0.5], [[0.5]], M1)
    with pytest.raises(ModelError):
        eval_with_partials(fw, r)


def test_non_finite_rejected():
    with pytest.raises(ModelError):
        JetSample(0.0, [0.0], [np.inf], [0.0], [[0.0]], M1)
    with pytest.raises(ModelError):
        JetSample(np.nan, [0.0], [0.0], [0.0], [[0.0]], M1)
