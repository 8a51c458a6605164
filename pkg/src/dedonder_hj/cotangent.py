"""Cotangent picture of the Cauchy dynamics.

Restricting a Cauchy state to (u, pi = p_t) lands in the cotangent data
space. The field energy

    h(t, u, pi) = integral of (-L + pi u_t),   u_t solving dL/du_t = pi,

drives the dynamics there through the two-form built from

    omega(X, Y) = integral of (X_u Y_pi - X_pi Y_u)

extended by dh wedge dt. Its variational derivatives are discrete-exact:
the u_x-dependence of L is differentiated through the transpose of the
central-difference stencil (the negative of the stencil itself on a
periodic grid), which makes the restriction map a strict pairing
isomorphism on states satisfying the spatial constraint and keeps the
trajectory equations equivalent to

    du/dt = dh/dpi,    dpi/dt = -dh/du.
"""

from dataclasses import dataclass

import numpy as np

from .cauchy import (VARIATION_SCALE, _smooth_profile, gradient_fields,
                     integrate_density, spatial_derivative,
                     time_derivative_frames)
from .legendre import NEWTON_MAX_ITER, NEWTON_TOL, NewtonError
from .models import ModelError


class ConstraintError(RuntimeError):
    """State is off the image of the time-Legendre constraint."""

    def __init__(self, residual, tol):
        super().__init__(f"state off the momentum constraint: residual "
                         f"{residual:.6e} > tol {tol:.3e}")
        self.residual = residual
        self.tol = tol


@dataclass(frozen=True)
class CotangentState:
    """Time value plus per-node fields (u, pi)."""
    t: float
    u: np.ndarray    # (n, N)
    pi: np.ndarray   # (n, N)

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "pi", np.asarray(self.pi, dtype=float))
        for name in ("u", "pi"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ModelError(f"non-finite field {name}")


@dataclass(frozen=True)
class CotangentVariation:
    """Tangent vector to the cotangent data space."""
    k: float
    du: np.ndarray
    dpi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "du", np.asarray(self.du, dtype=float))
        object.__setattr__(self, "dpi", np.asarray(self.dpi, dtype=float))


def restriction_map_R(state):
    """Keep (u, pi = p_t), discard the spatial momenta."""
    return CotangentState(state.t, state.u.copy(), state.p_t.copy())


def push_variation(X):
    """Pushforward of a Cauchy-space variation through the restriction."""
    return CotangentVariation(X.k, X.du.copy(), X.dp_t.copy())


def cotangent_variation_norm(grid, X):
    total = X.k ** 2
    total += integrate_density(grid, np.sum(X.du ** 2, axis=0))
    total += integrate_density(grid, np.sum(X.dpi ** 2, axis=0))
    return float(np.sqrt(total))


def solve_time_velocity(L, grid, t, u, pi, guess=None, tol=NEWTON_TOL,
                        max_iter=NEWTON_MAX_ITER):
    """Newton-solve dL/du_t = pi per node, with u_x from the grid."""
    u = np.asarray(u, dtype=float)
    pi = np.asarray(pi, dtype=float)
    n, N = u.shape
    u_x = gradient_fields(grid, u)
    u_t = np.zeros_like(u) if guess is None else np.array(guess, dtype=float)

    def residual(ut):
        return L.d_ut(t, grid.x, u, ut, u_x) - pi

    r = residual(u_t)
    rnorm = np.max(np.abs(r))
    step_fd = getattr(L, "fd_step", 1e-6)
    for _ in range(max_iter):
        if rnorm <= tol:
            return u_t
        J = np.empty((N, n, n))
        for b in range(n):
            hi = u_t.copy()
            lo = u_t.copy()
            hi[b] += step_fd
            lo[b] -= step_fd
            gh = L.d_ut(t, grid.x, u, hi, u_x)
            gl = L.d_ut(t, grid.x, u, lo, u_x)
            J[:, :, b] = ((gh - gl) / (2 * step_fd)).T
        try:
            step = np.linalg.solve(J, r.T[..., None])[..., 0].T
        except np.linalg.LinAlgError as exc:
            raise NewtonError(f"singular time-Legendre system: {exc}") from exc
        scale = 1.0
        for _ in range(30):
            trial = u_t - scale * step
            r_trial = residual(trial)
            r_trial_norm = np.max(np.abs(r_trial))
            if r_trial_norm < rnorm or r_trial_norm <= tol:
                u_t, r, rnorm = trial, r_trial, r_trial_norm
                break
            scale *= 0.5
        else:
            raise NewtonError("time-Legendre solve stalled")
    if rnorm <= tol:
        return u_t
    raise NewtonError(f"time-Legendre solve: no convergence ({rnorm:.3e})")


def instantaneous_hamiltonian(L, grid, cs):
    """Field energy: quadrature of (-L + pi u_t) at the solved velocity."""
    u_t = solve_time_velocity(L, grid, cs.t, cs.u, cs.pi)
    u_x = gradient_fields(grid, cs.u)
    lag = L.value(cs.t, grid.x, cs.u, u_t, u_x)
    return float(integrate_density(grid, -lag + np.sum(cs.pi * u_t, axis=0)))


def variational_derivative(L, grid, cs):
    """Per-node variational derivatives (dh/du, dh/dpi) of the field
    energy, weight-normalized so that directional derivatives are
    quadratures of these fields against the variation.

    dh/dpi = u_t (the solved velocity); dh/du = -dL/du + D(dL/du_x),
    the second term being the exact discrete transpose of the stencil.
    """
    u_t = solve_time_velocity(L, grid, cs.t, cs.u, cs.pi)
    u_x = gradient_fields(grid, cs.u)
    args = (cs.t, grid.x, cs.u, u_t, u_x)
    dh_du = -L.d_u(*args)
    d_ux = L.d_ux(*args)                              # (n, m, N)
    for j in range(grid.m):
        dh_du = dh_du + spatial_derivative(grid, d_ux[:, j, :])
    return dh_du, u_t.copy()


def omega_pairing(grid, X, Y):
    """Canonical pairing: quadrature of X_u Y_pi - X_pi Y_u. The time
    components do not enter."""
    integrand = np.sum(X.du * Y.dpi - X.dpi * Y.du, axis=0)
    return integrate_density(grid, integrand)


def _energy_time_partial(L, grid, cs):
    if not L.time_dependent:
        return 0.0
    s = L.fd_step
    hi = instantaneous_hamiltonian(L, grid, CotangentState(cs.t + s, cs.u, cs.pi))
    lo = instantaneous_hamiltonian(L, grid, CotangentState(cs.t - s, cs.u, cs.pi))
    return (hi - lo) / (2 * s)


def extended_form_pairing(L, grid, cs, X, Y, _data=None):
    """Pairing of the two-form omega + dh wedge dt:

        omega(X, Y) + X(h) k_Y - Y(h) k_X

    with X(h) the directional derivative of the field energy."""
    if _data is None:
        dh_du, dh_dpi = variational_derivative(L, grid, cs)
        dh_dt = _energy_time_partial(L, grid, cs)
    else:
        dh_du, dh_dpi, dh_dt = _data

    def directional(Z):
        val = integrate_density(grid, np.sum(dh_du * Z.du + dh_dpi * Z.dpi,
                                             axis=0))
        return val + Z.k * dh_dt

    # grouped so that swapping X and Y negates every floating-point term
    t_energy = directional(X) * Y.k - directional(Y) * X.k
    return omega_pairing(grid, X, Y) + t_energy


def standard_cotangent_variations(grid, n, rng=None, n_random=8,
                                  include_indicators=True,
                                  scale=VARIATION_SCALE):
    """Deterministic probes, node indicators and seeded smooth variations
    on (u, pi); the vertical test set for cotangent residuals."""
    rng = rng if rng is not None else np.random.default_rng(0)
    N = grid.n_nodes
    out = []
    profiles = [np.full(N, scale)]
    if grid.m == 1:
        xs = grid.x[0] / grid.length
        profiles.append(scale * np.sin(2 * np.pi * xs))
        profiles.append(scale * np.cos(2 * np.pi * xs))
    for prof in profiles:
        for a in range(n):
            du = np.zeros((n, N))
            du[a] = prof
            out.append(CotangentVariation(0.0, du, np.zeros((n, N))))
            dpi = np.zeros((n, N))
            dpi[a] = prof
            out.append(CotangentVariation(0.0, np.zeros((n, N)), dpi))
    if include_indicators:
        for a in range(n):
            for jnode in range(N):
                du = np.zeros((n, N))
                du[a, jnode] = 1.0
                out.append(CotangentVariation(0.0, du, np.zeros((n, N))))
                dpi = np.zeros((n, N))
                dpi[a, jnode] = 1.0
                out.append(CotangentVariation(0.0, np.zeros((n, N)), dpi))
    for _ in range(n_random):
        du = _smooth_profile(grid, rng, n, scale)
        dpi = _smooth_profile(grid, rng, n, scale)
        out.append(CotangentVariation(0.0, du, dpi))
    return out


def cotangent_trajectory_residual(L, grid, times, frames, test_set=None,
                                  rng=None, frame_stride=None):
    """max over frames and test variations of the normalized pairing of
    the frame velocity against the extended two-form; zero exactly when
    the frames satisfy du/dt = dh/dpi, dpi/dt = -dh/du."""
    times = np.asarray(times, dtype=float)
    if len(frames) < 5:
        raise ModelError("need at least 5 stored frames")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt):
        raise ModelError("frames must be uniformly spaced in time")
    n = frames[0].u.shape[0]
    rng = rng if rng is not None else np.random.default_rng(0)
    if test_set is None:
        test_set = standard_cotangent_variations(grid, n, rng=rng)
    u_dot = time_derivative_frames(np.stack([f.u for f in frames]), dt)
    pi_dot = time_derivative_frames(np.stack([f.pi for f in frames]), dt)
    K = len(frames)
    if frame_stride is None:
        frame_stride = max(1, K // 32)
    idx = list(range(0, K, frame_stride))
    if idx[-1] != K - 1:
        idx.append(K - 1)
    norms = np.array([cotangent_variation_norm(grid, xi) for xi in test_set])
    worst = 0.0
    for k in idx:
        cs = frames[k]
        c_dot = CotangentVariation(1.0, u_dot[k], pi_dot[k])
        dh_du, dh_dpi = variational_derivative(L, grid, cs)
        data = (dh_du, dh_dpi, _energy_time_partial(L, grid, cs))
        vals = np.array([extended_form_pairing(L, grid, cs, c_dot, xi,
                                               _data=data)
                         for xi in test_set])
        worst = max(worst, float(np.max(np.abs(vals) / (1.0 + norms))))
    return worst


def time_legendre_constraint_residual(L, grid, state):
    """Sup-norm distance of a Cauchy state from the constraint set: the
    spatial momenta must equal dL/du_x at the jet reconstructed from
    (u, p_t)."""
    u_t = solve_time_velocity(L, grid, state.t, state.u, state.p_t)
    u_x = gradient_fields(grid, state.u)
    expected = L.d_ux(state.t, grid.x, state.u, u_t, u_x)
    if expected.size == 0:
        return 0.0
    return float(np.max(np.abs(state.p_x - expected)))


def pullback_identity_residual(L, H, grid, state, X, Y,
                               constraint_tol=1e-10):
    """|pairing of (omega + dh wedge dt) at the restricted state against
    the pushed variations - Cauchy-space pairing of (X, Y)|.

    Raises :class:`ConstraintError` when the state is off the momentum
    constraint, where the identity is not asserted.
    """
    from .cauchy import presymplectic_pairing
    res = time_legendre_constraint_residual(L, grid, state)
    if res > constraint_tol:
        raise ConstraintError(res, constraint_tol)
    lhs = extended_form_pairing(L, grid, restriction_map_R(state),
                                push_variation(X), push_variation(Y))
    rhs = presymplectic_pairing(H, grid, state, X, Y)
    return abs(lhs - rhs)


def hat_gamma(gamma, t, grid, u):
    """Cotangent state induced by a Hamilton-Jacobi section: restriction
    of the section lift."""
    from .hj import lift_by_gamma
    return restriction_map_R(lift_by_gamma(gamma, t, grid, u))
