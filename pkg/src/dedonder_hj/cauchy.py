"""Discretized Cauchy data space over a periodic spatial grid.

A state of the field system at fixed time is (u, p_t, p_x) sampled on N
uniform nodes of a circle of length l (a single weight-one node when
m = 0). The first-order field equations split into time evolution

    du/dt   = dH/dp_t
    dp_t/dt = -dH/du - sum_j d(p^j)/dx^j

plus the spatial constraint du/dx^j = dH/dp^j, which determines p_x from
u at every evaluation; p_x is recovered, never evolved.

The pairing of two tangent variations X, Y at a state integrates, node by
node,

    [X(H) k_Y - Y(H) k_X] + [X_u Y_{p_t} - X_{p_t} Y_u]
    + k_X [Y_{p_x} . D u - Y_u . D p_x] - k_Y [X_{p_x} . D u - X_u . D p_x]

where k is the time component of a variation, D the periodic central
difference and X(H) = H_u X_u + H_{p_t} X_{p_t} + H_{p_x} X_{p_x} + k_X H_t.
Contracting with a trajectory velocity (k = 1) and spanning vertical test
variations reproduces exactly the split field equations above, which is
what the trajectory residual measures.
"""

from dataclasses import dataclass

import numpy as np

from .legendre import NEWTON_MAX_ITER, NEWTON_TOL, NewtonError
from .models import ModelError

#: amplitude of the deterministic and random smooth test variations;
#: sized so normalized residuals of O(h^2)-accurate trajectories stay
#: comparable across grid refinement.
VARIATION_SCALE = 0.25


class GridError(ValueError):
    """Bad grid construction or use."""


class BlowupError(RuntimeError):
    """State magnitude exceeded the configured bound during integration."""


@dataclass(frozen=True)
class CauchyGrid:
    """Uniform periodic grid on a circle of length ``length`` (m = 1) or a
    single point with unit weight (m = 0)."""
    m: int
    n_nodes: int
    length: float
    spacing: float
    x: np.ndarray          # (m, N) node coordinates
    weights: np.ndarray    # (N,) quadrature weights


def make_grid(n_nodes, length=1.0, m=1):
    if n_nodes < 1:
        raise GridError("n_nodes must be >= 1")
    if length <= 0:
        raise GridError("length must be positive")
    if m == 0:
        if n_nodes != 1:
            raise GridError("m = 0 requires a single node")
        return CauchyGrid(m=0, n_nodes=1, length=1.0, spacing=1.0,
                          x=np.zeros((0, 1)), weights=np.ones(1))
    if m != 1:
        raise GridError("only m in {0, 1} is supported at runtime")
    h = length / n_nodes
    x = (np.arange(n_nodes) * h)[None, :]
    w = np.full(n_nodes, h)
    return CauchyGrid(m=1, n_nodes=n_nodes, length=float(length),
                      spacing=h, x=x, weights=w)


def spatial_derivative(grid, values):
    """Second-order periodic central difference along the node axis."""
    values = np.asarray(values, dtype=float)
    if grid.m == 0:
        return np.zeros_like(values)
    if grid.n_nodes < 3:
        raise GridError("central differences need at least 3 nodes")
    return (np.roll(values, -1, axis=-1)
            - np.roll(values, 1, axis=-1)) / (2.0 * grid.spacing)


def integrate_density(grid, values):
    """Quadrature sum_j w_j values_j over the node axis."""
    values = np.asarray(values, dtype=float)
    out = np.sum(values * grid.weights, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def gradient_fields(grid, values):
    """Spatial derivatives of per-node fields along each axis, (..., m, N)."""
    values = np.asarray(values, dtype=float)
    out = np.empty(values.shape[:-1] + (grid.m, grid.n_nodes))
    for j in range(grid.m):
        out[..., j, :] = spatial_derivative(grid, values)
    return out


@dataclass(frozen=True)
class CauchyState:
    """Time value plus per-node fields (u, p_t, p_x)."""
    t: float
    u: np.ndarray      # (n, N)
    p_t: np.ndarray    # (n, N)
    p_x: np.ndarray    # (n, m, N)

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "p_t", np.asarray(self.p_t, dtype=float))
        object.__setattr__(self, "p_x", np.asarray(self.p_x, dtype=float))
        for name in ("u", "p_t", "p_x"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ModelError(f"non-finite field {name}")

    @property
    def n(self):
        return self.u.shape[0]


@dataclass(frozen=True)
class TangentVariation:
    """Tangent vector to the Cauchy data space: time component k plus
    vertical per-node components."""
    k: float
    du: np.ndarray     # (n, N)
    dp_t: np.ndarray   # (n, N)
    dp_x: np.ndarray   # (n, m, N)

    def __post_init__(self):
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "du", np.asarray(self.du, dtype=float))
        object.__setattr__(self, "dp_t", np.asarray(self.dp_t, dtype=float))
        object.__setattr__(self, "dp_x", np.asarray(self.dp_x, dtype=float))


def zero_variation(grid, n):
    shape = (n, grid.n_nodes)
    return TangentVariation(0.0, np.zeros(shape), np.zeros(shape),
                            np.zeros((n, grid.m, grid.n_nodes)))


def variation_norm(grid, X):
    """sqrt(k^2 + integral of |du|^2 + |dp_t|^2 + |dp_x|^2)."""
    total = X.k ** 2
    total += integrate_density(grid, np.sum(X.du ** 2, axis=0))
    total += integrate_density(grid, np.sum(X.dp_t ** 2, axis=0))
    if X.dp_x.size:
        total += integrate_density(grid, np.sum(X.dp_x ** 2, axis=(0, 1)))
    return float(np.sqrt(total))


def recover_spatial_momenta(H, grid, u, p_t=None, t=0.0, guess=None,
                            tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Solve the spatial constraint dH/dp^j_a = (D u^a)_j for p_x at every
    node (vectorized Newton with damping)."""
    u = np.asarray(u, dtype=float)
    n, N = u.shape
    m = grid.m
    if m == 0:
        return np.zeros((n, 0, N))
    if p_t is None:
        p_t = np.zeros_like(u)
    target = gradient_fields(grid, u)                  # (n, m, N)
    p_x = (np.zeros((n, m, N)) if guess is None
           else np.array(guess, dtype=float))

    def residual(px):
        return H.d_px(t, grid.x, u, p_t, px) - target

    r = residual(p_x)
    rnorm = np.max(np.abs(r))
    step_fd = getattr(H, "fd_step", 1e-6)
    nm = n * m
    for _ in range(max_iter):
        if rnorm <= tol:
            return p_x
        # per-node Jacobian of dH/dp_x in p_x, shape (N, nm, nm)
        J = np.empty((N, nm, nm))
        flat = p_x.reshape(nm, N)
        for k in range(nm):
            hi = flat.copy()
            lo = flat.copy()
            hi[k] += step_fd
            lo[k] -= step_fd
            gh = H.d_px(t, grid.x, u, p_t, hi.reshape(n, m, N))
            gl = H.d_px(t, grid.x, u, p_t, lo.reshape(n, m, N))
            J[:, :, k] = ((gh - gl) / (2 * step_fd)).reshape(nm, N).T
        try:
            step = np.linalg.solve(J, r.reshape(nm, N).T[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise NewtonError(f"singular momentum Jacobian: {exc}") from exc
        step = step.T.reshape(n, m, N)
        scale = 1.0
        for _ in range(30):
            trial = p_x - scale * step
            r_trial = residual(trial)
            r_trial_norm = np.max(np.abs(r_trial))
            if r_trial_norm < rnorm or r_trial_norm <= tol:
                p_x, r, rnorm = trial, r_trial, r_trial_norm
                break
            scale *= 0.5
        else:
            raise NewtonError("momentum recovery stalled")
    if rnorm <= tol:
        return p_x
    raise NewtonError(f"momentum recovery: no convergence (residual {rnorm:.3e})")


@dataclass
class HdwRhs:
    u_dot: np.ndarray
    p_t_dot: np.ndarray
    p_x: np.ndarray


def hdw_rhs(H, grid, state):
    """Method-of-lines right-hand side of the split field equations."""
    p_x = recover_spatial_momenta(H, grid, state.u, p_t=state.p_t, t=state.t,
                                  guess=state.p_x if state.p_x.size else None)
    args = (state.t, grid.x, state.u, state.p_t, p_x)
    u_dot = H.d_pt(*args)
    p_t_dot = -H.d_u(*args)
    for j in range(grid.m):
        p_t_dot = p_t_dot - spatial_derivative(grid, p_x[:, j, :])
    return HdwRhs(u_dot=u_dot, p_t_dot=p_t_dot, p_x=p_x)


def step_rk4(H, grid, state, dt):
    """Classical fourth-order Runge-Kutta step on (u, p_t); the spatial
    momenta are recovered at every stage and on the returned state."""
    if dt <= 0:
        raise ModelError("dt must be positive")

    def rhs(t, u, p_t):
        s = CauchyState(t, u, p_t, np.zeros((u.shape[0], grid.m, grid.n_nodes)))
        out = hdw_rhs(H, grid, s)
        return out.u_dot, out.p_t_dot

    t, u, p = state.t, state.u, state.p_t
    k1u, k1p = rhs(t, u, p)
    k2u, k2p = rhs(t + dt / 2, u + dt / 2 * k1u, p + dt / 2 * k1p)
    k3u, k3p = rhs(t + dt / 2, u + dt / 2 * k2u, p + dt / 2 * k2p)
    k4u, k4p = rhs(t + dt, u + dt * k3u, p + dt * k3p)
    u_new = u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
    p_new = p + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    t_new = t + dt
    p_x_new = recover_spatial_momenta(H, grid, u_new, p_t=p_new, t=t_new)
    return CauchyState(t_new, u_new, p_new, p_x_new)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list

    def frame_arrays(self):
        u = np.stack([s.u for s in self.states])
        p_t = np.stack([s.p_t for s in self.states])
        p_x = np.stack([s.p_x for s in self.states])
        return u, p_t, p_x


def run_simulation(H, grid, state0, dt, n_steps, store_every=1, blowup=1e8):
    """Integrate ``n_steps`` RK4 steps, storing every ``store_every``-th
    state (the initial and final states always included)."""
    states = [state0]
    times = [state0.t]
    state = state0
    for k in range(n_steps):
        state = step_rk4(H, grid, state, dt)
        if blowup is not None and np.max(np.abs(state.u)) > blowup:
            raise BlowupError(f"|u| exceeded {blowup:g} at step {k + 1}")
        if (k + 1) % store_every == 0 or k + 1 == n_steps:
            states.append(state)
            times.append(state.t)
    return Trajectory(times=np.asarray(times), states=states)


# -- presymplectic pairing ---------------------------------------------------

def _state_pairing_data(H, grid, state):
    """State-dependent fields of the pairing integrand."""
    args = (state.t, grid.x, state.u, state.p_t, state.p_x)
    h_u = H.d_u(*args)
    h_pt = H.d_pt(*args)
    h_px = H.d_px(*args)
    h_t = np.broadcast_to(np.asarray(H.d_t(*args), dtype=float),
                          (grid.n_nodes,))
    du_grid = gradient_fields(grid, state.u)            # (n, m, N)
    dpx_grid = np.empty_like(state.p_x)
    for j in range(grid.m):
        dpx_grid[:, j, :] = spatial_derivative(grid, state.p_x[:, j, :])
    return h_u, h_pt, h_px, h_t, du_grid, dpx_grid


def _directional_h(data, X):
    h_u, h_pt, h_px, h_t = data[:4]
    out = np.sum(h_u * X.du, axis=0) + np.sum(h_pt * X.dp_t, axis=0)
    if h_px.size:
        out = out + np.sum(h_px * X.dp_x, axis=(0, 1))
    return out + X.k * h_t


def _momentum_bracket(data, X):
    du_grid, dpx_grid = data[4], data[5]
    if du_grid.size == 0:
        return 0.0
    return (np.sum(X.dp_x * du_grid, axis=(0, 1))
            - np.sum(X.du[:, None, :] * dpx_grid, axis=(0, 1)))


def presymplectic_pairing(H, grid, state, X, Y, _data=None):
    """Pairing of two tangent variations at a state; bilinear and exactly
    antisymmetric by construction."""
    data = _state_pairing_data(H, grid, state) if _data is None else _data
    XH = _directional_h(data, X)
    YH = _directional_h(data, Y)
    # grouped so that swapping X and Y negates every floating-point term
    t_energy = XH * Y.k - YH * X.k
    t_canonical = np.sum(X.du * Y.dp_t - X.dp_t * Y.du, axis=0)
    t_momentum = X.k * _momentum_bracket(data, Y) \
        - Y.k * _momentum_bracket(data, X)
    return integrate_density(grid, (t_energy + t_canonical) + t_momentum)


def pairing_against_many(H, grid, state, X, variations):
    """Pairing of X against a list of variations, sharing the state data."""
    data = _state_pairing_data(H, grid, state)
    return np.array([presymplectic_pairing(H, grid, state, X, Y, _data=data)
                     for Y in variations])


def dynamical_trajectory_residual(H, grid, state, state_dot, test_set):
    """max over test variations of |pairing(c_dot, xi)| / (1 + |xi|) with
    the trajectory velocity assembled from ``state_dot`` and k = 1.

    ``state_dot`` is (u_dot, p_t_dot, p_x_dot).
    """
    if not test_set:
        raise ModelError("test_set must be nonempty")
    u_dot, p_t_dot, p_x_dot = state_dot
    c_dot = TangentVariation(1.0, u_dot, p_t_dot, p_x_dot)
    values = pairing_against_many(H, grid, state, c_dot, test_set)
    norms = np.array([variation_norm(grid, xi) for xi in test_set])
    return float(np.max(np.abs(values) / (1.0 + norms)))


# -- test variation sets -----------------------------------------------------

def _smooth_profile(grid, rng, n, scale, n_modes=4):
    """Random smooth per-node field built from low Fourier modes; the draw
    sequence is grid-independent so refinement studies sample the same
    underlying functions."""
    if grid.m == 0:
        return rng.normal(scale=scale, size=(n, 1))
    xs = grid.x[0] / grid.length
    out = np.zeros((n, grid.n_nodes))
    for a in range(n):
        coeffs = rng.normal(size=(n_modes, 2))
        for mode in range(n_modes):
            sigma = scale / (1.0 + mode) ** 2
            ca, cb = sigma * coeffs[mode]
            if mode == 0:
                out[a] += ca
            else:
                out[a] += ca * np.cos(2 * np.pi * mode * xs) \
                    + cb * np.sin(2 * np.pi * mode * xs)
    return out


def random_smooth_variation(grid, n, rng, scale=VARIATION_SCALE,
                            vertical=True):
    k = 0.0 if vertical else float(rng.normal(scale=scale))
    du = _smooth_profile(grid, rng, n, scale)
    dp_t = _smooth_profile(grid, rng, n, scale)
    dp_x = np.stack([_smooth_profile(grid, rng, n, scale)
                     for _ in range(grid.m)], axis=1) \
        if grid.m else np.zeros((n, 0, grid.n_nodes))
    return TangentVariation(k, du, dp_t, dp_x)


def _fill(component, n, grid, field):
    base = zero_variation(grid, n)
    parts = {"du": base.du.copy(), "dp_t": base.dp_t.copy(),
             "dp_x": base.dp_x.copy()}
    parts[component] = field
    return TangentVariation(0.0, parts["du"], parts["dp_t"], parts["dp_x"])


def deterministic_probe_variations(grid, n, scale=VARIATION_SCALE):
    """Constant and first-harmonic probes on each field block; these make
    residual detection independent of the random draws."""
    N = grid.n_nodes
    probes = []
    profiles = [np.full(N, scale)]
    if grid.m == 1:
        xs = grid.x[0] / grid.length
        profiles.append(scale * np.sin(2 * np.pi * xs))
        profiles.append(scale * np.cos(2 * np.pi * xs))
    for prof in profiles:
        for a in range(n):
            du = np.zeros((n, N))
            du[a] = prof
            probes.append(_fill("du", n, grid, du))
            dp_t = np.zeros((n, N))
            dp_t[a] = prof
            probes.append(_fill("dp_t", n, grid, dp_t))
            for j in range(grid.m):
                dp_x = np.zeros((n, grid.m, N))
                dp_x[a, j] = prof
                probes.append(_fill("dp_x", n, grid, dp_x))
    return probes


def indicator_variations(grid, n):
    """Unit node indicators on every component of (u, p_t, p_x)."""
    N = grid.n_nodes
    out = []
    for a in range(n):
        for jnode in range(N):
            du = np.zeros((n, N))
            du[a, jnode] = 1.0
            out.append(_fill("du", n, grid, du))
            dp_t = np.zeros((n, N))
            dp_t[a, jnode] = 1.0
            out.append(_fill("dp_t", n, grid, dp_t))
            for j in range(grid.m):
                dp_x = np.zeros((n, grid.m, N))
                dp_x[a, j, jnode] = 1.0
                out.append(_fill("dp_x", n, grid, dp_x))
    return out


def standard_test_variations(grid, n, rng=None, n_random=8,
                             include_indicators=True, vertical=True,
                             scale=VARIATION_SCALE):
    """Deterministic probes, node indicators and seeded random smooth
    variations; the default vertical test set used by residual checks."""
    rng = rng if rng is not None else np.random.default_rng(0)
    out = deterministic_probe_variations(grid, n, scale=scale)
    if include_indicators:
        out.extend(indicator_variations(grid, n))
    out.extend(random_smooth_variation(grid, n, rng, scale=scale,
                                       vertical=vertical)
               for _ in range(n_random))
    return out


def time_derivative_frames(frames, dt):
    """Fourth-order finite-difference time derivative of stored frames.

    ``frames`` has the frame index first; interior points use the central
    five-point stencil, the first and last two frames use shifted
    five-point stencils of the same order. Needs at least five frames.
    """
    frames = np.asarray(frames, dtype=float)
    K = frames.shape[0]
    if K < 5:
        raise ModelError("need at least 5 frames for time differencing")
    out = np.empty_like(frames)
    c = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    for k in range(2, K - 2):
        out[k] = sum(c[i] * frames[k - 2 + i] for i in range(5))
    fwd = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    fwd1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
    out[0] = sum(fwd[i] * frames[i] for i in range(5))
    out[1] = sum(fwd1[i] * frames[i] for i in range(5))
    out[K - 1] = -sum(fwd[i] * frames[K - 1 - i] for i in range(5))
    out[K - 2] = -sum(fwd1[i] * frames[K - 1 - i] for i in range(5))
    return out / dt
