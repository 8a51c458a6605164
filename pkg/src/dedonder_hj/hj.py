"""Hamilton-Jacobi sections and characteristic integration.

A Hamilton-Jacobi section assigns momenta to configuration points,

    (t, x, u) -> (gamma_p, gamma_pt, gamma_px),

with gamma_p the affine slot. Verification is residual-based:

* closedness of the section as a form (component symmetry in u plus the
  mixed du-dt-dx component),
* the pointwise Hamilton-Jacobi condition

      H_u + H_px . d(gamma_px)/du + H_pt . d(gamma_pt)/du
          + d(gamma_px)/dx + d(gamma_pt)/dt = 0

  with H-partials evaluated at the lifted point,
* flatness of the induced connection Gamma_i = dH/dp_i composed with the
  section.

For a verified section, the field equations reduce to the decoupled
per-node characteristic ODE du/dt = Gamma_0(t, x, u); lifting the
characteristic flow back by the section reproduces a solution of the full
first-order system, which `hj_lift_solution_check` certifies through the
Cauchy-space pairing residuals.
"""

from dataclasses import dataclass

import numpy as np

from .cauchy import (CauchyState, TangentVariation,
                     dynamical_trajectory_residual, gradient_fields,
                     pairing_against_many, random_smooth_variation,
                     standard_test_variations, time_derivative_frames,
                     variation_norm)
from .legendre import ConnectionCoefficients
from .models import DEFAULT_FD_STEP, ModelError


class GammaDomainError(ValueError):
    """Section evaluated outside its admissible domain (e.g. near a pole)."""


class IncompatibleDataError(RuntimeError):
    """Initial data is not an integral submanifold of the restricted
    connection; certification refused."""

    def __init__(self, residual, tol):
        super().__init__(f"initial data incompatible with the restricted "
                         f"connection: residual {residual:.6e} > tol {tol:.3e}")
        self.residual = residual
        self.tol = tol


class HJSection:
    """Momentum-valued section with partial-derivative access.

    Component callables take ``(t, x, u)`` and broadcast over a trailing
    node axis: ``pt -> (n, ...)``, ``px -> (n, m, ...)``, ``p -> (...)``.
    Analytic partials may be supplied via the ``partials`` hook returning
    a dict with keys

        "pt_t" (n,...), "pt_x" (n,m,...), "pt_u" (n,n,...),
        "px_t" (n,m,...), "px_x" (n,m,m,...), "px_u" (n,m,n,...),
        "p_t" (...), "p_x" (m,...), "p_u" (n,...)

    otherwise central finite differences of the components are used.
    """

    def __init__(self, dims, pt, px, p=None, partials=None, name="gamma",
                 fd_step=DEFAULT_FD_STEP, domain_guard=None):
        self.dims = dims
        self.name = name
        self.fd_step = float(fd_step)
        self._pt = pt
        self._px = px
        self._p = p if p is not None else (lambda t, x, u: np.zeros(np.shape(np.asarray(u)[0])))
        self._partials = partials
        self._guard = domain_guard

    def _check(self, t):
        if self._guard is not None:
            self._guard(t)

    def pt(self, t, x, u):
        self._check(t)
        return np.asarray(self._pt(t, x, u), dtype=float)

    def px(self, t, x, u):
        self._check(t)
        return np.asarray(self._px(t, x, u), dtype=float)

    def p(self, t, x, u):
        self._check(t)
        return np.asarray(self._p(t, x, u), dtype=float)

    def partials(self, t, x, u):
        self._check(t)
        if self._partials is not None:
            return self._partials(t, x, u)
        n, m = self.dims.n, self.dims.m
        s = self.fd_step
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        out = {}
        out["pt_t"] = (self.pt(t + s, x, u) - self.pt(t - s, x, u)) / (2 * s)
        out["px_t"] = (self.px(t + s, x, u) - self.px(t - s, x, u)) / (2 * s)
        out["p_t"] = (self.p(t + s, x, u) - self.p(t - s, x, u)) / (2 * s)
        tail = np.shape(u[0])
        pt_x = np.zeros((n, m) + tail)
        px_x = np.zeros((n, m, m) + tail)
        p_x = np.zeros((m,) + tail)
        for j in range(m):
            hi, lo = x.copy(), x.copy()
            hi[j] += s
            lo[j] -= s
            pt_x[:, j] = (self.pt(t, hi, u) - self.pt(t, lo, u)) / (2 * s)
            px_x[:, :, j] = (self.px(t, hi, u) - self.px(t, lo, u)) / (2 * s)
            p_x[j] = (self.p(t, hi, u) - self.p(t, lo, u)) / (2 * s)
        out["pt_x"] = pt_x
        out["px_x"] = px_x
        out["p_x"] = p_x
        pt_u = np.zeros((n, n) + tail)
        px_u = np.zeros((n, m, n) + tail)
        p_u = np.zeros((n,) + tail)
        for b in range(n):
            hi, lo = u.copy(), u.copy()
            hi[b] += s
            lo[b] -= s
            pt_u[:, b] = (self.pt(t, x, hi) - self.pt(t, x, lo)) / (2 * s)
            px_u[:, :, b] = (self.px(t, x, hi) - self.px(t, x, lo)) / (2 * s)
            p_u[b] = (self.p(t, x, hi) - self.p(t, x, lo)) / (2 * s)
        out["pt_u"] = pt_u
        out["px_u"] = px_u
        out["p_u"] = p_u
        return out


# -- built-in section families ----------------------------------------------

def linear_gamma(dims, a, b=0.0, c=0.0, d=0.0, p_const=0.0):
    """gamma_pt = a u + b, gamma_px = c u + d (componentwise), gamma_p
    constant. Closed for any parameters."""
    n, m = dims.n, dims.m
    a, b, c, d, p_const = (float(v) for v in (a, b, c, d, p_const))

    def pt(t, x, u):
        return a * np.asarray(u, dtype=float) + b

    def px(t, x, u):
        u = np.asarray(u, dtype=float)
        return np.broadcast_to((c * u + d)[:, None], (n, m) + u.shape[1:]).copy()

    def p(t, x, u):
        u = np.asarray(u, dtype=float)
        return np.full(u.shape[1:], p_const)

    def partials(t, x, u):
        u = np.asarray(u, dtype=float)
        tail = u.shape[1:]
        eye = np.eye(n).reshape((n, n) + (1,) * len(tail))
        ones = np.ones((1,) * 2 + tail) if tail else 1.0
        return {
            "pt_t": np.zeros((n,) + tail),
            "pt_x": np.zeros((n, m) + tail),
            "pt_u": a * eye * ones if tail else a * np.eye(n),
            "px_t": np.zeros((n, m) + tail),
            "px_x": np.zeros((n, m, m) + tail),
            "px_u": (c * eye)[:, None] * np.ones((1, m, 1) + tail)
                    if m else np.zeros((n, 0, n) + tail),
            "p_t": np.zeros(tail),
            "p_x": np.zeros((m,) + tail),
            "p_u": np.zeros((n,) + tail),
        }

    return HJSection(dims, pt, px, p=p, partials=partials, name="linear_gamma")


def oscillator_gamma(dims, omega, phi=0.0, pole_tol=1e-3):
    """gamma_pt = a(t) u with a(t) = -omega tan(omega t + phi), gamma_px = 0
    and gamma_p = a'(t) |u|^2 / 2, which makes the section closed.

    Solves the Hamilton-Jacobi condition for the oscillator (m = 0) and
    for the mass-omega Klein-Gordon model (m = 1) since a' + a^2 + omega^2
    = 0. Evaluation refuses within ``pole_tol`` of the poles of tan.
    """
    n, m = dims.n, dims.m
    omega = float(omega)
    phi = float(phi)

    def guard(t):
        if omega == 0.0:
            return
        z = omega * t + phi
        w = (z - np.pi / 2.0) % np.pi
        if min(w, np.pi - w) < pole_tol:
            raise GammaDomainError(
                f"oscillator section evaluated within {pole_tol:g} of a "
                f"tan pole (omega t + phi = {z:.6f})")

    def a(t):
        return -omega * np.tan(omega * t + phi)

    def a_prime(t):
        return -omega ** 2 / np.cos(omega * t + phi) ** 2

    def a_second(t):
        z = omega * t + phi
        return -2.0 * omega ** 3 * np.tan(z) / np.cos(z) ** 2

    def pt(t, x, u):
        return a(t) * np.asarray(u, dtype=float)

    def px(t, x, u):
        u = np.asarray(u, dtype=float)
        return np.zeros((n, m) + u.shape[1:])

    def p(t, x, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * a_prime(t) * np.sum(u ** 2, axis=0)

    def partials(t, x, u):
        u = np.asarray(u, dtype=float)
        tail = u.shape[1:]
        eye = np.eye(n).reshape((n, n) + (1,) * len(tail))
        return {
            "pt_t": a_prime(t) * u,
            "pt_x": np.zeros((n, m) + tail),
            "pt_u": a(t) * eye * np.ones((1, 1) + tail),
            "px_t": np.zeros((n, m) + tail),
            "px_x": np.zeros((n, m, m) + tail),
            "px_u": np.zeros((n, m, n) + tail),
            "p_t": 0.5 * a_second(t) * np.sum(u ** 2, axis=0),
            "p_x": np.zeros((m,) + tail),
            "p_u": a_prime(t) * u,
        }

    return HJSection(dims, pt, px, p=p, partials=partials,
                     name="oscillator_gamma", domain_guard=guard)


GAMMA_FAMILIES = ("linear", "oscillator")


def gamma_family(name, dims, params=None):
    """Construct a named section family; used by scenario configs."""
    params = dict(params or {})
    if name == "linear":
        return linear_gamma(dims, a=params.pop("a", 0.0),
                            b=params.pop("b", 0.0), c=params.pop("c", 0.0),
                            d=params.pop("d", 0.0),
                            p_const=params.pop("p_const", 0.0))
    if name == "oscillator":
        return oscillator_gamma(dims, omega=params.pop("omega", 1.0),
                                phi=params.pop("phi", 0.0),
                                pole_tol=params.pop("pole_tol", 1e-3))
    raise ModelError(f"unknown gamma family {name!r}; known: "
                     + ", ".join(GAMMA_FAMILIES))


# -- verification residuals ---------------------------------------------------

@dataclass
class ClosednessResidual:
    """Exterior-derivative components of the section at sample points."""
    symmetry_t: np.ndarray    # (P, n, n): d(gamma_pt_a)/du_b antisymmetrized
    symmetry_x: np.ndarray    # (P, m, n, n)
    mixed: np.ndarray         # (P, n): d(gamma_p)/du - d_t gamma_pt - d_x gamma_px

    def max_abs(self):
        vals = [np.max(np.abs(a)) if a.size else 0.0
                for a in (self.symmetry_t, self.symmetry_x, self.mixed)]
        return float(max(vals))


def gamma_closedness_residual(gamma, samples):
    """Closedness residuals at a list of (t, x, u) samples."""
    n, m = gamma.dims.n, gamma.dims.m
    P = len(samples)
    sym_t = np.zeros((P, n, n))
    sym_x = np.zeros((P, m, n, n))
    mixed = np.zeros((P, n))
    for k, (t, x, u) in enumerate(samples):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        d = gamma.partials(t, x, u)
        pt_u = np.asarray(d["pt_u"], dtype=float)
        sym_t[k] = pt_u - pt_u.T
        px_u = np.asarray(d["px_u"], dtype=float)
        for j in range(m):
            sym_x[k, j] = px_u[:, j, :] - px_u[:, j, :].T
        mixed[k] = (np.asarray(d["p_u"], dtype=float)
                    - np.asarray(d["pt_t"], dtype=float))
        if m:
            mixed[k] -= np.einsum("ajj->a",
                                  np.asarray(d["px_x"], dtype=float))
    return ClosednessResidual(symmetry_t=sym_t, symmetry_x=sym_x, mixed=mixed)


def hj_residual(H, gamma, t, x, u):
    """Pointwise Hamilton-Jacobi residual per field component.

    Zero together with closedness certifies the section as a solution of
    the Hamilton-Jacobi condition for H.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    pt = gamma.pt(t, x, u)
    px = gamma.px(t, x, u)
    args = (t, x, u, pt, px)
    h_u = H.d_u(*args)
    h_pt = H.d_pt(*args)
    h_px = H.d_px(*args)
    d = gamma.partials(t, x, u)
    res = h_u.astype(float).copy()
    res += np.einsum("b,ba->a", h_pt, np.asarray(d["pt_u"], dtype=float))
    if gamma.dims.m:
        res += np.einsum("bj,bja->a", h_px, np.asarray(d["px_u"], dtype=float))
        res += np.einsum("ajj->a", np.asarray(d["px_x"], dtype=float))
    res += np.asarray(d["pt_t"], dtype=float)
    return res


def reduced_connection(H, gamma):
    """Connection on the configuration bundle induced by the section:
    Gamma^a_i = dH/dp^i_a at the lifted point (time slot first). Partials
    come from the chain rule when both H and the section expose them."""
    dims = H.dims
    n, m = dims.n, dims.m

    def coefficients(t, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        pt = gamma.pt(t, x, u)
        px = gamma.px(t, x, u)
        return H.d_momenta(t, x, u, pt, px)

    def partials(t, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        pt = gamma.pt(t, x, u)
        px = gamma.px(t, x, u)
        J = H.momentum_jacobian(t, x, u, pt, px)
        g = gamma.partials(t, x, u)
        pt_t = np.asarray(g["pt_t"], dtype=float)
        px_t = np.asarray(g["px_t"], dtype=float)
        pt_x = np.asarray(g["pt_x"], dtype=float)
        px_x = np.asarray(g["px_x"], dtype=float)
        pt_u = np.asarray(g["pt_u"], dtype=float)
        px_u = np.asarray(g["px_u"], dtype=float)
        d_t = (J["t"] + np.einsum("aib,b->ai", J["p_t"], pt_t)
               + (np.einsum("aibj,bj->ai", J["p_x"], px_t) if m else 0.0))
        d_x = np.zeros((n, m + 1, m))
        for k in range(m):
            d_x[:, :, k] = (J["x"][:, :, k]
                            + np.einsum("aib,b->ai", J["p_t"], pt_x[:, k])
                            + np.einsum("aibj,bj->ai", J["p_x"], px_x[:, :, k]))
        d_u = np.zeros((n, m + 1, n))
        for b in range(n):
            d_u[:, :, b] = (J["u"][:, :, b]
                            + np.einsum("aic,c->ai", J["p_t"], pt_u[:, b])
                            + (np.einsum("aicj,cj->ai", J["p_x"], px_u[:, :, b])
                               if m else 0.0))
        return {"t": d_t, "x": d_x, "u": d_u}

    return ConnectionCoefficients(dims, coefficients, partials=partials)


def restricted_connection_residual(H, gamma, grid, u, t):
    """Per-node residual (D u^a)_j - Gamma^a_j(t, x_j, u_j); zero means the
    field is an integral submanifold of the fixed-time restricted
    connection. Vacuously zero for m = 0."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    if grid.m == 0:
        return np.zeros((n, 0, 1))
    pt = gamma.pt(t, grid.x, u)
    px = gamma.px(t, grid.x, u)
    gamma_x = H.d_px(t, grid.x, u, pt, px)       # (n, m, N)
    return gradient_fields(grid, u) - gamma_x


class CharacteristicBlowup(RuntimeError):
    """Characteristic integration exceeded the configured bound."""


def evolve_characteristics(H, gamma, grid, u0, t0, dt, t_final,
                           store_every=1, blowup=1e6):
    """Integrate the per-node characteristic ODE du/dt = Gamma_0(t, x, u)
    with RK4; no spatial coupling enters. Returns (times, u_frames)."""
    if dt <= 0:
        raise ModelError("dt must be positive")
    u = np.array(u0, dtype=float)
    n_steps = int(round((t_final - t0) / dt))
    if abs(t0 + n_steps * dt - t_final) > 1e-9 * max(1.0, abs(t_final)):
        raise ModelError("t_final - t0 must be an integer number of steps")

    def rhs(t, uu):
        pt = gamma.pt(t, grid.x, uu)
        px = gamma.px(t, grid.x, uu)
        return H.d_pt(t, grid.x, uu, pt, px)

    frames = [u.copy()]
    times = [t0]
    t = t0
    for k in range(n_steps):
        k1 = rhs(t, u)
        k2 = rhs(t + dt / 2, u + dt / 2 * k1)
        k3 = rhs(t + dt / 2, u + dt / 2 * k2)
        k4 = rhs(t + dt, u + dt * k3)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (k + 1) * dt
        if np.max(np.abs(u)) > blowup:
            raise CharacteristicBlowup(f"|u| exceeded {blowup:g} at step {k + 1}")
        if (k + 1) % store_every == 0 or k + 1 == n_steps:
            frames.append(u.copy())
            times.append(t)
    return np.asarray(times), np.stack(frames)


def lift_by_gamma(gamma, t, grid, u):
    """Cauchy state with momenta read off the section at every node."""
    u = np.asarray(u, dtype=float)
    return CauchyState(t, u, gamma.pt(t, grid.x, u), gamma.px(t, grid.x, u))


def lift_variation(gamma, t, grid, u, k, du):
    """Pushforward of a configuration-space variation (k, du) through the
    section lift: momenta vary by k d_t gamma + d_u gamma . du."""
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    d = gamma.partials(t, grid.x, u)
    dpt = k * np.asarray(d["pt_t"], dtype=float) \
        + np.einsum("ab...,b...->a...", np.asarray(d["pt_u"], dtype=float), du)
    if grid.m:
        dpx = k * np.asarray(d["px_t"], dtype=float) \
            + np.einsum("ajb...,b...->aj...", np.asarray(d["px_u"], dtype=float), du)
    else:
        dpx = np.zeros((u.shape[0], 0, grid.n_nodes))
    return TangentVariation(k, du, dpt, dpx)


def connection_lift_vector(H, gamma, grid, t, u):
    """Tangent vector of the lifted characteristic flow: the horizontal
    generator (k = 1, du = Gamma_0) pushed through the section."""
    u = np.asarray(u, dtype=float)
    pt = gamma.pt(t, grid.x, u)
    px = gamma.px(t, grid.x, u)
    gamma0 = H.d_pt(t, grid.x, u, pt, px)
    return lift_variation(gamma, t, grid, u, 1.0, gamma0)


@dataclass
class HJLiftReport:
    """Residual classes of a lifted characteristic trajectory."""
    compatibility_residual: float
    split_residual: float         # field-equation residual of the lifted curve
    contraction_residual: float   # pairing of the lifted horizontal generator
    pullback_residual: float      # pairing of two lifted variations
    frames_checked: int

    def max_residual(self):
        return max(self.split_residual, self.contraction_residual,
                   self.pullback_residual)


def hj_lift_solution_check(H, gamma, grid, times, u_frames, test_set=None,
                           rng=None, compat_tol=None, n_pullback_pairs=8,
                           frame_stride=None):
    """Certify a characteristic trajectory by lifting it with the section
    and measuring three residual classes against the pairing.

    Refuses (raises :class:`IncompatibleDataError`) when the initial frame
    is not an integral submanifold of the restricted connection within
    ``compat_tol`` (default 10 h^2 for m = 1).
    """
    times = np.asarray(times, dtype=float)
    u_frames = np.asarray(u_frames, dtype=float)
    n = u_frames.shape[1]
    if len(times) < 5:
        raise ModelError("need at least 5 stored frames")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt):
        raise ModelError("frames must be uniformly spaced in time")
    if compat_tol is None:
        compat_tol = 10.0 * grid.spacing ** 2 if grid.m else 1e-10
    compat = restricted_connection_residual(H, gamma, grid, u_frames[0],
                                            times[0])
    compat_res = float(np.max(np.abs(compat))) if compat.size else 0.0
    if compat_res > compat_tol:
        raise IncompatibleDataError(compat_res, compat_tol)

    rng = rng if rng is not None else np.random.default_rng(0)
    if test_set is None:
        test_set = standard_test_variations(grid, n, rng=rng)
    states = [lift_by_gamma(gamma, t, grid, u)
              for t, u in zip(times, u_frames)]
    u_dot = time_derivative_frames(np.stack([s.u for s in states]), dt)
    pt_dot = time_derivative_frames(np.stack([s.p_t for s in states]), dt)
    px_dot = time_derivative_frames(np.stack([s.p_x for s in states]), dt)

    K = len(times)
    if frame_stride is None:
        frame_stride = max(1, K // 32)
    idx = list(range(0, K, frame_stride))
    if idx[-1] != K - 1:
        idx.append(K - 1)

    split = 0.0
    contraction = 0.0
    pullback = 0.0
    pair_specs = [(random_smooth_variation(grid, n, rng, vertical=False),
                   random_smooth_variation(grid, n, rng, vertical=False))
                  for _ in range(n_pullback_pairs)]
    for k in idx:
        state = states[k]
        split = max(split, dynamical_trajectory_residual(
            H, grid, state, (u_dot[k], pt_dot[k], px_dot[k]), test_set))
        X = connection_lift_vector(H, gamma, grid, times[k], u_frames[k])
        vals = pairing_against_many(H, grid, state, X, test_set)
        norms = np.array([variation_norm(grid, xi) for xi in test_set])
        contraction = max(contraction, float(np.max(np.abs(vals) / (1 + norms))))
        for V, W in pair_specs:
            lv = lift_variation(gamma, times[k], grid, u_frames[k], V.k, V.du)
            lw = lift_variation(gamma, times[k], grid, u_frames[k], W.k, W.du)
            vals2 = pairing_against_many(H, grid, state, lv, [lw])
            pullback = max(pullback, float(abs(vals2[0])))
    return HJLiftReport(compatibility_residual=compat_res,
                        split_residual=split,
                        contraction_residual=contraction,
                        pullback_residual=pullback,
                        frames_checked=len(idx))
