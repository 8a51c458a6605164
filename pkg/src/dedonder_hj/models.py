"""Field-theory problem definitions on a (1+m)-dimensional base.

Fields are sections u(t, x) with n components over time plus m spatial
dimensions (m in {0, 1} at runtime, everything indexed for general m).
A Lagrangian is evaluated on first-order jet data (t, x, u, u_t, u_x),
a Hamiltonian on reduced momentum data (t, x, u, p_t, p_x) where p_t is
the temporal momentum and p_x the spatial momenta.

All evaluators broadcast over a trailing grid axis, so the same model
serves both point-level calculus and vectorized method-of-lines runs:

    u, u_t, p_t : (n,) or (n, N)
    u_x, p_x    : (n, m) or (n, m, N)
    x           : (m,) or (m, N)
    t           : scalar or (N,)

Analytic partials are used when a model supplies them; otherwise central
finite differences with a configurable step fill in.
"""

from dataclasses import dataclass

import numpy as np

DEFAULT_FD_STEP = 1e-5

BUILTIN_MODEL_NAMES = ("free_wave", "klein_gordon", "scalar_potential",
                       "mechanics_oscillator")


class ModelError(ValueError):
    """Bad model construction or evaluation request."""


@dataclass(frozen=True)
class Dimensions:
    """m spatial base dimensions plus time, n field components."""
    m: int
    n: int

    def __post_init__(self):
        if self.m not in (0, 1):
            raise ModelError(f"m must be 0 or 1, got {self.m}")
        if self.n < 1:
            raise ModelError(f"n must be >= 1, got {self.n}")

    @property
    def base_dim(self):
        """Base dimension: time plus space."""
        return self.m + 1

    @property
    def n_velocity_slots(self):
        """Number of first-derivative slots u^alpha_i, i over (t, x^j)."""
        return self.n * (self.m + 1)


def _as_field(a, shape, name):
    out = np.asarray(a, dtype=float)
    if out.shape != shape:
        raise ModelError(f"{name} must have shape {shape}, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ModelError(f"{name} contains non-finite entries")
    return out


@dataclass(frozen=True)
class JetSample:
    """First-order jet data (t, x, u, u_t, u_x) at a single base point."""
    t: float
    x: np.ndarray
    u: np.ndarray
    u_t: np.ndarray
    u_x: np.ndarray
    dims: Dimensions

    def __post_init__(self):
        m, n = self.dims.m, self.dims.n
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", _as_field(self.x, (m,), "x"))
        object.__setattr__(self, "u", _as_field(self.u, (n,), "u"))
        object.__setattr__(self, "u_t", _as_field(self.u_t, (n,), "u_t"))
        object.__setattr__(self, "u_x", _as_field(self.u_x, (n, m), "u_x"))
        if not np.isfinite(self.t):
            raise ModelError("t is not finite")


@dataclass(frozen=True)
class ExtendedMomentumSample:
    """Extended momentum data (t, x, u, p, p_t, p_x); p is the affine slot."""
    t: float
    x: np.ndarray
    u: np.ndarray
    p: float
    p_t: np.ndarray
    p_x: np.ndarray
    dims: Dimensions

    def __post_init__(self):
        m, n = self.dims.m, self.dims.n
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "x", _as_field(self.x, (m,), "x"))
        object.__setattr__(self, "u", _as_field(self.u, (n,), "u"))
        object.__setattr__(self, "p_t", _as_field(self.p_t, (n,), "p_t"))
        object.__setattr__(self, "p_x", _as_field(self.p_x, (n, m), "p_x"))
        if not (np.isfinite(self.t) and np.isfinite(self.p)):
            raise ModelError("non-finite sample entry")

    def reduced(self):
        return ReducedMomentumSample(self.t, self.x, self.u, self.p_t,
                                     self.p_x, self.dims)


@dataclass(frozen=True)
class ReducedMomentumSample:
    """Reduced momentum data (t, x, u, p_t, p_x)."""
    t: float
    x: np.ndarray
    u: np.ndarray
    p_t: np.ndarray
    p_x: np.ndarray
    dims: Dimensions

    def __post_init__(self):
        m, n = self.dims.m, self.dims.n
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", _as_field(self.x, (m,), "x"))
        object.__setattr__(self, "u", _as_field(self.u, (n,), "u"))
        object.__setattr__(self, "p_t", _as_field(self.p_t, (n,), "p_t"))
        object.__setattr__(self, "p_x", _as_field(self.p_x, (n, m), "p_x"))
        if not np.isfinite(self.t):
            raise ModelError("t is not finite")


def finite_difference_partial(f, point, axis=0, step=DEFAULT_FD_STEP):
    """Central difference (f(p + s e_axis) - f(p - s e_axis)) / (2 s).

    ``point`` may be a scalar or a 1-d array; ``axis`` indexes into it.
    """
    if step <= 0:
        raise ModelError("step must be positive")
    p = np.atleast_1d(np.asarray(point, dtype=float))
    hi = p.copy()
    lo = p.copy()
    hi[axis] += step
    lo[axis] -= step
    if np.isscalar(point) or np.asarray(point).ndim == 0:
        fhi, flo = f(hi[0]), f(lo[0])
    else:
        fhi, flo = f(hi), f(lo)
    out = (fhi - flo) / (2.0 * step)
    if not np.all(np.isfinite(out)):
        raise ModelError("non-finite function value in finite difference")
    return out


def pack_velocities(u_t, u_x):
    """Stack (u_t, u_x) into the flat velocity vector; slots are u_t first,
    then u_x in component-major order."""
    u_t = np.asarray(u_t, dtype=float)
    u_x = np.asarray(u_x, dtype=float)
    n, m = u_x.shape[0], u_x.shape[1]
    tail = u_x.shape[2:]
    return np.concatenate([u_t, u_x.reshape((n * m,) + tail)], axis=0)


def unpack_velocities(v, dims):
    """Inverse of :func:`pack_velocities`."""
    v = np.asarray(v, dtype=float)
    n, m = dims.n, dims.m
    tail = v.shape[1:]
    return v[:n], v[n:].reshape((n, m) + tail)


@dataclass
class LagrangianValue:
    """Value and first partials of L at a jet sample."""
    value: float
    d_u: np.ndarray
    d_ut: np.ndarray
    d_ux: np.ndarray


@dataclass
class HamiltonianValue:
    """Value and first partials of H at a reduced momentum sample."""
    value: float
    d_u: np.ndarray
    d_pt: np.ndarray
    d_px: np.ndarray
    d_t: float


class LagrangianModel:
    """Pointwise Lagrangian with batched evaluation and optional analytic
    partials.

    ``value(t, x, u, u_t, u_x)`` must broadcast over a trailing grid axis.
    Analytic first partials, the velocity Hessian and the mixed second
    partials needed by total derivatives along sections may be supplied;
    anything missing falls back to central differences of ``value``.
    """

    def __init__(self, dims, value, *, d_u=None, d_ut=None, d_ux=None,
                 d_t=None, velocity_hessian=None, d2_vel_u=None,
                 d2_vel_t=None, d2_vel_x=None, name="custom",
                 fd_step=DEFAULT_FD_STEP, time_dependent=False):
        self.dims = dims
        self.name = name
        self.fd_step = float(fd_step)
        self.time_dependent = time_dependent
        self._value = value
        self._d_u = d_u
        self._d_ut = d_ut
        self._d_ux = d_ux
        self._d_t = d_t
        self._hess = velocity_hessian
        self._d2_vel_u = d2_vel_u
        self._d2_vel_t = d2_vel_t
        self._d2_vel_x = d2_vel_x

    @property
    def has_analytic_partials(self):
        return all(f is not None for f in (self._d_u, self._d_ut, self._d_ux))

    # -- batched evaluation ------------------------------------------------

    def value(self, t, x, u, u_t, u_x):
        out = self._value(t, x, u, u_t, u_x)
        out = np.asarray(out, dtype=float)
        if not np.all(np.isfinite(out)):
            raise ModelError(f"{self.name}: non-finite Lagrangian value")
        return out if out.ndim else float(out)

    def _fd_wrt(self, which, comp, t, x, u, u_t, u_x):
        # central difference in one component of u / u_t / u_x
        s = self.fd_step
        fields = {"u": np.asarray(u, dtype=float),
                  "u_t": np.asarray(u_t, dtype=float),
                  "u_x": np.asarray(u_x, dtype=float)}
        hi = dict(fields)
        lo = dict(fields)
        bumped = fields[which].copy()
        bumped[comp] += s
        hi[which] = bumped
        bumped = fields[which].copy()
        bumped[comp] -= s
        lo[which] = bumped
        vh = self._value(t, x, hi["u"], hi["u_t"], hi["u_x"])
        vl = self._value(t, x, lo["u"], lo["u_t"], lo["u_x"])
        return (np.asarray(vh, dtype=float) - np.asarray(vl, dtype=float)) / (2 * s)

    def d_u(self, t, x, u, u_t, u_x):
        if self._d_u is not None:
            return np.asarray(self._d_u(t, x, u, u_t, u_x), dtype=float)
        u = np.asarray(u, dtype=float)
        return np.stack([self._fd_wrt("u", a, t, x, u, u_t, u_x)
                         for a in range(self.dims.n)])

    def d_ut(self, t, x, u, u_t, u_x):
        if self._d_ut is not None:
            return np.asarray(self._d_ut(t, x, u, u_t, u_x), dtype=float)
        return np.stack([self._fd_wrt("u_t", a, t, x, u, u_t, u_x)
                         for a in range(self.dims.n)])

    def d_ux(self, t, x, u, u_t, u_x):
        n, m = self.dims.n, self.dims.m
        if self._d_ux is not None:
            return np.asarray(self._d_ux(t, x, u, u_t, u_x), dtype=float)
        u_x = np.asarray(u_x, dtype=float)
        tail = u_x.shape[2:]
        out = np.empty((n, m) + tail)
        for a in range(n):
            for j in range(m):
                out[a, j] = self._fd_wrt("u_x", (a, j), t, x, u, u_t, u_x)
        return out

    def d_t(self, t, x, u, u_t, u_x):
        if not self.time_dependent:
            base = np.asarray(np.asarray(u, dtype=float)[0], dtype=float)
            return np.zeros_like(base)
        if self._d_t is not None:
            return np.asarray(self._d_t(t, x, u, u_t, u_x), dtype=float)
        s = self.fd_step
        vh = self._value(t + s, x, u, u_t, u_x)
        vl = self._value(t - s, x, u, u_t, u_x)
        return (np.asarray(vh, dtype=float) - np.asarray(vl, dtype=float)) / (2 * s)

    def d_velocities(self, t, x, u, u_t, u_x):
        """All velocity partials packed into slot order, shape (S, ...)."""
        return pack_velocities(self.d_ut(t, x, u, u_t, u_x),
                               self.d_ux(t, x, u, u_t, u_x))

    def velocity_hessian(self, t, x, u, u_t, u_x):
        """Second partials of L in the velocity slots, shape (S, S, ...)."""
        if self._hess is not None:
            return np.asarray(self._hess(t, x, u, u_t, u_x), dtype=float)
        S = self.dims.n_velocity_slots
        s = self.fd_step
        vel = pack_velocities(np.asarray(u_t, dtype=float),
                              np.asarray(u_x, dtype=float))
        cols = []
        for k in range(S):
            hi = vel.copy()
            lo = vel.copy()
            hi[k] += s
            lo[k] -= s
            ut_h, ux_h = unpack_velocities(hi, self.dims)
            ut_l, ux_l = unpack_velocities(lo, self.dims)
            gh = self.d_velocities(t, x, u, ut_h, ux_h)
            gl = self.d_velocities(t, x, u, ut_l, ux_l)
            cols.append((gh - gl) / (2 * s))
        return np.stack(cols, axis=1)

    def d2_vel_u(self, t, x, u, u_t, u_x):
        """Mixed second partials d^2 L / d vel_s d u^beta, shape (S, n, ...)."""
        if self._d2_vel_u is not None:
            return np.asarray(self._d2_vel_u(t, x, u, u_t, u_x), dtype=float)
        n = self.dims.n
        s = self.fd_step
        u = np.asarray(u, dtype=float)
        cols = []
        for b in range(n):
            hi = u.copy()
            lo = u.copy()
            hi[b] += s
            lo[b] -= s
            gh = self.d_velocities(t, x, hi, u_t, u_x)
            gl = self.d_velocities(t, x, lo, u_t, u_x)
            cols.append((gh - gl) / (2 * s))
        return np.stack(cols, axis=1)

    def d2_vel_t(self, t, x, u, u_t, u_x):
        """Explicit-time second partials d^2 L / d vel_s dt, shape (S, ...)."""
        if self._d2_vel_t is not None:
            return np.asarray(self._d2_vel_t(t, x, u, u_t, u_x), dtype=float)
        if not self.time_dependent:
            return np.zeros_like(self.d_velocities(t, x, u, u_t, u_x))
        s = self.fd_step
        gh = self.d_velocities(t + s, x, u, u_t, u_x)
        gl = self.d_velocities(t - s, x, u, u_t, u_x)
        return (gh - gl) / (2 * s)

    def d2_vel_x(self, t, x, u, u_t, u_x):
        """Explicit-space second partials d^2 L / d vel_s dx^j, (S, m, ...)."""
        if self._d2_vel_x is not None:
            return np.asarray(self._d2_vel_x(t, x, u, u_t, u_x), dtype=float)
        m = self.dims.m
        s = self.fd_step
        x = np.asarray(x, dtype=float)
        cols = []
        for j in range(m):
            hi = x.copy()
            lo = x.copy()
            hi[j] += s
            lo[j] -= s
            gh = self.d_velocities(t, hi, u, u_t, u_x)
            gl = self.d_velocities(t, lo, u, u_t, u_x)
            cols.append((gh - gl) / (2 * s))
        if not cols:
            g = self.d_velocities(t, x, u, u_t, u_x)
        return (np.stack(cols, axis=1) if cols
                else np.zeros(g.shape[:1] + (0,) + g.shape[1:]))

    # -- point-level API ---------------------------------------------------

    def __call__(self, jet):
        return float(self.value(jet.t, jet.x, jet.u, jet.u_t, jet.u_x))

    def partials(self, jet):
        args = (jet.t, jet.x, jet.u, jet.u_t, jet.u_x)
        return LagrangianValue(value=float(self.value(*args)),
                               d_u=self.d_u(*args),
                               d_ut=self.d_ut(*args),
                               d_ux=self.d_ux(*args))


class HamiltonianModel:
    """Pointwise Hamiltonian with batched evaluation, analogous to
    :class:`LagrangianModel`. ``momentum_jacobian`` exposes the derivatives
    of (dH/dp_t, dH/dp_x) with respect to all arguments; it backs the
    chain rule for connections induced by Hamilton-Jacobi sections.
    """

    def __init__(self, dims, value, *, d_u=None, d_pt=None, d_px=None,
                 d_t=None, momentum_jacobian=None, name="custom",
                 fd_step=DEFAULT_FD_STEP, time_dependent=False):
        self.dims = dims
        self.name = name
        self.fd_step = float(fd_step)
        self.time_dependent = time_dependent
        self._value = value
        self._d_u = d_u
        self._d_pt = d_pt
        self._d_px = d_px
        self._d_t = d_t
        self._momentum_jacobian = momentum_jacobian

    @property
    def has_analytic_partials(self):
        return all(f is not None for f in (self._d_u, self._d_pt, self._d_px))

    def value(self, t, x, u, p_t, p_x):
        out = np.asarray(self._value(t, x, u, p_t, p_x), dtype=float)
        if not np.all(np.isfinite(out)):
            raise ModelError(f"{self.name}: non-finite Hamiltonian value")
        return out if out.ndim else float(out)

    def _fd_wrt(self, which, comp, t, x, u, p_t, p_x):
        s = self.fd_step
        fields = {"u": np.asarray(u, dtype=float),
                  "p_t": np.asarray(p_t, dtype=float),
                  "p_x": np.asarray(p_x, dtype=float)}
        hi = dict(fields)
        lo = dict(fields)
        bumped = fields[which].copy()
        bumped[comp] += s
        hi[which] = bumped
        bumped = fields[which].copy()
        bumped[comp] -= s
        lo[which] = bumped
        vh = self._value(t, x, hi["u"], hi["p_t"], hi["p_x"])
        vl = self._value(t, x, lo["u"], lo["p_t"], lo["p_x"])
        return (np.asarray(vh, dtype=float) - np.asarray(vl, dtype=float)) / (2 * s)

    def d_u(self, t, x, u, p_t, p_x):
        if self._d_u is not None:
            return np.asarray(self._d_u(t, x, u, p_t, p_x), dtype=float)
        return np.stack([self._fd_wrt("u", a, t, x, u, p_t, p_x)
                         for a in range(self.dims.n)])

    def d_pt(self, t, x, u, p_t, p_x):
        if self._d_pt is not None:
            return np.asarray(self._d_pt(t, x, u, p_t, p_x), dtype=float)
        return np.stack([self._fd_wrt("p_t", a, t, x, u, p_t, p_x)
                         for a in range(self.dims.n)])

    def d_px(self, t, x, u, p_t, p_x):
        n, m = self.dims.n, self.dims.m
        if self._d_px is not None:
            return np.asarray(self._d_px(t, x, u, p_t, p_x), dtype=float)
        p_x = np.asarray(p_x, dtype=float)
        tail = p_x.shape[2:]
        out = np.empty((n, m) + tail)
        for a in range(n):
            for j in range(m):
                out[a, j] = self._fd_wrt("p_x", (a, j), t, x, u, p_t, p_x)
        return out

    def d_t(self, t, x, u, p_t, p_x):
        if not self.time_dependent:
            base = np.asarray(np.asarray(u, dtype=float)[0], dtype=float)
            return np.zeros_like(base)
        if self._d_t is not None:
            return np.asarray(self._d_t(t, x, u, p_t, p_x), dtype=float)
        s = self.fd_step
        vh = self._value(t + s, x, u, p_t, p_x)
        vl = self._value(t - s, x, u, p_t, p_x)
        return (np.asarray(vh, dtype=float) - np.asarray(vl, dtype=float)) / (2 * s)

    def d_momenta(self, t, x, u, p_t, p_x):
        """Momentum partials as one (n, m+1, ...) block, time slot first."""
        dpt = self.d_pt(t, x, u, p_t, p_x)
        dpx = self.d_px(t, x, u, p_t, p_x)
        return np.concatenate([dpt[:, None], dpx], axis=1)

    def momentum_jacobian(self, t, x, u, p_t, p_x):
        """Derivatives of d_momenta with respect to (t, x, u, p_t, p_x).

        Returns a dict with arrays keyed ``"t"`` (n, m+1), ``"x"``
        (n, m+1, m), ``"u"`` (n, m+1, n), ``"p_t"`` (n, m+1, n) and
        ``"p_x"`` (n, m+1, n, m). Finite differences unless the model
        supplies an analytic version.
        """
        if self._momentum_jacobian is not None:
            return self._momentum_jacobian(t, x, u, p_t, p_x)
        n, m = self.dims.n, self.dims.m
        s = self.fd_step
        u = np.asarray(u, dtype=float)
        p_t = np.asarray(p_t, dtype=float)
        p_x = np.asarray(p_x, dtype=float)
        x = np.asarray(x, dtype=float)

        def g(tt, xx, uu, pt, px):
            return self.d_momenta(tt, xx, uu, pt, px)

        if self.time_dependent:
            out_t = (g(t + s, x, u, p_t, p_x) - g(t - s, x, u, p_t, p_x)) / (2 * s)
        else:
            out_t = np.zeros((n, m + 1))
        out_x = np.zeros((n, m + 1, m))
        for j in range(m):
            hi, lo = x.copy(), x.copy()
            hi[j] += s
            lo[j] -= s
            out_x[:, :, j] = (g(t, hi, u, p_t, p_x) - g(t, lo, u, p_t, p_x)) / (2 * s)
        out_u = np.zeros((n, m + 1, n))
        for b in range(n):
            hi, lo = u.copy(), u.copy()
            hi[b] += s
            lo[b] -= s
            out_u[:, :, b] = (g(t, x, hi, p_t, p_x) - g(t, x, lo, p_t, p_x)) / (2 * s)
        out_pt = np.zeros((n, m + 1, n))
        for b in range(n):
            hi, lo = p_t.copy(), p_t.copy()
            hi[b] += s
            lo[b] -= s
            out_pt[:, :, b] = (g(t, x, u, hi, p_x) - g(t, x, u, lo, p_x)) / (2 * s)
        out_px = np.zeros((n, m + 1, n, m))
        for b in range(n):
            for j in range(m):
                hi, lo = p_x.copy(), p_x.copy()
                hi[b, j] += s
                lo[b, j] -= s
                out_px[:, :, b, j] = (g(t, x, u, p_t, hi) - g(t, x, u, p_t, lo)) / (2 * s)
        return {"t": out_t, "x": out_x, "u": out_u, "p_t": out_pt, "p_x": out_px}

    def __call__(self, sample):
        return float(self.value(sample.t, sample.x, sample.u, sample.p_t,
                                sample.p_x))

    def partials(self, sample):
        args = (sample.t, sample.x, sample.u, sample.p_t, sample.p_x)
        d_t = np.asarray(self.d_t(*args), dtype=float)
        return HamiltonianValue(value=float(self.value(*args)),
                                d_u=self.d_u(*args),
                                d_pt=self.d_pt(*args),
                                d_px=self.d_px(*args),
                                d_t=float(d_t))


def eval_with_partials(model, sample):
    """Value plus all first partials of a Lagrangian or Hamiltonian model."""
    if isinstance(model, LagrangianModel):
        if not isinstance(sample, JetSample):
            raise ModelError("LagrangianModel expects a JetSample")
    elif isinstance(model, HamiltonianModel):
        if not isinstance(sample, (ReducedMomentumSample, ExtendedMomentumSample)):
            raise ModelError("HamiltonianModel expects a momentum sample")
    else:
        raise ModelError(f"unsupported model type {type(model)!r}")
    if sample.dims != model.dims:
        raise ModelError("sample dimensions do not match model dimensions")
    return model.partials(sample)


# -- built-in models -------------------------------------------------------

def _poly_value(coeffs, u):
    out = np.zeros_like(u)
    for k, c in enumerate(coeffs):
        if c != 0.0:
            out = out + c * u ** k
    return out


def _poly_deriv(coeffs, u):
    out = np.zeros_like(u)
    for k, c in enumerate(coeffs):
        if k >= 1 and c != 0.0:
            out = out + k * c * u ** (k - 1)
    return out


def _quadratic_wave_family(dims, mass=0.0, potential=None, name="free_wave"):
    """L = 1/2 |u_t|^2 - 1/2 |u_x|^2 - 1/2 mass^2 |u|^2 - V(u)."""
    n, m = dims.n, dims.m
    coeffs = tuple(float(c) for c in (potential or ()))
    mass = float(mass)

    def value(t, x, u, u_t, u_x):
        u = np.asarray(u, dtype=float)
        u_t = np.asarray(u_t, dtype=float)
        u_x = np.asarray(u_x, dtype=float)
        out = 0.5 * np.sum(u_t ** 2, axis=0) - 0.5 * np.sum(u_x ** 2, axis=(0, 1))
        if mass != 0.0:
            out = out - 0.5 * mass ** 2 * np.sum(u ** 2, axis=0)
        if coeffs:
            out = out - np.sum(_poly_value(coeffs, u), axis=0)
        return out

    def d_u(t, x, u, u_t, u_x):
        u = np.asarray(u, dtype=float)
        out = -mass ** 2 * u
        if coeffs:
            out = out - _poly_deriv(coeffs, u)
        return out

    def d_ut(t, x, u, u_t, u_x):
        return np.asarray(u_t, dtype=float).copy()

    def d_ux(t, x, u, u_t, u_x):
        return -np.asarray(u_x, dtype=float)

    def hessian(t, x, u, u_t, u_x):
        diag = np.concatenate([np.ones(n), -np.ones(n * m)])
        base = np.asarray(np.asarray(u_t, dtype=float)[0], dtype=float)
        H = np.diag(diag)
        return H.reshape(H.shape + (1,) * base.ndim) * np.ones_like(base)

    S = dims.n_velocity_slots

    def d2_vel_u(t, x, u, u_t, u_x):
        base = np.asarray(np.asarray(u_t, dtype=float)[0], dtype=float)
        return np.zeros((S, n) + base.shape)

    lag = LagrangianModel(dims, value, d_u=d_u, d_ut=d_ut, d_ux=d_ux,
                          velocity_hessian=hessian, d2_vel_u=d2_vel_u,
                          name=name)

    # Paired Hamiltonian: H = 1/2 |p_t|^2 - 1/2 |p_x|^2 + 1/2 mass^2 |u|^2 + V(u)
    def h_value(t, x, u, p_t, p_x):
        u = np.asarray(u, dtype=float)
        p_t = np.asarray(p_t, dtype=float)
        p_x = np.asarray(p_x, dtype=float)
        out = 0.5 * np.sum(p_t ** 2, axis=0) - 0.5 * np.sum(p_x ** 2, axis=(0, 1))
        if mass != 0.0:
            out = out + 0.5 * mass ** 2 * np.sum(u ** 2, axis=0)
        if coeffs:
            out = out + np.sum(_poly_value(coeffs, u), axis=0)
        return out

    def h_du(t, x, u, p_t, p_x):
        u = np.asarray(u, dtype=float)
        out = mass ** 2 * u
        if coeffs:
            out = out + _poly_deriv(coeffs, u)
        return out

    def h_dpt(t, x, u, p_t, p_x):
        return np.asarray(p_t, dtype=float).copy()

    def h_dpx(t, x, u, p_t, p_x):
        return -np.asarray(p_x, dtype=float)

    def h_momentum_jacobian(t, x, u, p_t, p_x):
        out_pt = np.zeros((n, m + 1, n))
        out_px = np.zeros((n, m + 1, n, m))
        for a in range(n):
            out_pt[a, 0, a] = 1.0
            for j in range(m):
                out_px[a, 1 + j, a, j] = -1.0
        return {"t": np.zeros((n, m + 1)), "x": np.zeros((n, m + 1, m)),
                "u": np.zeros((n, m + 1, n)), "p_t": out_pt, "p_x": out_px}

    ham = HamiltonianModel(dims, h_value, d_u=h_du, d_pt=h_dpt, d_px=h_dpx,
                           momentum_jacobian=h_momentum_jacobian,
                           name=name + "_hamiltonian")
    lag.paired_hamiltonian = ham
    return lag


def _oscillator_model(omega):
    """m = 0 mechanics: L = 1/2 u_t^2 - 1/2 omega^2 u^2 (one field)."""
    dims = Dimensions(m=0, n=1)
    w2 = float(omega) ** 2

    def value(t, x, u, u_t, u_x):
        u = np.asarray(u, dtype=float)
        u_t = np.asarray(u_t, dtype=float)
        return 0.5 * np.sum(u_t ** 2, axis=0) - 0.5 * w2 * np.sum(u ** 2, axis=0)

    def d_u(t, x, u, u_t, u_x):
        return -w2 * np.asarray(u, dtype=float)

    def d_ut(t, x, u, u_t, u_x):
        return np.asarray(u_t, dtype=float).copy()

    def d_ux(t, x, u, u_t, u_x):
        base = np.asarray(np.asarray(u, dtype=float)[0], dtype=float)
        return np.zeros((1, 0) + base.shape)

    def hessian(t, x, u, u_t, u_x):
        base = np.asarray(np.asarray(u_t, dtype=float)[0], dtype=float)
        return np.ones((1, 1) + base.shape)

    def d2_vel_u(t, x, u, u_t, u_x):
        base = np.asarray(np.asarray(u_t, dtype=float)[0], dtype=float)
        return np.zeros((1, 1) + base.shape)

    lag = LagrangianModel(dims, value, d_u=d_u, d_ut=d_ut, d_ux=d_ux,
                          velocity_hessian=hessian, d2_vel_u=d2_vel_u,
                          name="mechanics_oscillator")

    def h_value(t, x, u, p_t, p_x):
        u = np.asarray(u, dtype=float)
        p_t = np.asarray(p_t, dtype=float)
        return 0.5 * np.sum(p_t ** 2, axis=0) + 0.5 * w2 * np.sum(u ** 2, axis=0)

    def h_du(t, x, u, p_t, p_x):
        return w2 * np.asarray(u, dtype=float)

    def h_dpt(t, x, u, p_t, p_x):
        return np.asarray(p_t, dtype=float).copy()

    def h_dpx(t, x, u, p_t, p_x):
        base = np.asarray(np.asarray(u, dtype=float)[0], dtype=float)
        return np.zeros((1, 0) + base.shape)

    def h_momentum_jacobian(t, x, u, p_t, p_x):
        out_pt = np.zeros((1, 1, 1))
        out_pt[0, 0, 0] = 1.0
        return {"t": np.zeros((1, 1)), "x": np.zeros((1, 1, 0)),
                "u": np.zeros((1, 1, 1)), "p_t": out_pt,
                "p_x": np.zeros((1, 1, 1, 0))}

    ham = HamiltonianModel(dims, h_value, d_u=h_du, d_pt=h_dpt, d_px=h_dpx,
                           momentum_jacobian=h_momentum_jacobian,
                           name="mechanics_oscillator_hamiltonian")
    lag.paired_hamiltonian = ham
    return lag


def builtin_model(name, params=None):
    """Construct one of the built-in Lagrangian models.

    ``free_wave``            L = 1/2 u_t^2 - 1/2 u_x^2            (m = 1)
    ``klein_gordon``         adds - 1/2 mass^2 u^2                (m = 1)
    ``scalar_potential``     adds - V(u), V polynomial            (m = 1)
    ``mechanics_oscillator`` L = 1/2 u_t^2 - 1/2 omega^2 u^2      (m = 0)

    All carry analytic partials, analytic velocity Hessians and a paired
    analytic Hamiltonian.
    """
    params = dict(params or {})
    if name not in BUILTIN_MODEL_NAMES:
        raise ModelError(f"unknown model {name!r}; known: "
                         + ", ".join(BUILTIN_MODEL_NAMES))
    n = int(params.pop("n", 1))
    declared_m = params.pop("m", None)
    expected_m = 0 if name == "mechanics_oscillator" else 1
    if declared_m is not None and int(declared_m) != expected_m:
        raise ModelError(f"{name} requires m={expected_m}, got m={declared_m}")
    dims = Dimensions(m=expected_m, n=n)

    if name == "mechanics_oscillator":
        omega = float(params.pop("omega", 1.0))
        if params:
            raise ModelError(f"unused parameters for {name}: {sorted(params)}")
        return _oscillator_model(omega)

    mass = float(params.pop("mass", 0.0))
    if mass < 0:
        raise ModelError("mass must be non-negative")
    potential = params.pop("potential", None)
    if name == "free_wave":
        if mass != 0.0 or potential:
            raise ModelError("free_wave takes no mass or potential")
        model = _quadratic_wave_family(dims, name=name)
    elif name == "klein_gordon":
        if potential:
            raise ModelError("klein_gordon takes no polynomial potential")
        model = _quadratic_wave_family(dims, mass=mass, name=name)
    else:  # scalar_potential
        model = _quadratic_wave_family(dims, mass=mass,
                                       potential=potential or (), name=name)
    if params:
        raise ModelError(f"unused parameters for {name}: {sorted(params)}")
    return model
