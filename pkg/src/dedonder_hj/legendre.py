"""Point-level variational calculus.

Momentum maps from velocities (p_t = dL/du_t, p_x = dL/du_x and the affine
slot p = L - sum_i (dL/du_i) u_i), their Newton inversion for regular
Lagrangians, the induced Hamiltonian H = sum_i p_i u_i - L, residuals of
the Euler-Lagrange and first-order Hamiltonian field equations along
sections, and the curvature residual of a connection on the configuration
bundle.
"""

from dataclasses import dataclass

import numpy as np

from .models import (DEFAULT_FD_STEP, ExtendedMomentumSample,
                     HamiltonianModel, JetSample, ModelError,
                     ReducedMomentumSample, pack_velocities, unpack_velocities)

REGULARITY_TOL = 1e-10
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


class NewtonError(RuntimeError):
    """Newton iteration failed: singular system or no convergence."""


def legendre_extended(L, jet):
    """Velocity-to-momentum map including the affine slot.

    p_t = dL/du_t,  p_x = dL/du_x,  p = L - dL/du_t . u_t - dL/du_x . u_x
    """
    if jet.dims != L.dims:
        raise ModelError("jet dimensions do not match model")
    args = (jet.t, jet.x, jet.u, jet.u_t, jet.u_x)
    value = float(L.value(*args))
    p_t = L.d_ut(*args)
    p_x = L.d_ux(*args)
    p = value - float(np.dot(p_t, jet.u_t)) - float(np.sum(p_x * jet.u_x))
    return ExtendedMomentumSample(jet.t, jet.x, jet.u, p, p_t, p_x, jet.dims)


def legendre_reduced(L, jet):
    """The extended map with the affine slot dropped."""
    return legendre_extended(L, jet).reduced()


@dataclass
class RegularityReport:
    determinant: float
    condition: float
    is_regular: bool
    tolerance: float


def regularity_check(L, jet, tolerance=REGULARITY_TOL):
    """Determinant and condition estimate of the velocity Hessian."""
    H = np.asarray(L.velocity_hessian(jet.t, jet.x, jet.u, jet.u_t, jet.u_x))
    det = float(np.linalg.det(H))
    cond = float(np.linalg.cond(H))
    return RegularityReport(determinant=det, condition=cond,
                            is_regular=abs(det) >= tolerance,
                            tolerance=tolerance)


def solve_velocities(L, t, x, u, p_t, p_x, guess=None, tol=NEWTON_TOL,
                     max_iter=NEWTON_MAX_ITER):
    """Newton-solve dL/du_i = (p_t, p_x) for the velocities, batched over a
    trailing grid axis. Steps are damped when the residual grows."""
    target = pack_velocities(np.asarray(p_t, dtype=float),
                             np.asarray(p_x, dtype=float))
    vel = (np.zeros_like(target) if guess is None
           else np.array(guess, dtype=float))
    if vel.shape != target.shape:
        raise ModelError("velocity guess has wrong shape")
    batched = target.ndim > 1

    def residual(v):
        ut, ux = unpack_velocities(v, L.dims)
        return L.d_velocities(t, x, u, ut, ux) - target

    r = residual(vel)
    rnorm = np.max(np.abs(r))
    for _ in range(max_iter):
        if rnorm <= tol:
            ut, ux = unpack_velocities(vel, L.dims)
            return ut, ux
        ut, ux = unpack_velocities(vel, L.dims)
        J = np.asarray(L.velocity_hessian(t, x, u, ut, ux))
        try:
            if batched:
                # (S, S, N) -> batched solve over nodes
                Jb = np.moveaxis(J, -1, 0)
                rb = np.moveaxis(r, -1, 0)[..., None]
                step = np.moveaxis(np.linalg.solve(Jb, rb)[..., 0], 0, -1)
            else:
                step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise NewtonError(f"singular velocity Hessian: {exc}") from exc
        scale = 1.0
        for _ in range(30):
            trial = vel - scale * step
            r_trial = residual(trial)
            r_trial_norm = np.max(np.abs(r_trial))
            if r_trial_norm < rnorm or r_trial_norm <= tol:
                vel, r, rnorm = trial, r_trial, r_trial_norm
                break
            scale *= 0.5
        else:
            raise NewtonError("damped Newton step stalled")
    if rnorm <= tol:
        ut, ux = unpack_velocities(vel, L.dims)
        return ut, ux
    raise NewtonError(f"no convergence after {max_iter} iterations "
                      f"(residual {rnorm:.3e})")


def inverse_legendre(L, sample, guess=None, tol=NEWTON_TOL,
                     max_iter=NEWTON_MAX_ITER):
    """Invert the reduced momentum map at one point, returning the jet."""
    if sample.dims != L.dims:
        raise ModelError("sample dimensions do not match model")
    if guess is not None:
        g_ut, g_ux = guess
        guess = pack_velocities(np.asarray(g_ut, dtype=float),
                                np.asarray(g_ux, dtype=float))
    u_t, u_x = solve_velocities(L, sample.t, sample.x, sample.u,
                                sample.p_t, sample.p_x, guess=guess,
                                tol=tol, max_iter=max_iter)
    return JetSample(sample.t, sample.x, sample.u, u_t, u_x, sample.dims)


def hamiltonian_from_lagrangian(L):
    """Hamiltonian H(t, x, u, p_t, p_x) = p . u_i - L at the inverted
    velocities.

    Built-in models carry a closed-form Hamiltonian which is returned
    directly. Otherwise each evaluation Newton-inverts the momentum map;
    the first partials then follow without differentiation, since at the
    solved velocities dH/dp_i = u_i and dH/du = -dL/du.
    """
    paired = getattr(L, "paired_hamiltonian", None)
    if paired is not None:
        return paired

    def solved(t, x, u, p_t, p_x):
        return solve_velocities(L, t, x, u, p_t, p_x)

    def value(t, x, u, p_t, p_x):
        u_t, u_x = solved(t, x, u, p_t, p_x)
        pt = np.asarray(p_t, dtype=float)
        px = np.asarray(p_x, dtype=float)
        return (np.sum(pt * u_t, axis=0) + np.sum(px * u_x, axis=(0, 1))
                - L.value(t, x, u, u_t, u_x))

    def d_u(t, x, u, p_t, p_x):
        u_t, u_x = solved(t, x, u, p_t, p_x)
        return -L.d_u(t, x, u, u_t, u_x)

    def d_pt(t, x, u, p_t, p_x):
        u_t, _ = solved(t, x, u, p_t, p_x)
        return u_t

    def d_px(t, x, u, p_t, p_x):
        _, u_x = solved(t, x, u, p_t, p_x)
        return u_x

    def d_t(t, x, u, p_t, p_x):
        u_t, u_x = solved(t, x, u, p_t, p_x)
        return -L.d_t(t, x, u, u_t, u_x)

    return HamiltonianModel(L.dims, value, d_u=d_u, d_pt=d_pt, d_px=d_px,
                            d_t=d_t, name=L.name + "_hamiltonian",
                            fd_step=L.fd_step,
                            time_dependent=L.time_dependent)


# -- sections and field-equation residuals ---------------------------------

def _fd1(f, z, step):
    return (f(z + step) - f(z - step)) / (2.0 * step)


class FieldSection:
    """A field section u(t, x) with derivative access up to second order.

    Derivative callables may be given analytically; whatever is missing is
    produced by nested central differences of ``u``. Signatures take
    ``(t, x)`` with ``x`` an (m,) array and return (n,), (n, m) or
    (n, m, m) arrays as appropriate.
    """

    def __init__(self, dims, u, u_t=None, u_x=None, u_tt=None, u_tx=None,
                 u_xx=None, fd_step=DEFAULT_FD_STEP):
        self.dims = dims
        self.fd_step = float(fd_step)
        self._u = u
        self._u_t = u_t
        self._u_x = u_x
        self._u_tt = u_tt
        self._u_tx = u_tx
        self._u_xx = u_xx

    def u(self, t, x):
        return np.asarray(self._u(t, x), dtype=float)

    def u_t(self, t, x):
        if self._u_t is not None:
            return np.asarray(self._u_t(t, x), dtype=float)
        return _fd1(lambda tt: self.u(tt, x), t, self.fd_step)

    def u_x(self, t, x):
        m = self.dims.m
        if self._u_x is not None:
            return np.asarray(self._u_x(t, x), dtype=float)
        x = np.asarray(x, dtype=float)
        cols = []
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            cols.append(_fd1(lambda s: self.u(t, x + s * e), 0.0, self.fd_step))
        return (np.stack(cols, axis=1) if cols
                else np.zeros((self.dims.n, 0)))

    def u_tt(self, t, x):
        if self._u_tt is not None:
            return np.asarray(self._u_tt(t, x), dtype=float)
        return _fd1(lambda tt: self.u_t(tt, x), t, self.fd_step)

    def u_tx(self, t, x):
        m = self.dims.m
        if self._u_tx is not None:
            return np.asarray(self._u_tx(t, x), dtype=float)
        x = np.asarray(x, dtype=float)
        cols = []
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            cols.append(_fd1(lambda s: self.u_t(t, x + s * e), 0.0, self.fd_step))
        return (np.stack(cols, axis=1) if cols
                else np.zeros((self.dims.n, 0)))

    def u_xx(self, t, x):
        m = self.dims.m
        if self._u_xx is not None:
            return np.asarray(self._u_xx(t, x), dtype=float)
        x = np.asarray(x, dtype=float)
        out = np.zeros((self.dims.n, m, m))
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            out[:, :, j] = _fd1(lambda s: self.u_x(t, x + s * e), 0.0,
                                self.fd_step)
        return out

    def jet(self, t, x):
        x = np.asarray(x, dtype=float)
        return JetSample(t, x, self.u(t, x), self.u_t(t, x), self.u_x(t, x),
                         self.dims)

    def base_first(self, t, x):
        """Section first derivatives stacked over base slots, (m+1, n)."""
        rows = [self.u_t(t, x)]
        ux = self.u_x(t, x)
        for j in range(self.dims.m):
            rows.append(ux[:, j])
        return np.stack(rows, axis=0)

    def base_second(self, t, x):
        """Section second derivatives over base-slot pairs, (m+1, m+1, n)."""
        m, n = self.dims.m, self.dims.n
        out = np.zeros((m + 1, m + 1, n))
        out[0, 0] = self.u_tt(t, x)
        utx = self.u_tx(t, x)
        uxx = self.u_xx(t, x)
        for j in range(m):
            out[0, 1 + j] = utx[:, j]
            out[1 + j, 0] = utx[:, j]
            for i in range(m):
                out[1 + i, 1 + j] = uxx[:, i, j]
        return out


def momentum_total_derivatives(L, section, t, x):
    """Total base derivatives D_i (dL/du^alpha_k) along a section.

    Chain rule over the composed map: explicit (t, x) dependence of L,
    the u-dependence against section first derivatives, and the velocity
    dependence against section second derivatives. Returns (m+1, S) with
    the base slot first (0 = time) and S the packed velocity slots.
    """
    dims = L.dims
    m, n = dims.m, dims.n
    jet = section.jet(t, x)
    args = (jet.t, jet.x, jet.u, jet.u_t, jet.u_x)
    Hvv = np.asarray(L.velocity_hessian(*args))        # (S, S)
    Hvu = np.asarray(L.d2_vel_u(*args))                # (S, n)
    Hvt = np.asarray(L.d2_vel_t(*args))                # (S,)
    Hvx = np.asarray(L.d2_vel_x(*args))                # (S, m)
    first = section.base_first(t, x)                   # (m+1, n)
    second = section.base_second(t, x)                 # (m+1, m+1, n)
    S = dims.n_velocity_slots
    out = np.zeros((m + 1, S))
    # velocity slot s = (beta, i') packs as i'=0 -> beta, i'>=1 -> n + beta*m + (i'-1)
    sec_slot = np.zeros((m + 1, S))
    for i2 in range(m + 1):
        sec_slot[i2, :n] = second[0, i2]
        for b in range(n):
            for j in range(m):
                sec_slot[i2, n + b * m + j] = second[1 + j, i2, b]
    for i in range(m + 1):
        expl = Hvt if i == 0 else Hvx[:, i - 1]
        out[i] = expl + Hvu @ first[i] + Hvv.T @ sec_slot[i]
    return out


def euler_lagrange_residual(L, section, points):
    """Euler-Lagrange residual dL/du^a - D_i(dL/du^a_i) at base points.

    ``points`` is an iterable of (t, x) pairs; returns (len(points), n).
    """
    dims = L.dims
    n, m = dims.n, dims.m
    out = np.zeros((len(points), n))
    for k, (t, x) in enumerate(points):
        jet = section.jet(t, np.asarray(x, dtype=float))
        du = L.d_u(jet.t, jet.x, jet.u, jet.u_t, jet.u_x)
        D = momentum_total_derivatives(L, section, t, np.asarray(x, dtype=float))
        total = np.zeros(n)
        for a in range(n):
            total[a] = D[0, a]
            for j in range(m):
                total[a] += D[1 + j, n + a * m + j]
        out[k] = du - total
    return out


class MomentumSection:
    """A momentum-space section (u, p_t, p_x)(t, x) with first derivatives."""

    def __init__(self, dims, u, p_t, p_x, d_base_u=None, d_t_pt=None,
                 d_x_px=None, fd_step=DEFAULT_FD_STEP):
        self.dims = dims
        self.fd_step = float(fd_step)
        self._u = u
        self._p_t = p_t
        self._p_x = p_x
        self._d_base_u = d_base_u      # (t, x) -> (m+1, n)
        self._d_t_pt = d_t_pt          # (t, x) -> (n,)
        self._d_x_px = d_x_px          # (t, x) -> (n, m, m): d p^j / d x^i

    def u(self, t, x):
        return np.asarray(self._u(t, x), dtype=float)

    def p_t(self, t, x):
        return np.asarray(self._p_t(t, x), dtype=float)

    def p_x(self, t, x):
        return np.asarray(self._p_x(t, x), dtype=float)

    def sample(self, t, x):
        x = np.asarray(x, dtype=float)
        return ReducedMomentumSample(t, x, self.u(t, x), self.p_t(t, x),
                                     self.p_x(t, x), self.dims)

    def d_base_u(self, t, x):
        if self._d_base_u is not None:
            return np.asarray(self._d_base_u(t, x), dtype=float)
        m = self.dims.m
        rows = [_fd1(lambda tt: self.u(tt, x), t, self.fd_step)]
        x = np.asarray(x, dtype=float)
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            rows.append(_fd1(lambda s: self.u(t, x + s * e), 0.0, self.fd_step))
        return np.stack(rows, axis=0)

    def d_t_pt(self, t, x):
        if self._d_t_pt is not None:
            return np.asarray(self._d_t_pt(t, x), dtype=float)
        return _fd1(lambda tt: self.p_t(tt, x), t, self.fd_step)

    def d_x_px(self, t, x):
        if self._d_x_px is not None:
            return np.asarray(self._d_x_px(t, x), dtype=float)
        m, n = self.dims.m, self.dims.n
        x = np.asarray(x, dtype=float)
        out = np.zeros((n, m, m))
        for i in range(m):
            e = np.zeros(m)
            e[i] = 1.0
            out[:, :, i] = _fd1(lambda s: self.p_x(t, x + s * e), 0.0,
                                self.fd_step)
        return out


def legendre_transform_section(L, section):
    """Momentum section obtained by composing a field section with the
    velocity-to-momentum map; derivatives by the total-derivative chain
    rule, so analytic inputs give analytic outputs."""
    dims = L.dims
    n, m = dims.n, dims.m

    def u(t, x):
        return section.u(t, x)

    def p_t(t, x):
        jet = section.jet(t, x)
        return L.d_ut(jet.t, jet.x, jet.u, jet.u_t, jet.u_x)

    def p_x(t, x):
        jet = section.jet(t, x)
        return L.d_ux(jet.t, jet.x, jet.u, jet.u_t, jet.u_x)

    def d_base_u(t, x):
        return section.base_first(t, x)

    def d_t_pt(t, x):
        D = momentum_total_derivatives(L, section, t, np.asarray(x, dtype=float))
        return D[0, :n]

    def d_x_px(t, x):
        D = momentum_total_derivatives(L, section, t, np.asarray(x, dtype=float))
        out = np.zeros((n, m, m))
        for a in range(n):
            for j in range(m):
                for i in range(m):
                    out[a, j, i] = D[1 + i, n + a * m + j]
        return out

    return MomentumSection(dims, u, p_t, p_x, d_base_u=d_base_u,
                           d_t_pt=d_t_pt, d_x_px=d_x_px)


@dataclass
class HdwSectionResidual:
    """Residuals of the first-order Hamiltonian field equations along a
    momentum section: ``gradient`` holds du^a/dx^i - dH/dp^i_a over all
    base slots (time first), ``divergence`` holds
    dp^t_a/dt + sum_j dp^j_a/dx^j + dH/du^a."""
    gradient: np.ndarray     # (P, n, m+1)
    divergence: np.ndarray   # (P, n)

    def max_abs(self):
        g = np.max(np.abs(self.gradient)) if self.gradient.size else 0.0
        d = np.max(np.abs(self.divergence)) if self.divergence.size else 0.0
        return max(float(g), float(d))


def hdw_residual(H, section, points):
    """Hamiltonian field-equation residuals along a momentum section."""
    dims = H.dims
    if dims != section.dims:
        raise ModelError("section dimensions do not match model")
    n, m = dims.n, dims.m
    grad = np.zeros((len(points), n, m + 1))
    div = np.zeros((len(points), n))
    for k, (t, x) in enumerate(points):
        x = np.asarray(x, dtype=float)
        sample = section.sample(t, x)
        args = (sample.t, sample.x, sample.u, sample.p_t, sample.p_x)
        dmom = H.d_momenta(*args)          # (n, m+1)
        du = H.d_u(*args)
        base_u = section.d_base_u(t, x)    # (m+1, n)
        grad[k] = base_u.T - dmom
        dtpt = section.d_t_pt(t, x)
        dxpx = section.d_x_px(t, x)        # (n, m, m)
        div[k] = dtpt + np.einsum("ajj->a", dxpx) + du
    return HdwSectionResidual(gradient=grad, divergence=div)


@dataclass
class PoincareCartanCoefficients:
    """Coefficients of the Lagrangian's canonical (m+1)-form: the volume
    coefficient L - u_i dL/du_i and the momentum coefficients dL/du_i."""
    volume: float
    momentum_t: np.ndarray
    momentum_x: np.ndarray


def poincare_cartan_coefficients(L, jet):
    args = (jet.t, jet.x, jet.u, jet.u_t, jet.u_x)
    d_ut = L.d_ut(*args)
    d_ux = L.d_ux(*args)
    volume = (float(L.value(*args)) - float(np.dot(d_ut, jet.u_t))
              - float(np.sum(d_ux * jet.u_x)))
    return PoincareCartanCoefficients(volume=volume, momentum_t=d_ut,
                                      momentum_x=d_ux)


# -- Ehresmann connections on the configuration bundle ----------------------

class ConnectionCoefficients:
    """Horizontal-lift coefficients Gamma^alpha_i(t, x, u) of a connection
    on the configuration bundle, time slot first.

    ``coefficients(t, x, u)`` returns (n, m+1). Partial derivatives with
    respect to (t, x^j, u^beta) may be supplied analytically as
    ``partials(t, x, u) -> dict`` with keys "t" (n, m+1), "x" (n, m+1, m)
    and "u" (n, m+1, n); otherwise central differences are used.
    """

    def __init__(self, dims, coefficients, partials=None,
                 fd_step=DEFAULT_FD_STEP):
        self.dims = dims
        self.fd_step = float(fd_step)
        self._coefficients = coefficients
        self._partials = partials

    def coefficients(self, t, x, u):
        out = np.asarray(self._coefficients(t, x, u), dtype=float)
        if not np.all(np.isfinite(out)):
            raise ModelError("non-finite connection coefficients")
        return out

    def partials(self, t, x, u):
        if self._partials is not None:
            return self._partials(t, x, u)
        n, m = self.dims.n, self.dims.m
        s = self.fd_step
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        d_t = (self.coefficients(t + s, x, u)
               - self.coefficients(t - s, x, u)) / (2 * s)
        d_x = np.zeros((n, m + 1, m))
        for j in range(m):
            hi, lo = x.copy(), x.copy()
            hi[j] += s
            lo[j] -= s
            d_x[:, :, j] = (self.coefficients(t, hi, u)
                            - self.coefficients(t, lo, u)) / (2 * s)
        d_u = np.zeros((n, m + 1, n))
        for b in range(n):
            hi, lo = u.copy(), u.copy()
            hi[b] += s
            lo[b] -= s
            d_u[:, :, b] = (self.coefficients(t, x, hi)
                            - self.coefficients(t, x, lo)) / (2 * s)
        return {"t": d_t, "x": d_x, "u": d_u}


def flatness_residual(connection, t, x, u):
    """Curvature residual of the connection over base-slot pairs.

    R^alpha_{ij} = d_i Gamma^alpha_j - d_j Gamma^alpha_i
                   + Gamma^beta_i d_{u^beta} Gamma^alpha_j
                   - Gamma^beta_j d_{u^beta} Gamma^alpha_i

    with i, j over (t, x^1..x^m). Antisymmetric in (i, j); the connection
    is flat iff the residual vanishes.
    """
    dims = connection.dims
    n, m = dims.n, dims.m
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    G = connection.coefficients(t, x, u)            # (n, m+1)
    P = connection.partials(t, x, u)
    # base derivative of Gamma^alpha_j by slot i: (m+1 slots) x (n, m+1)
    dG = np.zeros((m + 1, n, m + 1))
    dG[0] = P["t"]
    for j in range(m):
        dG[1 + j] = P["x"][:, :, j]
    dG_u = P["u"]                                   # (n, m+1, n)
    out = np.zeros((n, m + 1, m + 1))
    for i in range(m + 1):
        for j in range(m + 1):
            bracket = np.einsum("b,ab->a", G[:, i], dG_u[:, j, :]) \
                - np.einsum("b,ab->a", G[:, j], dG_u[:, i, :])
            out[:, i, j] = dG[i][:, j] - dG[j][:, i] + bracket
    return out
