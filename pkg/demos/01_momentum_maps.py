"""Momentum maps and their inversion.

A first-order field model evaluates a Lagrangian on jet data
(t, x, u, u_t, u_x). The momentum map reads off

    p_t = dL/du_t,   p_x = dL/du_x,
    p   = L - p_t u_t - p_x u_x        (the affine slot),

and for regular models Newton iteration inverts it. The induced
Hamiltonian H = p_t u_t + p_x u_x - L closes the loop.
"""

import numpy as np

from dedonder_hj import (JetSample, ReducedMomentumSample, builtin_model,
                         hamiltonian_from_lagrangian, inverse_legendre,
                         legendre_extended, legendre_reduced,
                         regularity_check)

wave = builtin_model("free_wave")
jet = JetSample(0.0, [0.25], [1.0], [2.0], [[3.0]], wave.dims)

print("free wave at u=1, u_t=2, u_x=3")
print("  L        =", wave(jet))
ext = legendre_extended(wave, jet)
print("  momenta  = (p=%g, p_t=%g, p_x=%g)" % (ext.p, ext.p_t[0], ext.p_x[0, 0]))

rep = regularity_check(wave, jet)
print("  velocity Hessian det = %g (regular: %s)" % (rep.determinant,
                                                     rep.is_regular))

back = inverse_legendre(wave, ext.reduced())
print("  Newton inversion recovers u_t=%g, u_x=%g" % (back.u_t[0],
                                                      back.u_x[0, 0]))

H = hamiltonian_from_lagrangian(wave)
sample = ReducedMomentumSample(0.0, [0.0], [0.0], [2.0], [[-3.0]], wave.dims)
print("  H(p_t=2, p_x=-3) =", H(sample), " (= 0.5 p_t^2 - 0.5 p_x^2)")

# round trip over random jets
rng = np.random.default_rng(0)
worst = 0.0
kg = builtin_model("klein_gordon", {"mass": 1.0})
for _ in range(100):
    jet = JetSample(rng.uniform(-1, 1), rng.uniform(-1, 1, 1),
                    rng.uniform(-2, 2, 1), rng.uniform(-2, 2, 1),
                    rng.uniform(-2, 2, (1, 1)), kg.dims)
    rec = inverse_legendre(kg, legendre_reduced(kg, jet))
    worst = max(worst, np.max(np.abs(rec.u_t - jet.u_t)),
                np.max(np.abs(rec.u_x - jet.u_x)))
print("\nKlein-Gordon round trip over 100 random jets: max deviation %.2e"
      % worst)
