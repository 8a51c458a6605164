"""The pairing on Cauchy data as a solution detector.

Contracting a trajectory velocity (time component 1) with vertical test
variations weighs exactly the split field equations

    du/dt = dH/dp_t,   du/dx = dH/dp_x,   dp_t/dt + div p_x = -dH/du,

so the normalized maximum over a spanning test set is a residual that
vanishes (to discretization order) precisely on solutions.
"""

import numpy as np

from dedonder_hj import (CauchyState, builtin_model,
                         dynamical_trajectory_residual,
                         hamiltonian_from_lagrangian, make_grid,
                         presymplectic_pairing, standard_test_variations,
                         TangentVariation)

H = hamiltonian_from_lagrangian(builtin_model("free_wave"))
k = 2 * np.pi
grid = make_grid(128)
xs = grid.x[0]


def exact(t):
    state = CauchyState(t, np.sin(k * (xs - t))[None, :],
                        -k * np.cos(k * (xs - t))[None, :],
                        -k * np.cos(k * (xs - t))[None, None, :])
    dot = (-k * np.cos(k * (xs - t))[None, :],
           -k * k * np.sin(k * (xs - t))[None, :],
           -k * k * np.sin(k * (xs - t))[None, None, :])
    return state, dot


state, dot = exact(0.3)

# basic structure: bilinear, exactly antisymmetric
X = TangentVariation(0.0, np.ones((1, 128)), np.zeros((1, 128)),
                     np.zeros((1, 1, 128)))
Y = TangentVariation(0.0, np.zeros((1, 128)), np.ones((1, 128)),
                     np.zeros((1, 1, 128)))
print("pairing(du-block, dp_t-block) =", presymplectic_pairing(H, grid, state, X, Y))
print("pairing(X, X)                 =", presymplectic_pairing(H, grid, state, X, X))

test = standard_test_variations(grid, 1, rng=np.random.default_rng(42))
res = dynamical_trajectory_residual(H, grid, state, dot, test)
print("\nexact travelling wave, N=128: residual %.3e (O(h^2) truncation)" % res)

bad = (dot[0] + 1.0, dot[1], dot[2])
res_bad = dynamical_trajectory_residual(H, grid, state, bad, test)
print("velocity corrupted by +1:     residual %.3e (detected)" % res_bad)

for N in (128, 256):
    g = make_grid(N)
    xs_n = g.x[0]
    s = CauchyState(0.3, np.sin(k * (xs_n - 0.3))[None, :],
                    -k * np.cos(k * (xs_n - 0.3))[None, :],
                    -k * np.cos(k * (xs_n - 0.3))[None, None, :])
    d = (-k * np.cos(k * (xs_n - 0.3))[None, :],
         -k * k * np.sin(k * (xs_n - 0.3))[None, :],
         -k * k * np.sin(k * (xs_n - 0.3))[None, None, :])
    t = standard_test_variations(g, 1, rng=np.random.default_rng(42))
    print("N=%-4d residual %.6e" % (N, dynamical_trajectory_residual(H, g, s, d, t)))
