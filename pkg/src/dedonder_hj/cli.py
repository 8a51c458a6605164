"""Command-line front end.

    dedonder-hj <simulate|verify-hj|characteristics|compare|pairing-check>
        --scenario <path> [--out <dir>] [--seed <u64>] [--sweep grid|time]

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 certification refusal (incompatible data / failed verification).
All emitted floating-point values are round-trippable (17 significant
digits by default) and runs are deterministic for a fixed seed.
"""

import argparse
import os
import sys

import numpy as np

from .cauchy import (BlowupError, CauchyState, GridError,
                     dynamical_trajectory_residual, integrate_density,
                     random_smooth_variation, run_simulation,
                     standard_test_variations, time_derivative_frames)
from .cotangent import (ConstraintError, cotangent_trajectory_residual,
                        instantaneous_hamiltonian, pullback_identity_residual,
                        restriction_map_R, time_legendre_constraint_residual)
from .hj import (CharacteristicBlowup, GammaDomainError,
                 IncompatibleDataError, evolve_characteristics,
                 gamma_closedness_residual, hj_lift_solution_check,
                 hj_residual, lift_by_gamma, reduced_connection,
                 restricted_connection_residual)
from .legendre import NewtonError, flatness_residual
from .models import ModelError
from .scenario import (ScenarioError, build_gamma, build_grid, build_model,
                       exact_solution, hamiltonian_for, initial_fields,
                       initial_state, parse_scenario)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_REFUSED = 4


def _fmt(value, precision):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), f".{precision}g")


def _write_csv(path, header, rows, precision):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v, precision) for v in row) + "\n")


def _field_header(n, m):
    cols = ["t", "node_index", "x"]
    cols += [f"u_{a + 1}" for a in range(n)]
    cols += [f"pt_{a + 1}" for a in range(n)]
    if m:
        cols += [f"px_{a + 1}" for a in range(n)]
    return cols


def _field_rows(grid, times, states):
    n = states[0].u.shape[0]
    rows = []
    for t, s in zip(times, states):
        for j in range(grid.n_nodes):
            x_j = grid.x[0, j] if grid.m else 0.0
            row = [t, j, x_j]
            row += [s.u[a, j] for a in range(n)]
            row += [s.p_t[a, j] for a in range(n)]
            if grid.m:
                row += [s.p_x[a, 0, j] for a in range(n)]
            rows.append(row)
    return rows


def _ensure_outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _report(lines):
    for line in lines:
        print(line)


def _check_store_every(scenario):
    if scenario.n_steps % scenario.store_every:
        raise ScenarioError(f"{scenario.path}: output.store_every must "
                            f"divide the number of steps "
                            f"({scenario.n_steps})")


def _diagnostics(L, grid, times, states, rng):
    """Per-frame energy, constraint residual and trajectory residual."""
    n = states[0].u.shape[0]
    energies = [instantaneous_hamiltonian(L, grid, restriction_map_R(s))
                for s in states]
    constraints = [time_legendre_constraint_residual(L, grid, s)
                   for s in states]
    traj = [float("nan")] * len(states)
    if len(states) >= 5:
        H = hamiltonian_for(L)
        dt_frames = times[1] - times[0]
        u_dot = time_derivative_frames(np.stack([s.u for s in states]),
                                       dt_frames)
        pt_dot = time_derivative_frames(np.stack([s.p_t for s in states]),
                                        dt_frames)
        px_dot = time_derivative_frames(np.stack([s.p_x for s in states]),
                                        dt_frames)
        test = standard_test_variations(grid, n, rng=rng)
        for k, s in enumerate(states):
            traj[k] = dynamical_trajectory_residual(
                H, grid, s, (u_dot[k], pt_dot[k], px_dot[k]), test)
    return energies, constraints, traj


def _simulate_once(scenario, seed):
    L = build_model(scenario)
    H = hamiltonian_for(L)
    grid = build_grid(scenario)
    state0 = initial_state(scenario, grid, L, H)
    traj = run_simulation(H, grid, state0, scenario.dt, scenario.n_steps,
                          store_every=scenario.store_every)
    rng = np.random.default_rng(seed)
    energies, constraints, residuals = _diagnostics(L, grid, traj.times,
                                                    traj.states, rng)
    return L, H, grid, traj, energies, constraints, residuals


def _error_metric(scenario, grid, traj):
    sol = exact_solution(scenario)
    if sol is None:
        return None
    n = traj.states[0].u.shape[0]
    exact = sol(traj.times[-1], grid, n)
    return float(np.max(np.abs(traj.states[-1].u - exact)))


def cmd_simulate(scenario, out_dir, seed, sweep=None):
    _check_store_every(scenario)
    L, H, grid, traj, energies, constraints, residuals = _simulate_once(
        scenario, seed)
    p = scenario.precision
    _write_csv(os.path.join(out_dir, "fields.csv"),
               _field_header(L.dims.n, grid.m),
               _field_rows(grid, traj.times, traj.states), p)
    _write_csv(os.path.join(out_dir, "diagnostics.csv"),
               ["t", "energy", "constraint_residual", "trajectory_residual"],
               [[t, e, c, r] for t, e, c, r in
                zip(traj.times, energies, constraints, residuals)], p)
    err = _error_metric(scenario, grid, traj)
    lines = [f"simulate: model={scenario.model_name} N={grid.n_nodes} "
             f"dt={scenario.dt:g} steps={scenario.n_steps} seed={seed}",
             f"final_time = {_fmt(traj.times[-1], p)}",
             f"energy_initial = {_fmt(energies[0], p)}",
             f"energy_drift_max = {_fmt(max(abs(e - energies[0]) for e in energies), p)}",
             f"constraint_residual_max = {_fmt(max(constraints), p)}"]
    finite = [r for r in residuals if np.isfinite(r)]
    if finite:
        lines.append(f"trajectory_residual_max = {_fmt(max(finite), p)}")
    if err is not None:
        lines.append(f"exact_solution_linf_error = {_fmt(err, p)}")
    _report(lines)

    if sweep:
        rows = []
        prev = None
        for level in range(2):
            sc = _refined(scenario, sweep, level)
            gridl = build_grid(sc)
            Ll = build_model(sc)
            Hl = hamiltonian_for(Ll)
            st0 = initial_state(sc, gridl, Ll, Hl)
            trl = run_simulation(Hl, gridl, st0, sc.dt, sc.n_steps,
                                 store_every=sc.n_steps)
            errl = _error_metric(sc, gridl, trl)
            if errl is None:
                raise ScenarioError(f"{scenario.path}: sweep requires a "
                                    f"scenario with a closed-form solution")
            ratio = (prev / errl) if prev and errl else float("nan")
            rows.append([level, gridl.n_nodes, sc.dt, errl, ratio])
            prev = errl
        _write_csv(os.path.join(out_dir, "convergence.csv"),
                   ["level", "n_nodes", "dt", "linf_error", "ratio"], rows, p)
        _report([f"sweep[{sweep}] ratio = {_fmt(rows[-1][-1], p)}"])
    return EXIT_OK


def _refined(scenario, sweep, level):
    import copy
    sc = copy.deepcopy(scenario)
    factor = 2 ** level
    if sweep == "grid":
        sc.n_nodes = scenario.n_nodes * factor
    elif sweep == "time":
        sc.dt = scenario.dt / factor
    sc.store_every = sc.n_steps  # keep only the endpoints during sweeps
    return sc


def _verify_mesh(scenario, dims):
    box = dict(scenario.verify_box)
    t_lo, t_hi = box.get("t", (0.0, 1.0))
    x_lo, x_hi = box.get("x", (0.0, 1.0))
    u_lo, u_hi = box.get("u", (-2.0, 2.0))
    s = scenario.verify_samples
    axes = [np.linspace(t_lo, t_hi, s)]
    if dims.m:
        axes.append(np.linspace(x_lo, x_hi, s))
    for _ in range(dims.n):
        axes.append(np.linspace(u_lo, u_hi, s))
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [a.ravel() for a in mesh]
    samples = []
    for k in range(flat[0].size):
        t = flat[0][k]
        if dims.m:
            x = np.array([flat[1][k]])
            u = np.array([flat[1 + j][k] for j in range(1, dims.n + 1)])
        else:
            x = np.zeros(0)
            u = np.array([flat[j][k] for j in range(1, dims.n + 1)])
        samples.append((t, x, u))
    return samples


def cmd_verify_hj(scenario, out_dir, seed):
    L = build_model(scenario)
    H = hamiltonian_for(L)
    gamma = build_gamma(scenario, L.dims)
    samples = _verify_mesh(scenario, L.dims)
    conn = reduced_connection(H, gamma)
    rows = []
    sup_closed = 0.0
    sup_hj = 0.0
    sup_flat = 0.0
    for (t, x, u) in samples:
        closed = gamma_closedness_residual(gamma, [(t, x, u)]).max_abs()
        hj = float(np.max(np.abs(hj_residual(H, gamma, t, x, u))))
        flat = float(np.max(np.abs(flatness_residual(conn, t, x, u))))
        sup_closed = max(sup_closed, closed)
        sup_hj = max(sup_hj, hj)
        sup_flat = max(sup_flat, flat)
        rows.append([t] + ([x[0]] if L.dims.m else []) + list(u)
                    + [closed, hj, flat])
    p = scenario.precision
    header = ["t"] + (["x"] if L.dims.m else []) \
        + [f"u_{a + 1}" for a in range(L.dims.n)] \
        + ["closedness", "hj", "flatness"]
    _write_csv(os.path.join(out_dir, "verify_hj.csv"), header, rows, p)
    ok = max(sup_closed, sup_hj, sup_flat) <= scenario.verify_tol
    _report([f"verify-hj: model={scenario.model_name} "
             f"gamma={scenario.gamma_name} samples={len(samples)} seed={seed}",
             f"closedness_sup = {_fmt(sup_closed, p)}",
             f"hj_sup = {_fmt(sup_hj, p)}",
             f"flatness_sup = {_fmt(sup_flat, p)}",
             f"verified = {ok} (tol {scenario.verify_tol:g})"])
    return EXIT_OK if ok else EXIT_REFUSED


def _characteristic_run(scenario, L, H, grid, gamma):
    u0, _ = initial_fields(scenario, grid, L.dims.n)
    compat = restricted_connection_residual(H, gamma, grid, u0, 0.0)
    compat_res = float(np.max(np.abs(compat))) if compat.size else 0.0
    tol = 10.0 * grid.spacing ** 2 if grid.m else 1e-10
    if compat_res > tol:
        raise IncompatibleDataError(compat_res, tol)
    times, frames = evolve_characteristics(H, gamma, grid, u0, 0.0,
                                           scenario.dt, scenario.t_final,
                                           store_every=scenario.store_every)
    return times, frames


def cmd_characteristics(scenario, out_dir, seed):
    _check_store_every(scenario)
    L = build_model(scenario)
    H = hamiltonian_for(L)
    grid = build_grid(scenario)
    gamma = build_gamma(scenario, L.dims)
    times, frames = _characteristic_run(scenario, L, H, grid, gamma)
    states = [lift_by_gamma(gamma, t, grid, u) for t, u in zip(times, frames)]
    p = scenario.precision
    _write_csv(os.path.join(out_dir, "characteristics.csv"),
               _field_header(L.dims.n, grid.m),
               _field_rows(grid, times, states), p)
    rng = np.random.default_rng(seed)
    report = hj_lift_solution_check(H, gamma, grid, times, frames, rng=rng)
    _report([f"characteristics: model={scenario.model_name} "
             f"gamma={scenario.gamma_name} N={grid.n_nodes} seed={seed}",
             f"compatibility_residual = {_fmt(report.compatibility_residual, p)}",
             f"split_residual = {_fmt(report.split_residual, p)}",
             f"contraction_residual = {_fmt(report.contraction_residual, p)}",
             f"pullback_residual = {_fmt(report.pullback_residual, p)}",
             f"frames_checked = {report.frames_checked}"])
    return EXIT_OK


def cmd_compare(scenario, out_dir, seed, sweep=None):
    _check_store_every(scenario)
    L = build_model(scenario)
    H = hamiltonian_for(L)
    grid = build_grid(scenario)
    gamma = build_gamma(scenario, L.dims)

    samples = _verify_mesh(scenario, L.dims)
    sup = 0.0
    for (t, x, u) in samples:
        sup = max(sup,
                  gamma_closedness_residual(gamma, [(t, x, u)]).max_abs(),
                  float(np.max(np.abs(hj_residual(H, gamma, t, x, u)))))
    verified = sup <= scenario.verify_tol

    def run_levels(sc):
        gridl = build_grid(sc)
        Ll = build_model(sc)
        Hl = hamiltonian_for(Ll)
        gammal = build_gamma(sc, Ll.dims)
        times, frames = _characteristic_run(sc, Ll, Hl, gridl, gammal)
        lifted0 = lift_by_gamma(gammal, 0.0, gridl, frames[0])
        direct = run_simulation(Hl, gridl, lifted0, sc.dt, sc.n_steps,
                                store_every=sc.store_every)
        linf = []
        l2 = []
        for k, t in enumerate(times):
            diff = frames[k] - direct.states[k].u
            linf.append(float(np.max(np.abs(diff))))
            l2.append(float(np.sqrt(integrate_density(
                gridl, np.sum(diff ** 2, axis=0)))))
        return times, linf, l2

    times, linf, l2 = run_levels(scenario)
    p = scenario.precision
    _write_csv(os.path.join(out_dir, "compare.csv"),
               ["t", "linf_difference", "l2_difference"],
               [[t, a, b] for t, a, b in zip(times, linf, l2)], p)
    flagged = (not verified) or max(linf) > 1e-2
    lines = [f"compare: model={scenario.model_name} "
             f"gamma={scenario.gamma_name} N={scenario.n_nodes} seed={seed}",
             f"gamma_verified = {verified} (sup {_fmt(sup, p)})",
             f"linf_difference_max = {_fmt(max(linf), p)}",
             f"l2_difference_max = {_fmt(max(l2), p)}",
             f"flagged = {flagged}"]
    if sweep:
        prev = None
        rows = []
        for level in range(2):
            sc = _refined(scenario, sweep, level)
            sc.store_every = scenario.store_every * (2 ** level if sweep == "time" else 1)
            _, linf_l, _ = run_levels(sc)
            val = max(linf_l)
            ratio = (prev / val) if prev and val else float("nan")
            rows.append([level, sc.n_nodes, sc.dt, val, ratio])
            prev = val
        _write_csv(os.path.join(out_dir, "convergence.csv"),
                   ["level", "n_nodes", "dt", "linf_difference", "ratio"],
                   rows, p)
        lines.append(f"sweep[{sweep}] ratio = {_fmt(rows[-1][-1], p)}")
    _report(lines)
    if not verified:
        return EXIT_REFUSED
    return EXIT_OK


def cmd_pairing_check(scenario, out_dir, seed):
    L = build_model(scenario)
    H = hamiltonian_for(L)
    grid = build_grid(scenario)
    state0 = initial_state(scenario, grid, L, H)
    steps = min(scenario.n_steps, scenario.pairing_steps)
    traj = run_simulation(H, grid, state0, scenario.dt, steps, store_every=1)
    perturb = scenario.initial_params.get("perturb_px", 0.0)
    states = traj.states
    if perturb:
        states = [CauchyState(s.t, s.u, s.p_t, s.p_x + perturb)
                  for s in states]
    rng = np.random.default_rng(seed)
    p = scenario.precision
    n = L.dims.n
    worst_pull = 0.0
    pairs = [(random_smooth_variation(grid, n, rng, vertical=False),
              random_smooth_variation(grid, n, rng, vertical=False))
             for _ in range(scenario.pairing_pairs)]
    try:
        for s in states:
            for X, Y in pairs:
                worst_pull = max(worst_pull,
                                 pullback_identity_residual(L, H, grid, s,
                                                            X, Y))
    except ConstraintError as exc:
        _report([f"pairing-check: model={scenario.model_name} seed={seed}",
                 f"off_constraint_residual = {_fmt(exc.residual, p)} "
                 f"(tol {exc.tol:g})",
                 "state is off the momentum constraint; identity not "
                 "asserted"])
        return EXIT_REFUSED
    cot = cotangent_trajectory_residual(
        L, grid, traj.times, [restriction_map_R(s) for s in states],
        rng=rng)
    _report([f"pairing-check: model={scenario.model_name} N={grid.n_nodes} "
             f"steps={steps} pairs={scenario.pairing_pairs} seed={seed}",
             f"pullback_identity_residual_max = {_fmt(worst_pull, p)}",
             f"cotangent_trajectory_residual = {_fmt(cot, p)}"])
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="dedonder-hj",
        description="First-order field dynamics, Hamilton-Jacobi "
                    "verification and pairing residual checks.")
    parser.add_argument("command",
                        choices=["simulate", "verify-hj", "characteristics",
                                 "compare", "pairing-check"])
    parser.add_argument("--scenario", required=True,
                        help="path to a scenario file")
    parser.add_argument("--out", default=None,
                        help="output directory (default: scenario's "
                             "output.directory)")
    parser.add_argument("--seed", type=int, default=42,
                        help="seed of the random-variation generator")
    parser.add_argument("--sweep", choices=["grid", "time"], default=None,
                        help="refinement sweep (simulate and compare only)")
    args = parser.parse_args(argv)
    try:
        scenario = parse_scenario(args.scenario)
        out_dir = _ensure_outdir(args.out or scenario.output_dir)
        if args.sweep and args.command not in ("simulate", "compare"):
            raise ScenarioError(f"--sweep is not supported for "
                                f"{args.command}")
        if args.command == "simulate":
            return cmd_simulate(scenario, out_dir, args.seed, args.sweep)
        if args.command == "verify-hj":
            return cmd_verify_hj(scenario, out_dir, args.seed)
        if args.command == "characteristics":
            return cmd_characteristics(scenario, out_dir, args.seed)
        if args.command == "compare":
            return cmd_compare(scenario, out_dir, args.seed, args.sweep)
        return cmd_pairing_check(scenario, out_dir, args.seed)
    except (ScenarioError, ModelError, GridError, GammaDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IncompatibleDataError, ConstraintError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (NewtonError, BlowupError, CharacteristicBlowup) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
