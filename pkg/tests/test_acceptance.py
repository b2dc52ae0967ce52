"""End-to-end acceptance suite.

Each test exercises one bundled experiment at its stated tolerance and
reports one pass/fail line; the terminal summary lists all criteria.
Everything is deterministic: fixed lattices and a fixed-seed sample
generator, no timing dependence.
"""

import numpy as np
import pytest

from frontlim import (ArrivalReference, BistableModel, CHAMFER_FACTOR,
                      EpsilonLadder, Grid, ScalarField, arrival_time,
                      bracket_run, constant_speed_model, front_position,
                      front_speed, generation_time, hausdorff_distance,
                      hj_run, hyperplane_interface, mcf_run,
                      no_interior_check, rd_run, rd_stable_dt,
                      represent_field, run_convergence_study, two_speed_model,
                      wave_front_initial, zero_level_set)
from frontlim.hamilton_jacobi import HJConfig, curvature_cfl, first_order_cfl
from frontlim.reaction_diffusion import RDConfig


def refraction_velocity():
    return two_speed_model(1.0, 2.0, hyperplane_interface([1.0], 0.0),
                           rho=0.05, k=0.35)


def line_grid(h, lo, hi):
    n = int(round((hi - lo) / h)) + 1
    return Grid(origin=(lo,), h=h, extents=(n,))


def square_grid(h, half):
    n = int(round(2 * half / h)) + 1
    return Grid(origin=(-half, -half), h=h, extents=(n, n))


def circle_data(grid, radius=1.0):
    X, Y = grid.meshgrid()
    return ScalarField(grid, radius - np.hypot(X, Y))


def radius_ode(radius, drift, t_end, n_steps=20000):
    """RK4 for the shrinking-circle law R' = -1/R - drift."""
    r = radius
    dt = t_end / n_steps
    f = lambda R: -1.0 / R - drift
    for _ in range(n_steps):
        k1 = f(r)
        k2 = f(r + 0.5 * dt * k1)
        k3 = f(r + 0.5 * dt * k2)
        k4 = f(r + dt * k3)
        r += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return r


def test_criterion_1_travelling_wave_identity(criterion):
    rng = np.random.default_rng(0)
    model = BistableModel(refraction_velocity(), epsilon=0.02)
    x = rng.uniform(-1.5, 2.0, (1000, 1))
    r = rng.uniform(-20.0, 20.0, 1000)
    c = model.wave_speed(x)
    q = model.wave_profile(r, x)
    qr = 1.0 - q * q
    qrr = -2.0 * q * qr
    residual = np.abs(qrr + c * qr - 2.0 * (q - c / 2) * (q * q - 1)).max()
    midpoint = np.abs(model.wave_profile(0.0, x) - c / 2).max()
    ok = residual < 1e-10 and midpoint < 1e-12
    assert criterion(1, "travelling-wave identity", ok,
                     "residual %.2e < 1e-10, midpoint %.2e < 1e-12"
                     % (residual, midpoint))


def test_criterion_2_rd_front_speed(criterion):
    eps = 0.02
    model = BistableModel(constant_speed_model(0.8), epsilon=eps)
    grid = line_grid(eps / 5, -0.5, 1.0)
    g = wave_front_initial(model, grid, grid.points()[:, 0])
    cfg = RDConfig(model=model, grid=grid, dt=rd_stable_dt(model, grid),
                   t_end=0.5, record_every=20)
    traj = rd_run(cfg, g)
    speed = front_speed(traj, 0.1, 0.5)
    ok = 0.76 <= speed <= 0.84
    assert criterion(2, "rd front speed", ok,
                     "fitted %.4f in [0.76, 0.84]" % speed)


def test_criterion_3_singular_limit_convergence(criterion):
    vel = refraction_velocity()
    ladder = EpsilonLadder(velocity=vel, epsilons=(0.08, 0.04, 0.02),
                           origin=(-1.5,), lengths=(3.5,), scaling="one")
    x0 = 0.7  # the front crosses the speed jump at t = 0.35

    def initial(model, grid):
        return wave_front_initial(model, grid, x0 - grid.points()[:, 0])

    ref_grid = ladder.grid_for(min(ladder.epsilons))
    u0_ref = ScalarField(ref_grid,
                         (x0 - ref_grid.points()[:, 0]).reshape(ref_grid.shape))
    report = run_convergence_study(ladder, initial,
                                   ArrivalReference(u0_ref, vel),
                                   times=(0.2, 0.5, 1.0), beta=0.2)
    finest = report.entries[-1]
    decreasing = all(report.hausdorff_strictly_decreasing)
    small = max(finest.distances) <= 0.06
    detail = ("distances per eps " +
              "; ".join("%.3g: %s" % (e.eps,
                                      ["%.4f" % d for d in e.distances])
                        for e in report.entries))
    assert criterion(3, "singular-limit convergence", decreasing and small,
                     detail + " (finest <= 0.06, strictly decreasing)")


def test_criterion_4_hj_arrival_cross_validation(criterion):
    vel = two_speed_model(1.0, 2.0, hyperplane_interface([1.0, 0.0], 0.25),
                          rho=0.05, k=0.35)
    grid = square_grid(h=0.02, half=2.0)
    u0 = circle_data(grid)
    dt = 0.9 * first_order_cfl(grid, 2.0)
    sol = hj_run(HJConfig(grid=grid, dt=dt, t_end=0.5, record_every=5),
                 u0, vel)
    worst = -np.inf
    rows = []
    for t in (0.1, 0.2, 0.3, 0.4, 0.5):
        d = hausdorff_distance(sol.front_at(t).gamma,
                               zero_level_set(represent_field(t, u0, vel)).gamma)
        bound = 2 * grid.h + 0.09 * 2.0 * t
        rows.append("t=%.1f %.4f<=%.4f" % (t, d, bound))
        worst = max(worst, d - bound)
    assert criterion(4, "hj/arrival cross-validation", worst <= 0,
                     "; ".join(rows))


def test_criterion_5_shrinking_circle_first_order(criterion):
    grid = square_grid(h=0.02, half=2.0)
    u0 = circle_data(grid)
    dt = 0.9 * first_order_cfl(grid, 1.0)
    sol = hj_run(HJConfig(grid=grid, dt=dt, t_end=0.5, record_every=10),
                 u0, constant_speed_model(1.0))
    tri = sol.front_at(0.5)
    err = np.abs(np.hypot(tri.gamma[:, 0], tri.gamma[:, 1]) - 0.5).max()
    ok = err <= 2 * grid.h
    assert criterion(5, "shrinking circle (first order)", ok,
                     "radius error %.4f <= 2h = %.4f" % (err, 2 * grid.h))


def test_criterion_6_curvature_flow_circle(criterion):
    grid = square_grid(h=0.025, half=1.6)
    u0 = circle_data(grid)
    rows = []
    worst = -np.inf
    for drift in (0.0, 0.5):
        model = None if drift == 0 else constant_speed_model(drift)
        dt = 0.9 * min(curvature_cfl(grid), first_order_cfl(grid, max(drift, 1e-9)))
        sol = mcf_run(HJConfig(grid=grid, dt=dt, t_end=0.3, record_every=200,
                               curvature=True), u0, model)
        tri = sol.front_at(0.3)
        r = np.hypot(tri.gamma[:, 0], tri.gamma[:, 1])
        exact = np.sqrt(1.0 - 2 * 0.3) if drift == 0 else radius_ode(1.0, drift, 0.3)
        err = np.abs(r - exact).max()
        rows.append("drift=%.1f err %.4f" % (drift, err))
        worst = max(worst, err)
    ok = worst <= 2 * grid.h
    assert criterion(6, "curvature-flow circle", ok,
                     "; ".join(rows) + " <= 2h = %.3f" % (2 * grid.h))


def test_criterion_7_generation_time_scaling(criterion):
    results = []
    for scaling, beta, tol in (("one", 0.2, 0.20), ("two", 0.4, 0.25)):
        vel = constant_speed_model(0.3)
        ladder = EpsilonLadder(velocity=vel, epsilons=(0.08, 0.04, 0.02),
                               origin=(-1.0,), lengths=(2.0,), scaling=scaling)
        ratios = []
        for eps in ladder.epsilons:
            model = ladder.model_for(eps)
            grid = ladder.grid_for(eps)
            g = ScalarField(grid, 0.9 * np.tanh(3 * grid.axis_coords(0)))
            res = generation_time(model, g, beta)
            assert res.time is not None
            ratios.append(res.ratio)
        spread = (max(ratios) - min(ratios)) / (sum(ratios) / len(ratios))
        results.append((scaling, spread, tol, spread <= tol))
    ok = all(r[3] for r in results)
    assert criterion(7, "generation-time scaling", ok,
                     "; ".join("scaling %s spread %.3f <= %.2f"
                               % (s, sp, tl) for s, sp, tl, _ in results))


def test_criterion_8_no_interior_band_ratio(criterion):
    vel = two_speed_model(1.0, 2.0, hyperplane_interface([1.0, 0.0], 0.25),
                          rho=0.05, k=0.35)
    times = (0.1, 0.2, 0.3, 0.4, 0.5)
    rows = []
    ok = True
    for h, half in ((0.02, 2.0), (0.01, 2.0)):
        grid = square_grid(h=h, half=half)
        u0 = circle_data(grid)
        entries = [(t, represent_field(t, u0, vel)) for t in times]
        report = no_interior_check(entries, factor=4.0)
        worst = max(r.ratio for r in report.rows)
        rows.append("h=%g worst ratio %.2f" % (h, worst))
        ok = ok and not report.fattening_detected
    assert criterion(8, "no-interior band ratio", ok,
                     "; ".join(rows) + " <= 4 on both grids")


def test_criterion_9_monotone_scheme_properties(criterion):
    checks = []

    # discrete comparison, both solvers, on a fixed pseudo-random pair
    rng = np.random.default_rng(1)
    grid = line_grid(0.02, -1.0, 1.0)
    a = rng.uniform(-1, 1, grid.shape)
    b = np.minimum(a + rng.uniform(0, 0.4, grid.shape), 1.0)
    model = BistableModel(constant_speed_model(0.8), epsilon=0.05)
    cfg = RDConfig(model=model, grid=grid, dt=rd_stable_dt(model, grid),
                   t_end=0.05, record_every=1)
    ta = rd_run(cfg, ScalarField(grid, a))
    tb = rd_run(cfg, ScalarField(grid, b))
    checks.append(("rd comparison",
                   all(np.all(x.values <= y.values)
                       for x, y in zip(ta.snapshots, tb.snapshots))))
    checks.append(("rd maximum principle",
                   all(-1.0 <= s.min() and s.max() <= 1.0
                       for s in ta.snapshots + tb.snapshots)))

    vel = constant_speed_model(1.0)
    dt = 0.9 * first_order_cfl(grid, 1.0)
    ha = hj_run(HJConfig(grid=grid, dt=dt, t_end=0.1, record_every=1),
                ScalarField(grid, a), vel)
    hb = hj_run(HJConfig(grid=grid, dt=dt, t_end=0.1, record_every=1),
                ScalarField(grid, b), vel)
    checks.append(("hj comparison",
                   all(np.all(x.values <= y.values)
                       for x, y in zip(ha.snapshots, hb.snapshots))))

    # ball growth: T never exceeds chamfer distance over the speed floor
    grid2 = square_grid(h=0.05, half=1.0)
    rho = 0.5
    vel2 = two_speed_model(1.0, 2.0, hyperplane_interface([1.0, 0.0], 0.0),
                           rho=rho)
    seed = np.array([0.25, -0.15])
    T = arrival_time(seed, vel2, grid2)
    T_floor = arrival_time(seed, constant_speed_model(rho), grid2)
    checks.append(("dijkstra ball growth",
                   bool(np.all(T.times <= T_floor.times + 1e-12))))

    # geometric invariance of the zero set under cubing
    grid3 = square_grid(h=0.04, half=2.0)
    base = circle_data(grid3)
    s1 = hj_run(HJConfig(grid=grid3, dt=0.9 * first_order_cfl(grid3, 1.0),
                         t_end=0.3, record_every=10), base, vel)
    s2 = hj_run(HJConfig(grid=grid3, dt=0.9 * first_order_cfl(grid3, 1.0),
                         t_end=0.3, record_every=10),
                ScalarField(grid3, base.values ** 3), vel)
    d = hausdorff_distance(s1.front_at(0.3).gamma, s2.front_at(0.3).gamma)
    checks.append(("zero-set invariance under cubing", d <= 2 * grid3.h))

    ok = all(passed for _, passed in checks)
    assert criterion(9, "monotone-scheme properties", ok,
                     "; ".join("%s %s" % (n, "ok" if p else "FAIL")
                               for n, p in checks))


def test_criterion_10_envelope_bracket_gap(criterion):
    vel = refraction_velocity()
    rows = []
    ok = True
    for eps in (0.08, 0.04, 0.02):
        h = eps / 4
        grid = line_grid(h, -1.5, 2.0)
        u0 = ScalarField(grid, (1.0 - grid.points()[:, 0]).reshape(grid.shape))
        res = bracket_run(u0, vel, eps, t_end=1.0, record_every=10)
        gap = float(np.nanmax(res.gaps))
        bound = 2 * h + 3 * eps
        rows.append("eps=%.2f gap %.4f <= %.4f" % (eps, gap, bound))
        ok = ok and gap <= bound
    assert criterion(10, "envelope bracket gap", ok, "; ".join(rows))
