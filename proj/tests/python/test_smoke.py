"""Smoke tests for the python extension: thin sanity checks that the main
operations are callable and numerically consistent with the C++ suites."""

import math

import numpy as np
import pytest

import huberpen as hp


def test_version():
    assert hp.__version__


def test_penalty_kernel_values():
    assert hp.one_sided_huber(-2.0, 1.0) == 0.0
    assert hp.one_sided_huber(0.0, 1.0) == pytest.approx(0.25)
    assert hp.one_sided_huber(1.0, 1.0) == pytest.approx(1.0)
    assert hp.one_sided_huber_deriv(0.0, 0.5) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        hp.one_sided_huber(1.0, 0.0)


def test_halfspace_penalty_and_gradient():
    hs = hp.Halfspace(np.array([3.0, 4.0]), 0.0)
    assert hs.a_norm == pytest.approx(5.0)
    x = np.array([3.0, 4.0])
    assert hp.penalty_value(x, hs, 0.1) == pytest.approx(5.0)
    g = hp.penalty_gradient(x, hs, 0.1)
    np.testing.assert_allclose(g, np.array([0.6, 0.8]), atol=1e-15)
    assert np.linalg.norm(g) <= 1.0 + 1e-15
    assert hp.penalty_value(x, hs, 0.0) == pytest.approx(hp.halfspace_distance(x, hs))
    assert hp.gradient_delta_shift_bound(2.0, 1.0) == pytest.approx(0.25)


def test_schedule_and_validation():
    sch = hp.Schedule()  # g=1/4, d=3/4, s=1
    assert sch.gamma(16) == pytest.approx(2.0)
    assert sch.delta(16) == pytest.approx(0.125)
    assert sch.step(10) == pytest.approx(0.1)
    assert hp.rate_exponent(sch) == pytest.approx(0.5)
    assert hp.schedule_is_valid(sch)
    bad = hp.Schedule(g=0.8, d=0.5)
    assert not hp.schedule_is_valid(bad)
    assert any("error" in d for d in hp.validate(bad))


def test_generate_solve_and_oracle_roundtrip():
    spec = hp.GeneratorSpec()
    spec.active_optimum = True
    p = hp.generate_problem(4, 6, 7, spec)
    assert p.n == 4 and p.m == 6
    assert p.feasible(p.witness)

    sol = hp.solve_constrained_exact(p, 1e-10)
    assert sol.kkt_residual <= 1e-9
    assert hp.f_value(p, sol.x_star) == pytest.approx(sol.f_star)

    sch = hp.Schedule(step0=1.0 / (2.0 * p.objective.grad_lipschitz))
    trace = hp.solve(p, sch, iterations=20000, seed=3, x_star=sol.x_star)
    assert not trace.diverged
    ks = [s.k for s in trace.snapshots]
    assert ks[0] == 1 and ks[-1] == 20000 and ks == sorted(ks)
    errs = [s.sq_err_to_opt for s in trace.snapshots]
    assert errs[-1] < 0.05 * errs[0]
    assert trace.to_csv().startswith(
        "k,f_value,dist_feasible,sq_err_to_opt,gamma,delta,step,index_sampled\n"
    )

    # round-trip through json keeps the solve bit-identical
    q = hp.problem_from_json(hp.problem_to_json(p))
    trace2 = hp.solve(q, sch, iterations=20000, seed=3, x_star=sol.x_star)
    assert trace2.to_csv() == trace.to_csv()


def test_minimize_penalized_tracks_the_optimum():
    spec = hp.GeneratorSpec()
    spec.active_optimum = True
    p = hp.generate_problem(3, 4, 11, spec)
    sol = hp.solve_constrained_exact(p, 1e-10)
    xg = hp.minimize_penalized(p, 1e4, 1e-6, 1e-4)
    assert np.linalg.norm(xg - sol.x_star) <= 1e-3
    proj = hp.project_polyhedron(p, xg + 5.0, 1e-10)
    assert p.feasible(proj, 1e-9)


def test_ensemble_and_rate_fit():
    ks = []
    mse = []
    k = 10
    while k <= 100000:
        ks.append(k)
        mse.append(3.0 * k**-0.5)
        k = int(k * 1.4) + 1
    fit = hp.rate_fit(ks, mse, 10, 100000)
    assert fit.slope == pytest.approx(-0.5, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-10)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-9)

    spec = hp.GeneratorSpec()
    spec.active_optimum = True
    p = hp.generate_problem(3, 4, 11, spec)
    sol = hp.solve_constrained_exact(p, 1e-10)
    sch = hp.Schedule(step0=1.0 / (2.0 * p.objective.grad_lipschitz))
    agg = hp.solve_ensemble(p, sch, iterations=2000, num_seeds=3, seed=1, x_star=sol.x_star)
    assert agg.seeds_used == 3
    assert len(agg.ks) == len(agg.mean_sq_err) == len(agg.mean_dist_feasible)
    assert agg.mean_sq_err[-1] < agg.mean_sq_err[0]
