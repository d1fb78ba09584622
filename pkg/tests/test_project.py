import numpy as np
import pytest

from stosymp.core import ExtendedState, HamiltonianModel, PhaseState, build_noise_grid
from stosymp.project import (NoConvergence, ProjectionConfig, lift, project_map,
                             projection_step, restrict, simulate)
from stosymp.splitflow import strang_recipe, lie_recipe
from stosymp.harness import make_stepper
from stosymp.modelzoo import get_example


def test_lift_restrict_oracles():
    z = PhaseState([1.0], [2.0])
    s = lift(z)
    assert np.array_equal([s.x[0], s.u[0], s.y[0], s.v[0]], [1, 1, 2, 2])
    assert s.on_diagonal()
    back = restrict(s)
    assert back.x[0] == 1.0 and back.y[0] == 2.0
    avg = restrict(ExtendedState([1.0], [3.0], [0.0], [4.0]))
    assert avg.x[0] == 2.0 and avg.y[0] == 2.0


def test_project_identity_map():
    s0 = lift(PhaseState([0.7], [-0.2]))
    out, rep = project_map(lambda s: s, s0, ProjectionConfig())
    assert rep.iterations == 1
    assert np.all(rep.lam == 0.0)
    assert np.array_equal(out.x, s0.x) and np.array_equal(out.y, s0.y)


def test_project_constant_defect_fixed_point():
    # map with constant copy separation 4 in x: lambda converges to (-2, 0)
    s0 = lift(PhaseState([0.0], [0.0]))

    def map_fn(s):
        return ExtendedState([2.0], [-2.0], s.y, s.v)

    out, rep = project_map(map_fn, s0, ProjectionConfig(tol=1e-14))
    assert np.allclose(rep.lam, [-2.0, 0.0], atol=1e-12)
    assert rep.residual <= 1e-12
    # corrected state back on the diagonal
    assert abs(out.x[0] - out.u[0]) <= 1e-12


def test_divergence_guard():
    s0 = lift(PhaseState([0.0], [0.0]))

    def map_fn(s):
        val = -5.0 * (s.x - s.u) + 4.0
        return ExtendedState(0.5 * val, -0.5 * val, s.y, s.v)

    with pytest.raises(NoConvergence):
        project_map(map_fn, s0, ProjectionConfig(fallback_full_newton=False))


def test_full_newton_fallback():
    s0 = lift(PhaseState([0.0], [0.0]))

    def map_fn(s):
        val = -5.0 * (s.x - s.u) + 4.0
        return ExtendedState(0.5 * val, -0.5 * val, s.y, s.v)

    out, rep = project_map(map_fn, s0, ProjectionConfig())
    assert rep.used_fallback
    assert np.allclose(rep.lam, [0.5, 0.0], atol=1e-10)


def test_rotation_oracle_strang():
    # harmonic oscillator, deterministic: exact flow is a clockwise rotation
    model = HamiltonianModel(d=1, m=0,
                             h=(lambda x, y: 0.5 * (x[0] ** 2 + y[0] ** 2),),
                             grad_x=(lambda x, y: x.copy(),),
                             grad_y=(lambda x, y: y.copy(),))
    g = build_noise_grid(0, 0, 0, 0.0, 0.1, 2)
    z, rep = projection_step(model, strang_recipe([0.0]), PhaseState([1.0], [0.0]),
                             g, 0, ProjectionConfig(tol=1e-13), substeps=2)
    assert abs(z.x[0] - np.cos(0.1)) < 1e-4
    assert abs(z.y[0] + np.sin(0.1)) < 1e-4


def test_kernel_membership_and_defect_symmetry():
    ex = get_example("ex1")
    g = build_noise_grid(9, 0, 1, 0.0, 0.01, 2)
    cfg = ProjectionConfig(tol=1e-13)
    recipe = lie_recipe([0.5, 0.5])
    z = ex.z0
    incs_consumed, rep = projection_step(ex.model, recipe, z, g, 0, cfg, 2)
    lam = rep.lam
    # reconstruct the perturbed input/output to check the symmetry identity
    l1, l2 = lam[:1], lam[1:]
    from stosymp.splitflow import stage_increments, apply_stages
    incs = stage_increments(recipe, g, 0, 2)
    s_in = ExtendedState(z.x + l1, z.x - l1, z.y + l2, z.y - l2)
    s_out = apply_stages(recipe, ex.model, s_in, incs)
    assert abs((s_out.u[0] - s_out.x[0]) - (s_in.x[0] - s_in.u[0])) <= 4 * cfg.tol
    assert abs((s_out.v[0] - s_out.y[0]) - (s_in.y[0] - s_in.v[0])) <= 4 * cfg.tol
    # corrected output is on ker(A) within 2 tol
    corr = ExtendedState(s_out.x + l1, s_out.u - l1, s_out.y + l2, s_out.v - l2)
    assert abs(corr.x[0] - corr.u[0]) <= 2 * cfg.tol
    assert abs(corr.y[0] - corr.v[0]) <= 2 * cfg.tol


def test_simulate_zero_steps():
    ex = get_example("ex1")
    g = build_noise_grid(0, 0, 1, 0.0, 0.01, 2)
    st = make_stepper("ses-sp-1", ex, g, 2, 0.0)
    traj = simulate(st, ex.z0, 0, 0.01)
    assert len(traj.states) == 1
    assert traj.final is ex.z0


def test_defect_series_bounded():
    ex = get_example("ex1")
    n = 100
    g = build_noise_grid(11, 0, 1, 0.0, n * 1e-2, 2 * n)
    st = make_stepper("ses-sp-1", ex, g, 2, 1.0, tol=1e-12)
    traj = simulate(st, ex.z0, n, 1e-2)
    ds = traj.defect_series()
    assert np.all(np.isfinite(ds))
    assert np.max(ds) < 1.0  # bounded along the run


def test_noconvergence_carries_step_index():
    ex = get_example("ex1")
    g = build_noise_grid(0, 0, 1, 0.0, 0.1, 4)
    st = make_stepper("ses-sp-1", ex, g, 2, 0.0, tol=1e-12, max_iter=1)

    def bad(z, step):
        raise NoConvergence("forced")

    with pytest.raises(NoConvergence) as err:
        simulate(bad, ex.z0, 2, 0.05)
    assert err.value.step == 0
