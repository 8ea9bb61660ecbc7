import numpy as np
import pytest

from conftest import two_block_model
from iga_contact.contact import BodySurface, ContactPair
from iga_contact.errors import ConfigurationError, InadmissibleStateError, SolverError
from iga_contact.fespace import Body, SideBC
from iga_contact.geometry import rectangle
from iga_contact.materials import LinearElastic, NeoHookean
from iga_contact.solver import (
    Model,
    SolveConfig,
    _zigzag,
    reaction_force,
    solve,
    solve_or_raise,
)


def patch_model(form="ccs", n=10):
    mat = LinearElastic(1.0, 0.5)
    s = np.linspace(0, 1, n - 1)
    lo = Body("lower", rectangle(0, 0, 1, 1, (n, n), 2, spacing=0.05), mat, {
        "west": SideBC(fixed={0: 0.0}), "south": SideBC(fixed={1: 0.0}), "north": SideBC("contact")})
    up = Body("upper", rectangle(0, 1, 1, 1, (n, n), 2, spacing=0.05, u_breaks=0.95 * s + 0.05 * s**2),
              mat, {"west": SideBC(fixed={0: 0.0}), "north": SideBC("neumann", (0.0, -0.01)),
                    "south": SideBC("contact")})
    pair = ContactPair(BodySurface(up, "south"), BodySurface(lo, "north"), 100.0, form)
    return Model([lo, up], [pair], form)


def test_patch_converges_and_reaction_balances_load():
    model = patch_model()
    state, trace = solve(model, SolveConfig(load_steps=10), monitors=[("lower", "south")])
    assert trace.success and len(trace.steps) == 10
    assert all(s.converged for s in trace.steps)
    for k, s in enumerate(trace.steps, 1):
        assert s.load_factor == k / 10
        assert abs(s.reactions["lower.south"][1] - 0.01 * s.load_factor) < 1e-10
    r = reaction_force(model, state.u, 1.0, "lower", "south")
    assert abs(r[1] - 0.01) < 1e-10 and abs(r[0]) < 1e-14


def test_zero_load_zero_reaction():
    model = patch_model()
    r = reaction_force(model, np.zeros(model.n_dofs), 0.0, "lower", "south")
    assert np.all(r == 0.0)


def test_bisection_hits_original_step_boundaries():
    model = two_block_model("gpts", material=NeoHookean(0.5, 0.5))
    original = model.assemble
    failed = []

    def flaky(u, lam, frozen=None):
        # reject the first attempt to reach 0.75 so that step 3 bisects once
        if lam == 0.75 and not failed:
            failed.append(lam)
            raise InadmissibleStateError("injected")
        return original(u, lam, frozen)

    model.assemble = flaky
    state, trace = solve(model, SolveConfig(load_steps=4))
    assert trace.success
    assert [s.load_factor for s in trace.steps] == [0.25, 0.5, 0.75, 1.0]
    assert trace.steps[2].bisections >= 1 and trace.steps[0].bisections == 0
    assert state.load_factor == 1.0


def test_bisection_exhaustion_reports_failure():
    model = two_block_model("gpts", material=NeoHookean(0.5, 0.5))
    original = model.assemble

    def broken(u, lam, frozen=None):
        if lam > 0.5:
            raise InadmissibleStateError("injected")
        return original(u, lam, frozen)

    model.assemble = broken
    cfg = SolveConfig(load_steps=2, max_bisections=3)
    state, trace = solve(model, cfg)
    assert not trace.success and "step 2" in trace.message
    assert state.load_factor == 0.5
    assert trace.steps[-1].converged is False and trace.steps[-1].bisections == 3
    with pytest.raises(SolverError) as info:
        solve_or_raise(model, cfg)
    assert info.value.trace.success is False


def test_zigzag_detection():
    assert _zigzag([1.0, 0.5, 0.3, 0.5, 0.3], 4, 1e-3)
    assert not _zigzag([1.0, 0.1, 0.01, 1e-3], 4, 1e-3)
    assert not _zigzag([1.0, 0.5], 4, 1e-3)


def test_fast_local_convergence():
    model = two_block_model("ccs", material=NeoHookean(0.5, 0.5))
    _, trace = solve(model, SolveConfig(load_steps=2))
    assert trace.success
    for s in trace.steps:
        res = s.residuals
        ref = res[0] if res else 1.0
        for a, b in zip(res, res[1:]):
            if a < 1e-3 * ref and b > 1e-10 * ref:
                assert b <= 0.1 * a


def test_deterministic_trace():
    traces = []
    for _ in range(2):
        model = two_block_model("gpts", material=NeoHookean(0.5, 0.5))
        state, trace = solve(model, SolveConfig(load_steps=2))
        traces.append((state.u.tobytes(), [tuple(s.residuals) for s in trace.steps]))
    assert traces[0] == traces[1]


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SolveConfig(load_steps=0)
    with pytest.raises(ConfigurationError):
        SolveConfig(newton_tol=2.0)
    with pytest.raises(ConfigurationError):
        Model([], [], "mortar")
