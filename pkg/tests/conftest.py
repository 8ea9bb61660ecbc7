import numpy as np
import pytest

from iga_contact.contact import BodySurface, ContactPair
from iga_contact.fespace import Body, SideBC
from iga_contact.geometry import rectangle
from iga_contact.materials import LinearElastic, NeoHookean
from iga_contact.solver import Model


def two_block_model(formulation, n=6, material=None, shift=0.2, grade=0.25):
    """Small non-matching two-block contact model for tangent and assembly checks."""
    mat = NeoHookean(1.0, 0.5) if material is None else material
    s = np.linspace(0.0, 1.0, n - 1)
    br = (1 - grade) * s + grade * s**2
    lo = Body("lower", rectangle(0, 0, 1, 1, (n, n), 2), mat, {
        "west": SideBC(fixed={0: 0.0}), "south": SideBC(fixed={1: 0.0}), "north": SideBC("contact")})
    up = Body("upper", rectangle(shift, 1, 1, 1, (n, n), 2, u_breaks=br), mat, {
        "north": SideBC("neumann", (0.0, -0.01)), "south": SideBC("contact")})
    pair = ContactPair(BodySurface(up, "south"), BodySurface(lo, "north"), 100.0, formulation)
    return Model([lo, up], [pair], formulation)


def penetrating_state(model, seed=3):
    """Random displacement with the upper block pushed into the lower one."""
    rng = np.random.default_rng(seed)
    u = np.zeros(model.n_dofs)
    lo, up = model.by_name["lower"], model.by_name["upper"]
    su, sl = model.body_slice(up), model.body_slice(lo)
    u[su] = 0.01 * rng.standard_normal(up.n_dofs)
    u[su.start + 1 : su.stop : 2] -= 0.02
    u[sl] = 0.005 * rng.standard_normal(lo.n_dofs)
    return u


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
