"""Builders of the four benchmark models from a :class:`BenchmarkConfig`."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..contact import BodySurface, ContactPair, RigidPlane
from ..errors import ConfigurationError
from ..fespace import Body, SideBC
from ..geometry import lower_half_annulus, quarter_annulus, rectangle
from ..materials import LinearElastic, NeoHookean
from ..solver import Model, SolveConfig
from ..splines import graded_breaks
from .config import BenchmarkConfig


@dataclass
class Problem:
    """A ready-to-solve model with its solver settings and metadata."""

    name: str
    model: Model
    solve_config: SolveConfig
    monitors: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def _solve_config(cfg: BenchmarkConfig, steps: int) -> SolveConfig:
    return SolveConfig(load_steps=steps, newton_tol=cfg.newton_tol, max_iter=cfg.max_iter,
                       max_bisections=cfg.max_bisections)


def _two_blocks(cfg, mat, lower_sides, upper_sides, u_breaks=None, spacing=0.0):
    n = (cfg.n_u, cfg.n_v)
    p = cfg.degree
    lo = Body("lower", rectangle(0.0, 0.0, 1.0, 1.0, n, p, spacing=spacing), mat, lower_sides)
    up = Body("upper", rectangle(0.0, 1.0, 1.0, 1.0, n, p, spacing=spacing, u_breaks=u_breaks),
              mat, upper_sides)
    return lo, up


def _slave_master(cfg, a: BodySurface, b: BodySurface):
    """Order a pair so that the configured slave body comes first."""
    names = (a.body.name, b.body.name)
    if cfg.slave and cfg.slave not in names:
        raise ConfigurationError("slave must be one of %s" % (names,))
    return (b, a) if cfg.slave == b.body.name else (a, b)


def build_patch(cfg: BenchmarkConfig) -> Problem:
    """Two stacked unit blocks under a uniform pressure on top.

    The blocks have non-matching parametrizations: the upper block uses a
    slightly graded knot vector in ``u`` and both blocks blend uniform and
    Greville control point spacing, so the contact interface is non-conforming.
    """
    mat = LinearElastic(cfg.lam, cfg.mu)
    s = np.linspace(0.0, 1.0, cfg.n_u - cfg.degree + 1)
    br = (1.0 - cfg.grading) * s + cfg.grading * s**2
    lo, up = _two_blocks(
        cfg, mat,
        {"west": SideBC(fixed={0: 0.0}), "south": SideBC(fixed={1: 0.0}), "north": SideBC("contact")},
        {"west": SideBC(fixed={0: 0.0}), "north": SideBC("neumann", (0.0, -cfg.pressure)),
         "south": SideBC("contact")},
        u_breaks=br, spacing=cfg.spacing,
    )
    sl, ms = _slave_master(cfg, BodySurface(up, "south"), BodySurface(lo, "north"))
    pair = ContactPair(sl, ms, cfg.penalty, cfg.formulation)
    model = Model([lo, up], [pair], cfg.formulation)
    return Problem("patch", model, _solve_config(cfg, cfg.load_steps), [("lower", "south")],
                   {"pressure": cfg.pressure})


def build_blocks(cfg: BenchmarkConfig) -> Problem:
    """Two equal blocks pressed together by a prescribed top displacement."""
    mat = LinearElastic(cfg.lam, cfg.mu)
    v = cfg.displacement
    lo, up = _two_blocks(
        cfg, mat,
        {"west": SideBC(fixed={0: 0.0}), "south": SideBC(fixed={1: 0.0}), "north": SideBC("contact")},
        {"west": SideBC(fixed={0: 0.0}), "north": SideBC(fixed={0: 0.0, 1: lambda lam: -v * lam}),
         "south": SideBC("contact")},
        spacing=cfg.spacing,
    )
    sl, ms = _slave_master(cfg, BodySurface(up, "south"), BodySurface(lo, "north"))
    pair = ContactPair(sl, ms, cfg.penalty, cfg.formulation)
    model = Model([lo, up], [pair], cfg.formulation)
    return Problem("blocks", model, _solve_config(cfg, cfg.load_steps), [("lower", "south")],
                   {"edge": ("upper", "east")})


def build_hertz(cfg: BenchmarkConfig) -> Problem:
    """Quarter of a cylinder with a small hole pressed onto a rigid plane.

    The cylinder (centre at the origin) is loaded by a uniform pressure on
    its upper flat edge; symmetry holds the vertical cut. The plane starts
    ``initial_penetration`` above the lowest point so the first Newton
    iteration sees an active contact point.
    """
    R, r = cfg.radius, cfg.inner_radius
    ub = graded_breaks(cfg.n_u, cfg.element_fraction, cfg.length_fraction, "start")
    vb = graded_breaks(cfg.n_v, cfg.element_fraction, cfg.length_fraction, "end")
    patch = quarter_annulus(r, R, -0.5 * np.pi, (0.0, 0.0), cfg.degree, ub, vb)
    mat = LinearElastic.from_young(cfg.young, cfg.poisson)
    body = Body("cylinder", patch, mat, {
        "west": SideBC(fixed={0: 0.0}),
        "east": SideBC("neumann", (0.0, -cfg.pressure)),
        "north": SideBC("contact"),
    })
    plane = RigidPlane((0.0, -R + cfg.initial_penetration), (0.0, 1.0))
    pair = ContactPair(BodySurface(body, "north"), plane, cfg.penalty, cfg.formulation)
    model = Model([body], [pair], cfg.formulation)
    load = 2.0 * cfg.pressure * (R - r)
    return Problem("hertz", model, _solve_config(cfg, cfg.load_steps), [],
                   {"load": load, "radius": R, "young": cfg.young, "poisson": cfg.poisson})


def ironing_schedule(cfg: BenchmarkConfig):
    """Prescribed indenter motion ``(ux(lam), uy(lam))`` and the total step count.

    The first ``steps_vertical`` steps press the indenter down by ``depth``;
    each further step moves it sideways by ``travel / steps_horizontal_full``.
    """
    nv, nh = cfg.steps_vertical, cfg.steps_horizontal
    total = nv + nh
    dx = cfg.travel / cfg.steps_horizontal_full

    def ux(lam):
        return dx * max(lam * total - nv, 0.0)

    def uy(lam):
        return -cfg.depth * min(lam * total / nv, 1.0)

    return ux, uy, total


def build_ironing(cfg: BenchmarkConfig) -> Problem:
    """Hyperelastic half cylinder pressed into and slid along a periodic slab."""
    W, H, R = cfg.slab_width, cfg.slab_height, cfg.radius
    nu = cfg.poisson
    slab_mat = NeoHookean.from_young(cfg.young, nu)
    ind_mat = NeoHookean.from_young(cfg.young_indenter, nu)
    p = cfg.degree
    slab = Body("slab", rectangle(0.0, 0.0, W, H, (cfg.n_u + p, cfg.n_v + p), p, spacing="greville"),
                slab_mat, {
                    "south": SideBC(fixed={0: 0.0, 1: 0.0}),
                    "west": SideBC("periodic"),
                    "east": SideBC("periodic"),
                    "north": SideBC("contact"),
                })
    ux, uy, total = ironing_schedule(cfg)
    ind_patch = lower_half_annulus(
        cfg.inner_radius, R, (cfg.indenter_x, H + R), p,
        np.linspace(0.0, 1.0, cfg.indenter_n_u + 1), np.linspace(0.0, 1.0, cfg.indenter_n_v + 1),
    )
    moved = SideBC(fixed={0: ux, 1: uy})
    indenter = Body("indenter", ind_patch, ind_mat, {
        "west": moved, "east": SideBC(fixed={0: ux, 1: uy}), "north": SideBC("contact"),
    })
    sl, ms = _slave_master(cfg, BodySurface(indenter, "north"), BodySurface(slab, "north"))
    pair = ContactPair(sl, ms, cfg.penalty, cfg.formulation)
    model = Model([slab, indenter], [pair], cfg.formulation, periodic=[("slab", "west", "east")])
    return Problem("ironing", model, _solve_config(cfg, total), [("slab", "south")],
                   {"steps_vertical": cfg.steps_vertical, "total_steps": total})


BUILDERS = {"patch": build_patch, "blocks": build_blocks, "hertz": build_hertz,
            "ironing": build_ironing}


def build_problem(cfg: BenchmarkConfig) -> Problem:
    return BUILDERS[cfg.benchmark](cfg.validate())
