"""Post-processing: stress sampling, patch error, pressure profiles and
oscillation measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..contact import BodySurface, gap_point
from ..solver import Model
from ..splines import physical_basis, side_parameter


@dataclass
class FieldSample:
    """Fields of one body on a uniform parametric grid (u fastest)."""

    body: str
    xi: np.ndarray
    eta: np.ndarray
    X: np.ndarray
    u: np.ndarray
    sigma: np.ndarray  # (k, 2, 2) Cauchy stress


def _sample(model: Model, u_full, body, U, V):
    b = model.by_name[body]
    pb = physical_basis(b.patch, U, V)
    ub = np.asarray(u_full)[model.body_slice(b)].reshape(-1, 2)[pb.index]
    disp = np.einsum("kb,kbi->ki", pb.R, ub)
    F = np.eye(2) + np.einsum("kbi,kbJ->kiJ", ub, pb.grad)
    xi, eta = np.meshgrid(U, V)
    return FieldSample(body, xi.ravel(), eta.ravel(), pb.X, disp, b.material.cauchy(F))


def sample_fields(model: Model, u_full, n=41):
    """Field samples of every body on an ``n`` x ``n`` parametric grid."""
    out = []
    for b in model.bodies:
        (u0, u1), (v0, v1) = b.patch.knot_u.domain, b.patch.knot_v.domain
        out.append(_sample(model, u_full, b.name, np.linspace(u0, u1, n), np.linspace(v0, v1, n)))
    return out


def patch_test_error(model: Model, u_full, pressure, n=61):
    """Pointwise ``|sigma_yy + p| / p`` over all bodies.

    Returns ``(X, err)`` with reference coordinates of the sample points.
    """
    Xs, errs = [], []
    for f in sample_fields(model, u_full, n):
        Xs.append(f.X)
        errs.append(np.abs(f.sigma[:, 1, 1] + pressure) / pressure)
    return np.vstack(Xs), np.concatenate(errs)


def hertz_pressure_profile(model: Model, u_full, pair=None):
    """Contact pressure ``-eps min(g, 0)`` at the evaluation points of the slave.

    Returns the current horizontal positions and the pressures, sorted by ``x``.
    """
    pair = model.pairs[0] if pair is None else pair
    slave = pair.slave
    xi, _ = pair.points(slave)
    pts = slave.points(u_full)
    xs, ps = [], []
    for t in xi:
        gp = gap_point(slave, t, pts, pair.master, u_full)
        f, R = slave.basis(t, 0)
        x = R[0] @ pts[f : f + slave.p + 1]
        xs.append(x[0])
        ps.append(-pair.penalty * min(gp.gap, 0.0))
    xs, ps = np.asarray(xs), np.asarray(ps)
    order = np.argsort(xs)
    return xs[order], ps[order]


def contact_half_width(x, p):
    """Largest ``|x|`` with non-zero pressure."""
    act = np.asarray(p) > 0
    return float(np.max(np.abs(np.asarray(x)[act]))) if np.any(act) else 0.0


def edge_stress(model: Model, u_full, body, side, component=(1, 1), n=201):
    """Cauchy stress component along a side; returns ``(arc parameter, values)``."""
    b = model.by_name[body]
    kv_along = b.patch.knot_u if side in ("south", "north") else b.patch.knot_v
    t = np.linspace(*kv_along.domain, n)
    u0, v0 = side_parameter(b.patch, side, t[0])
    U, V = (t, [v0]) if side in ("south", "north") else ([u0], t)
    f = _sample(model, u_full, body, U, V)
    return t, f.sigma[:, component[0], component[1]]


def oscillation_measure(model: Model, u_full, body, side, component=(1, 1), n=201):
    """Total variation of a stress component along a side."""
    _, s = edge_stress(model, u_full, body, side, component, n)
    return float(np.sum(np.abs(np.diff(s))))
