"""Patch constructors for the benchmark geometries."""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .splines import (
    KnotVector,
    NurbsPatch2D,
    elevate_bezier,
    greville_points,
    refine_to_breaks,
)


def rectangle(x0, y0, width, height, n_cp, degree=2, spacing="uniform", u_breaks=None):
    """B-spline rectangle with ``n_cp = (nx, ny)`` control points.

    ``spacing="uniform"`` places control points equidistantly (a non-affine
    parametrization of the straight edges); ``"greville"`` places them at
    the Greville abscissae, which makes the geometry map affine. A number
    ``beta`` in [0, 1] blends the two: ``(1 - beta) * greville + beta * uniform``. ``u_breaks``
    optionally prescribes non-uniform element boundaries in ``u`` (normalized
    to [0, 1]); the count of control points is kept.
    """
    nx, ny = n_cp
    p = degree
    if nx <= p or ny <= p:
        raise ConfigurationError("need more than %d control points per direction" % p)
    if u_breaks is None:
        ku = KnotVector.uniform(p, nx - p)
    else:
        u_breaks = np.asarray(u_breaks, dtype=float)
        if u_breaks.size != nx - p + 1:
            raise ConfigurationError("u_breaks must define %d elements" % (nx - p))
        ku = KnotVector.from_breaks(p, u_breaks)
    kv = KnotVector.uniform(p, ny - p)
    if spacing == "uniform":
        beta = 1.0
    elif spacing == "greville":
        beta = 0.0
    elif isinstance(spacing, (int, float)) and 0.0 <= spacing <= 1.0:
        beta = float(spacing)
    else:
        raise ConfigurationError("unknown spacing %r" % (spacing,))
    sx = (1 - beta) * greville_points(ku) + beta * np.linspace(0, 1, nx)
    sy = (1 - beta) * greville_points(kv) + beta * np.linspace(0, 1, ny)
    cp = np.empty((nx, ny, 2))
    cp[..., 0] = x0 + width * sx[:, None]
    cp[..., 1] = y0 + height * sy[None, :]
    return NurbsPatch2D(ku, kv, cp, np.ones((nx, ny)))


def _tensor_arc_radial(arc_pts, arc_w, r_in, r_out, center, degree_radial):
    """Sweep a unit-radius arc (homogeneous Bezier data) radially."""
    center = np.asarray(center, dtype=float)
    radial = np.linspace(r_in, r_out, 2)  # linear Bezier segment
    rad_h = np.stack([radial, np.ones(2)], axis=-1)
    rad_h = elevate_bezier(rad_h, degree_radial - 1)
    radii = rad_h[:, 0] / rad_h[:, 1]
    cp = center + arc_pts[:, None, :] * radii[None, :, None]
    w = arc_w[:, None] * np.ones(radii.size)[None, :]
    return cp, w


def _bezier_knots(p):
    return KnotVector(p, np.r_[[0.0] * (p + 1), [1.0] * (p + 1)])


def quarter_annulus(r_in, r_out, theta0=-0.5 * np.pi, center=(0.0, 0.0), degree=2,
                    u_breaks=None, v_breaks=None):
    """Exact quarter annulus from angle ``theta0`` counter-clockwise.

    ``u`` runs along the angle, ``v`` from the inner to the outer radius.
    """
    if degree < 2:
        raise ConfigurationError("circular arcs need degree >= 2")
    c, s = np.cos, np.sin
    t1, tm = theta0 + 0.5 * np.pi, theta0 + 0.25 * np.pi
    rm = 1.0 / np.cos(0.25 * np.pi)
    pts = np.array([[c(theta0), s(theta0)], [rm * c(tm), rm * s(tm)], [c(t1), s(t1)]])
    w = np.array([1.0, np.cos(0.25 * np.pi), 1.0])
    Pw = elevate_bezier(np.c_[pts * w[:, None], w], degree - 2)
    arc_w = Pw[:, 2]
    arc_pts = Pw[:, :2] / arc_w[:, None]
    cp, W = _tensor_arc_radial(arc_pts, arc_w, r_in, r_out, center, degree)
    patch = NurbsPatch2D(_bezier_knots(degree), _bezier_knots(degree), cp, W)
    return refine_to_breaks(patch, u_breaks, v_breaks)


def lower_half_annulus(r_in, r_out, center=(0.0, 0.0), degree=3, u_breaks=None, v_breaks=None):
    """Exact lower half annulus (angle pi to 2 pi) from a cubic rational segment.

    A single rational cubic covers the half circle smoothly, so the bottom
    point carries no reduced-continuity knot.
    """
    if degree < 3:
        raise ConfigurationError("the half annulus is built from a cubic segment")
    pts = np.array([[-1.0, 0.0], [-1.0, -2.0], [1.0, -2.0], [1.0, 0.0]])
    w = np.array([1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0])
    Pw = elevate_bezier(np.c_[pts * w[:, None], w], degree - 3)
    arc_w = Pw[:, 2]
    arc_pts = Pw[:, :2] / arc_w[:, None]
    cp, W = _tensor_arc_radial(arc_pts, arc_w, r_in, r_out, center, degree)
    patch = NurbsPatch2D(_bezier_knots(degree), _bezier_knots(degree), cp, W)
    return refine_to_breaks(patch, u_breaks, v_breaks)
