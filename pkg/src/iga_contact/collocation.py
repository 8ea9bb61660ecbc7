"""Strong-form rows at Greville points: interior equilibrium, traction
rows on Neumann and contact edges, and the enhanced edge combination.

Row conventions at a point ``tau``:

* interior: ``div P``
* edge: ``P N - T``; corner: ``sum over both edges``
* enhanced edge: ``div P - C*/h (P N - T)`` (corner: one area term, two edge terms)
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .fespace import COLLOCATED_BULK, COLLOCATED_CONTACT, AssembledSystem, Body, along_index
from .splines import SIDES, greville_points, outward_normal, physical_basis

INTERIOR, EDGE, CORNER = 0, 1, 2
C_STAR = 4.0

_I2 = np.eye(2)


class CollocationGrid:
    """Greville collocation points of a body with reference caches up to second order."""

    def __init__(self, body: Body):
        patch = body.patch
        p, q = patch.degrees
        if p < 2 or q < 2:
            raise ConfigurationError("collocation needs degree >= 2 in both directions")
        for kv in (patch.knot_u, patch.knot_v):
            if kv.max_interior_multiplicity() > kv.degree - 1:
                raise ConfigurationError("collocation needs C1 continuity across interior knots")
        self.body = body
        self.tau_u = greville_points(patch.knot_u)
        self.tau_v = greville_points(patch.knot_v)
        self.pb = physical_basis(patch, self.tau_u, self.tau_v, second=True)
        self.n_points = self.pb.R.shape[0]
        self.nen = self.pb.R.shape[1]
        self.local_dofs = (body.offset + 2 * self.pb.index[:, :, None] + np.arange(2)).reshape(
            self.n_points, -1
        )
        orient = patch.orientation()
        self.side_points, self.normal0, self.stretch0, self.h = {}, {}, {}, {}
        sides_of = [[] for _ in range(self.n_points)]
        for s in SIDES:
            pts = patch.side_indices(s)
            tan = self.pb.jac[pts, :, along_index(s)]
            self.side_points[s] = pts
            self.normal0[s] = outward_normal(s, tan, orient)
            self.stretch0[s] = np.linalg.norm(tan, axis=1)
            self.h[s] = self._perpendicular_width(s)
            for a in pts:
                sides_of[a].append(s)
        self.point_sides = [tuple(x) for x in sides_of]
        self.kind = np.array([min(len(x), 2) for x in sides_of], dtype=int)

    def _perpendicular_width(self, side):
        """Chord of the first element layer normal to ``side`` at each side point."""
        patch = self.body.patch
        if side in ("south", "north"):
            br = patch.knot_v.breaks
            v0, v1 = (br[0], br[1]) if side == "south" else (br[-1], br[-2])
            a = physical_basis(patch, self.tau_u, [v0]).X
            b = physical_basis(patch, self.tau_u, [v1]).X
        else:
            br = patch.knot_u.breaks
            u0, u1 = (br[0], br[1]) if side == "west" else (br[-1], br[-2])
            a = physical_basis(patch, [u0], self.tau_v).X
            b = physical_basis(patch, [u1], self.tau_v).X
        return np.linalg.norm(a - b, axis=1)

    def side_position(self, side, k):
        """Index along ``side`` of the side point ``k`` (a flat point index)."""
        return int(np.nonzero(self.side_points[side] == k)[0][0])

    # kinematics -------------------------------------------------------------
    def _nodal(self, u_full, pts):
        b = self.body
        ub = np.asarray(u_full)[b.offset : b.offset + b.n_dofs].reshape(-1, 2)
        return ub[self.pb.index[pts]]  # (k, nen, 2)

    def deformation_gradient(self, u_full, pts):
        Ue = self._nodal(u_full, pts)
        return _I2 + np.einsum("kbi,kbJ->kiJ", Ue, self.pb.grad[pts])

    def traction(self, u_full, pts, normals):
        """``P N`` at points ``pts`` for reference normals ``normals`` and the tangent."""
        F = self.deformation_gradient(u_full, pts)
        P, A = self.body.material.piola_tangent(F)
        PN = np.einsum("kiJ,kJ->ki", P, normals)
        d = np.einsum("kiJmL,kJ,kbL->kibm", A, normals, self.pb.grad[pts])
        return PN, d.reshape(len(pts), 2, -1)

    def divergence(self, u_full, pts):
        """``div P`` at points ``pts`` and its derivative w.r.t. the local dofs."""
        Ue = self._nodal(u_full, pts)
        grad, hess = self.pb.grad[pts], self.pb.hess[pts]
        F = _I2 + np.einsum("kbi,kbJ->kiJ", Ue, grad)
        H = np.einsum("kbi,kbLJ->kiLJ", Ue, hess)  # u_{k,LJ}
        mat = self.body.material
        _, A = mat.piola_tangent(F)
        div = np.einsum("kiJmL,kmLJ->ki", A, H)
        d = np.einsum("kiJmL,kbLJ->kibm", A, hess)
        if not mat.is_linear:
            dA = mat.piola_tangent_derivative(F)
            d = d + np.einsum("kiJsLmN,ksLJ,kbN->kibm", dA, H, grad)
        return div, d.reshape(len(pts), 2, -1)

    def neumann_traction(self, side, load_factor, pts=None):
        """Prescribed reference traction on ``side`` (zero for free/periodic/contact)."""
        bc = self.body.sides[side]
        idx = self.side_points[side] if pts is None else pts
        return load_factor * bc.traction_at(self.pb.X[idx])


class RowBlock:
    """Residual rows and COO tangent entries of collocated point rows."""

    def __init__(self):
        self.rows, self.res = [], []
        self.tr, self.tc, self.tv = [], [], []

    def add_residual(self, rows, values):
        self.rows.append(np.asarray(rows).ravel())
        self.res.append(np.asarray(values).ravel())

    def add_tangent(self, rows, cols, vals):
        """``rows`` (k, 2), ``cols`` (k, nc), ``vals`` (k, 2, nc)."""
        k, nc = cols.shape
        self.tr.append(np.repeat(rows[:, :, None], nc, axis=2).ravel())
        self.tc.append(np.repeat(cols[:, None, :], 2, axis=1).ravel())
        self.tv.append(np.asarray(vals).ravel())

    def finalize(self, n):
        r = np.zeros(n)
        rows = np.unique(np.concatenate(self.rows)) if self.rows else np.zeros(0, dtype=int)
        for rr, vv in zip(self.rows, self.res):
            np.add.at(r, rr, vv)
        if self.tr:
            K = sp.csr_matrix(
                (np.concatenate(self.tv), (np.concatenate(self.tr), np.concatenate(self.tc))),
                shape=(n, n),
            )
        else:
            K = sp.csr_matrix((n, n))
        return rows, r, K


def point_rows(grid: CollocationGrid, u_full, load_factor, pts, enhanced, contact=None,
               block: RowBlock | None = None, cstar: float = C_STAR):
    """Collocated rows at flat point indices ``pts``.

    ``contact`` maps a side name to ``(T, dT, cols)`` arrays over all points of
    that side: the contact traction per reference length, its derivative with
    respect to the global dofs ``cols``. Sides absent from ``contact`` use
    their prescribed traction.
    """
    pts = np.asarray(pts, dtype=int)
    block = RowBlock() if block is None else block
    off = grid.body.offset
    rows_of = lambda k: off + 2 * k[:, None] + np.arange(2)  # noqa: E731
    contact = {} if contact is None else contact
    onb = np.array([grid.kind[a] > 0 for a in pts], dtype=bool)
    area = pts[~onb] if not enhanced else pts
    if area.size:
        div, ddiv = grid.divergence(u_full, area)
        block.add_residual(rows_of(area), div)
        block.add_tangent(rows_of(area), grid.local_dofs[area], ddiv)
    wanted = set(pts[onb].tolist())
    for s in SIDES:
        sp_all = grid.side_points[s]
        sel = np.array([i for i, a in enumerate(sp_all) if a in wanted], dtype=int)
        if sel.size == 0:
            continue
        k = sp_all[sel]
        c = -cstar / grid.h[s][sel] if enhanced else np.ones(sel.size)
        PN, dPN = grid.traction(u_full, k, grid.normal0[s][sel])
        if s in contact:
            T, dT, cols = contact[s]
            T, dT, cols = T[sel], dT[sel], cols[sel]
            block.add_tangent(rows_of(k), cols, -c[:, None, None] * dT)
        else:
            T = grid.neumann_traction(s, load_factor, k)
        block.add_residual(rows_of(k), c[:, None] * (PN - T))
        block.add_tangent(rows_of(k), grid.local_dofs[k], c[:, None, None] * dPN)
    return block


def interior_residual(grid: CollocationGrid, u_full, point):
    """``div P`` at a single point."""
    return grid.divergence(u_full, np.array([point]))[0][0]


def neumann_residual(grid: CollocationGrid, u_full, point, load_factor):
    """``P N - T`` at an edge point, summed over both edges at a corner."""
    out = np.zeros(2)
    for s in grid.point_sides[point]:
        i = grid.side_position(s, point)
        PN, _ = grid.traction(u_full, np.array([point]), grid.normal0[s][i : i + 1])
        out += PN[0] - grid.neumann_traction(s, load_factor, np.array([point]))[0]
    return out


def enhanced_residual(grid: CollocationGrid, u_full, point, load_factor, cstar=C_STAR):
    """``div P - sum_edges C*/h (P N - T)`` at a boundary point."""
    out = interior_residual(grid, u_full, point).copy()
    for s in grid.point_sides[point]:
        i = grid.side_position(s, point)
        PN, _ = grid.traction(u_full, np.array([point]), grid.normal0[s][i : i + 1])
        T = grid.neumann_traction(s, load_factor, np.array([point]))[0]
        out -= cstar / grid.h[s][i] * (PN[0] - T)
    return out


def assemble_collocated_bulk(grid: CollocationGrid, u_full, load_factor, mode="C", contact=None,
                             n_total=None, cstar=C_STAR) -> AssembledSystem:
    """All collocated rows of one body (mode ``"C"`` or ``"EC"``).

    Contact-edge rows receive the tractions in ``contact``; without them the
    contact edges are traction free.
    """
    if mode not in ("C", "EC"):
        raise ConfigurationError("mode must be 'C' or 'EC'")
    n = n_total if n_total is not None else grid.body.offset + grid.body.n_dofs
    block = point_rows(grid, u_full, load_factor, np.arange(grid.n_points), mode == "EC",
                       contact, cstar=cstar)
    rows, r, K = block.finalize(n)
    kind = np.zeros(n, dtype=np.int8)
    kind[rows] = COLLOCATED_BULK
    for s in contact or {}:
        kind[grid.body.offset + 2 * grid.side_points[s][:, None] + np.arange(2)] = COLLOCATED_CONTACT
    return AssembledSystem(r, K, kind)
