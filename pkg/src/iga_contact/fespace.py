"""Galerkin discretization of the bulk: bodies, boundary tags, quadrature,
residual/tangent assembly and constraint handling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .materials import Material
from .splines import SIDES, NurbsPatch2D, gauss_points, outward_normal, physical_basis

# row kinds of an assembled system
GALERKIN, COLLOCATED_CONTACT, COLLOCATED_BULK, DIRICHLET = 0, 1, 2, 3


@dataclass
class SideBC:
    """Boundary condition on one patch side.

    ``kind`` is ``"free"``, ``"neumann"``, ``"contact"`` or ``"periodic"``.
    ``fixed`` maps a displacement component to its prescribed value, either a
    number (scaled by the load factor) or a callable of the load factor.
    Fixed components override the traction of the side.
    """

    kind: str = "free"
    traction: object = None
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("free", "neumann", "contact", "periodic"):
            raise ConfigurationError("unknown side kind %r" % self.kind)

    def traction_at(self, X):
        """Reference traction at full load for points ``X`` (shape (..., 2))."""
        X = np.asarray(X, dtype=float)
        if self.kind != "neumann" or self.traction is None:
            return np.zeros_like(X)
        if callable(self.traction):
            return np.asarray(self.traction(X), dtype=float).reshape(X.shape)
        return np.broadcast_to(np.asarray(self.traction, dtype=float), X.shape).copy()

    def prescribed(self, comp: int, load_factor: float) -> float:
        v = self.fixed[comp]
        return float(v(load_factor)) if callable(v) else float(v) * load_factor


@dataclass
class Body:
    """One deformable patch with its material and side tags (a Discretization)."""

    name: str
    patch: NurbsPatch2D
    material: Material
    sides: dict = field(default_factory=dict)
    offset: int = 0

    def __post_init__(self):
        for s in self.sides:
            if s not in SIDES:
                raise ConfigurationError("unknown side %r" % s)
        for s in SIDES:
            self.sides.setdefault(s, SideBC())

    @property
    def n_cp(self) -> int:
        return self.patch.n_control_points

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_cp

    @property
    def X(self) -> np.ndarray:
        return self.patch.flat_control_points()

    def dofs(self, cps) -> np.ndarray:
        """Global dofs ``[2a, 2a+1, ...]`` of the control points ``cps``."""
        cps = np.atleast_1d(np.asarray(cps, dtype=int))
        return (self.offset + 2 * cps[:, None] + np.arange(2)).ravel()

    def contact_sides(self):
        return [s for s in SIDES if self.sides[s].kind == "contact"]

    def dirichlet(self, load_factor: float):
        """``{global dof: value}`` for the fixed components; corner conflicts raise."""
        out = {}
        for s in SIDES:
            bc = self.sides[s]
            for comp in bc.fixed:
                val = bc.prescribed(comp, load_factor)
                for a in self.patch.side_indices(s):
                    d = self.offset + 2 * int(a) + comp
                    if d in out and abs(out[d] - val) > 1e-12 * max(1.0, abs(val)):
                        raise ConfigurationError(
                            "conflicting prescriptions at dof %d of body %s" % (d, self.name)
                        )
                    out[d] = val
        return out


class AssemblyPlan:
    """Precomputed sparse pattern for repeated assembly of element matrices."""

    def __init__(self, rows, cols, shape):
        key = rows.astype(np.int64) * shape[1] + cols
        uniq, inv = np.unique(key.ravel(), return_inverse=True)
        self.inv = inv
        self.nnz = uniq.size
        self.shape = shape
        r = uniq // shape[1]
        self.indices = (uniq % shape[1]).astype(np.int32)
        self.indptr = np.searchsorted(r, np.arange(shape[0] + 1)).astype(np.int32)

    def build(self, values) -> sp.csr_matrix:
        data = np.bincount(self.inv, weights=np.ravel(values), minlength=self.nnz)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=self.shape)


@dataclass
class AssembledSystem:
    residual: np.ndarray
    tangent: sp.csr_matrix
    row_kind: np.ndarray

    @property
    def size(self) -> int:
        return self.residual.size


def _element_grid(patch: NurbsPatch2D, n_gauss=None):
    """Gauss data grouped per Bezier element: ``(index, R, grad, wdet, X)``."""
    p, q = patch.degrees
    gu, wu = gauss_points(patch.knot_u, n_gauss[0] if n_gauss else None)
    gv, wv = gauss_points(patch.knot_v, n_gauss[1] if n_gauss else None)
    ngu = n_gauss[0] if n_gauss else p + 1
    ngv = n_gauss[1] if n_gauss else q + 1
    neu, nev = gu.size // ngu, gv.size // ngv
    pb = physical_basis(patch, gu, gv)
    nen = pb.R.shape[1]

    def group(a):
        a = a.reshape((nev, ngv, neu, ngu) + a.shape[1:])
        a = np.moveaxis(a, 2, 1)  # (nev, neu, ngv, ngu, ...)
        return a.reshape((nev * neu, ngv * ngu) + a.shape[4:])

    index = group(pb.index)[:, 0, :]
    w = (wv[:, None] * wu[None, :]).ravel()  # v slow, u fast, matches flat order
    wdet = group(w * np.abs(pb.detJ))
    return index, group(pb.R), group(pb.grad), wdet, group(pb.X), nen


class GalerkinBody:
    """Bulk Galerkin operator of a body: internal forces, tangent, dead loads."""

    def __init__(self, body: Body, n_gauss=None):
        self.body = body
        self.index, self.R, self.grad, self.wdet, self.Xq, nen = _element_grid(body.patch, n_gauss)
        self.nen = nen
        ne, nq = self.wdet.shape
        # B[e, q, iJ, a i'] = delta_ii' grad[e, q, a, J]
        B = np.zeros((ne, nq, 2, 2, nen, 2))
        for i in range(2):
            B[:, :, i, :, :, i] = np.swapaxes(self.grad, 2, 3)
        self.B = B.reshape(ne, nq, 4, 2 * nen)
        self.edofs = (2 * self.index[:, :, None] + np.arange(2)).reshape(ne, -1)  # local to body
        nd = body.n_dofs
        rows = np.repeat(self.edofs[:, :, None], 2 * nen, axis=2)
        cols = np.repeat(self.edofs[:, None, :], 2 * nen, axis=1)
        self.plan = AssemblyPlan(rows, cols, (nd, nd))
        self._K_lin = None
        self.f_ext = neumann_load(body)

    def deformation_gradient(self, u_body):
        ue = u_body.reshape(-1, 2)[self.index]  # (ne, nen, 2)
        return np.eye(2) + np.einsum("eai,eqaJ->eqiJ", ue, self.grad)

    def internal(self, u_body, tangent=True):
        """Internal force vector and (optionally) tangent in body-local dofs."""
        mat = self.body.material
        if mat.is_linear:
            if self._K_lin is None:
                self._K_lin = self._stiffness(np.zeros(self.body.n_dofs))[1]
            return self._K_lin @ u_body, self._K_lin
        return self._stiffness(u_body, tangent)

    def _stiffness(self, u_body, tangent=True):
        F = self.deformation_gradient(u_body)
        mat = self.body.material
        ne, nq = self.wdet.shape
        if tangent:
            P, A = mat.piola_tangent(F)
        else:
            P = mat.piola(F)
        Pv = P.reshape(ne, nq, 4) * self.wdet[..., None]
        fe = np.einsum("eqr,eqrx->ex", Pv, self.B)
        f = np.bincount(self.edofs.ravel(), weights=fe.ravel(), minlength=self.body.n_dofs)
        if not tangent:
            return f, None
        A4 = A.reshape(ne, nq, 4, 4) * self.wdet[..., None, None]
        BA = np.einsum("eqrx,eqrs->eqxs", self.B, A4)  # (ne, nq, 2nen, 4)
        nd = 2 * self.nen
        Ke = np.matmul(
            BA.transpose(0, 2, 1, 3).reshape(ne, nd, nq * 4),
            self.B.reshape(ne, nq * 4, nd),
        )
        return f, self.plan.build(Ke)

    def residual(self, u_body, load_factor, tangent=True):
        f, K = self.internal(u_body, tangent)
        return f - load_factor * self.f_ext, K


def side_basis(patch: NurbsPatch2D, side: str, t_values, second=False):
    """Physical basis at curve parameters ``t_values`` of ``side``."""
    lo_u, hi_u = patch.knot_u.domain
    lo_v, hi_v = patch.knot_v.domain
    t = np.asarray(t_values, dtype=float)
    if side in ("south", "north"):
        return physical_basis(patch, t, [lo_v if side == "south" else hi_v], second)
    return physical_basis(patch, [lo_u if side == "west" else hi_u], t, second)


def along_index(side: str) -> int:
    return 0 if side in ("south", "north") else 1


def neumann_load(body: Body) -> np.ndarray:
    """Consistent control forces of the dead tractions at full load."""
    f = np.zeros(body.n_dofs)
    patch = body.patch
    for side in SIDES:
        bc = body.sides[side]
        if bc.kind != "neumann" or bc.traction is None:
            continue
        kv = patch.knot_u if side in ("south", "north") else patch.knot_v
        t, w = gauss_points(kv)
        pb = side_basis(patch, side, t)
        ds = np.linalg.norm(pb.jac[:, :, along_index(side)], axis=1) * w
        T = bc.traction_at(pb.X)
        fe = pb.R[:, :, None] * (T * ds[:, None])[:, None, :]
        dofs = 2 * pb.index[:, :, None] + np.arange(2)
        f += np.bincount(dofs.ravel(), weights=fe.ravel(), minlength=body.n_dofs)
    return f


def assemble_bulk(gal: GalerkinBody, u_body, load_factor=0.0) -> AssembledSystem:
    """Bulk residual ``f_int - f_ext`` and tangent of one body (body-local numbering)."""
    r, K = gal.residual(u_body, load_factor)
    return AssembledSystem(r, K.tocsr(), np.full(r.size, GALERKIN, dtype=np.int8))


def assemble_neumann(body: Body, load_factor: float) -> np.ndarray:
    """Residual contribution ``-load_factor * f_ext`` of the dead tractions."""
    return -load_factor * neumann_load(body)


class ConstraintMap:
    """Dirichlet elimination plus periodic master/slave ties.

    The full dof vector is ``u = T q + u_D`` with ``q`` the independent
    dofs; reduced systems are ``T^T K T`` and ``T^T r``.
    """

    def __init__(self, n_dofs: int, dirichlet_fn: Callable[[float], dict], ties=()):
        self.n = n_dofs
        self.dirichlet_fn = dirichlet_fn
        fixed = dirichlet_fn(1.0)
        master_of = {}
        for s, m in ties:
            if s in fixed and m in fixed:
                continue
            if s in fixed or s in master_of:
                raise ConfigurationError("periodic slave dof %d is already constrained" % s)
            master_of[int(s)] = int(m)
        self.ties = master_of
        self.fixed = np.array(sorted(fixed), dtype=int)
        free = np.setdiff1d(np.arange(n_dofs), np.r_[self.fixed, list(master_of)].astype(int))
        red = -np.ones(n_dofs, dtype=int)
        red[free] = np.arange(free.size)
        rows, cols = list(free), list(range(free.size))
        for s, m in master_of.items():
            while m in master_of:
                m = master_of[m]
            if red[m] < 0:
                raise ConfigurationError("periodic master dof %d is not free" % m)
            rows.append(s)
            cols.append(red[m])
        self.free = free
        self.T = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_dofs, free.size))
        self.Tt = self.T.T.tocsr()

    @property
    def n_free(self) -> int:
        return self.free.size

    def dirichlet_values(self, load_factor: float) -> np.ndarray:
        d = self.dirichlet_fn(load_factor)
        return np.array([d[i] for i in self.fixed], dtype=float)

    def reduce(self, system: AssembledSystem, du_fixed=None):
        """Reduced tangent and right-hand side ``-(T^T (r + K du_D))``."""
        r = system.residual
        if du_fixed is not None and self.fixed.size:
            du = np.zeros(self.n)
            du[self.fixed] = du_fixed
            r = r + system.tangent @ du
        K = (self.Tt @ system.tangent @ self.T).tocsc()
        return K, -(self.Tt @ r)

    def expand(self, dq) -> np.ndarray:
        return self.T @ dq


def apply_dirichlet(system: AssembledSystem, prescribed: dict, u_current) -> AssembledSystem:
    """Identity rows at prescribed dofs, right-hand side ``target - current``.

    Columns of the prescribed dofs are moved to the right-hand side of all
    remaining rows so that the returned system can be solved directly for
    the full increment.
    """
    dofs = np.array(sorted(prescribed), dtype=int)
    du = np.zeros(system.size)
    du[dofs] = [prescribed[d] - u_current[d] for d in dofs]
    K = system.tangent.tolil(copy=True)
    rhs = -system.residual - system.tangent @ du
    for d in dofs:
        K.rows[d] = [d]
        K.data[d] = [1.0]
    K = K.tocsc()
    mask = np.ones(system.size, dtype=bool)
    mask[dofs] = False
    K = sp.diags(mask.astype(float)) @ K @ sp.diags(mask.astype(float)) + sp.diags((~mask).astype(float))
    rhs[dofs] = du[dofs]
    kind = system.row_kind.copy()
    kind[dofs] = DIRICHLET
    # returned residual is the negative right-hand side
    return AssembledSystem(-rhs, K.tocsr(), kind)


def apply_periodic(system: AssembledSystem, pairs) -> tuple[AssembledSystem, np.ndarray]:
    """Eliminate slave dofs by summing their rows and columns into masters.

    Returns the reduced system and the kept dof indices.
    """
    n = system.size
    cmap = ConstraintMap(n, lambda lam: {}, pairs)
    K = (cmap.Tt @ system.tangent @ cmap.T).tocsr()
    r = cmap.Tt @ system.residual
    return AssembledSystem(r, K, system.row_kind[cmap.free]), cmap.free


def side_normal_reference(patch: NurbsPatch2D, side: str, pb) -> np.ndarray:
    """Reference outward normals at side points of ``pb``."""
    return outward_normal(side, pb.jac[..., :, along_index(side)], patch.orientation())
