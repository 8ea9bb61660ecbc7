"""Frictionless penalty contact: projection, gap, and the eight formulations.

The gap of a slave point ``x_s`` against a master curve is
``g = (x_s - x_bar) . n_bar`` with ``n_bar`` the outward master normal, so
``g < 0`` means penetration. The penalty traction is ``t_N = eps <g>_-``;
the force on the slave is ``-t_N n_bar`` per unit current length.

Galerkin families (GPTS, PTS and their two-half-pass variants) add
``eps <g>_- dg`` integrated over the slave curve. Collocated families (C,
EC, CCS, ECCS) evaluate the traction at the Greville points of each contact
side and feed it into strong-form rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .collocation import C_STAR, CollocationGrid, RowBlock, point_rows
from .errors import ConfigurationError
from .fespace import COLLOCATED_CONTACT, AssembledSystem, Body
from .splines import (
    boundary_curve,
    gauss_points,
    greville_points,
    outward_normal,
    rational_curve_basis,
)

FORMULATIONS = ("gpts", "gpts2hp", "pts", "pts2hp", "c", "ec", "ccs", "eccs")
GALERKIN_FORMS = ("gpts", "gpts2hp", "pts", "pts2hp")
COLLOCATED_FORMS = ("c", "ec", "ccs", "eccs")
TWO_HALF_PASS = ("gpts2hp", "pts2hp")


def penalty_traction(g, eps):
    """``eps <g>_-``: negative in penetration, zero when open."""
    return eps * np.minimum(g, 0.0)


def is_active(g) -> bool:
    return g <= 0.0


@dataclass
class ProjectionResult:
    xi: float
    point: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    gap: float
    converged: bool = True
    at_end: int = 0  # -1 / +1 when clamped at a curve end
    first: int = 0
    basis: np.ndarray | None = None  # (3, p+1) master basis and derivatives
    deriv: np.ndarray | None = None  # (3, 2) position, first and second derivative


class BodySurface:
    """Contact side of a deformable body."""

    def __init__(self, body: Body, side: str):
        if side not in body.sides:
            raise ConfigurationError("unknown side %r" % side)
        self.body, self.side = body, side
        self.curve = boundary_curve(body.patch, side)
        self.kv = self.curve.knot
        self.weights = self.curve.weights
        self.X = self.curve.control_points
        self.cps = body.patch.side_indices(side)
        self.dofs = body.offset + 2 * self.cps[:, None] + np.arange(2)
        self.orientation = body.patch.orientation()
        self.p = self.kv.degree
        lo, hi = self.kv.domain
        ns = max(33, 8 * self.kv.n_elements + 1)
        self.samples = np.linspace(lo, hi, ns)
        S = np.zeros((ns, self.kv.n))
        for k, x in enumerate(self.samples):
            f, R = self.basis(x, 0)
            S[k, f : f + self.p + 1] = R[0]
        self.sample_matrix = S

    @property
    def rigid(self) -> bool:
        return False

    @property
    def name(self) -> str:
        return "%s.%s" % (self.body.name, self.side)

    def basis(self, xi, d=1):
        return rational_curve_basis(self.kv, self.weights, float(xi), d)

    def points(self, u_full):
        return self.X + np.asarray(u_full)[self.dofs]

    def local_dofs(self, first):
        return self.dofs[first : first + self.p + 1].ravel()

    def normal(self, tangent):
        return outward_normal(self.side, tangent, self.orientation)

    def gauss(self):
        return gauss_points(self.kv)

    def greville(self):
        return greville_points(self.kv)


class RigidPlane:
    """Rigid straight obstacle through ``point`` with outward unit ``normal``."""

    rigid = True

    def __init__(self, point, normal, name="plane"):
        self.point = np.asarray(point, dtype=float)
        n = np.asarray(normal, dtype=float)
        self.n = n / np.linalg.norm(n)
        self.t = np.array([-self.n[1], self.n[0]])
        self.name = name

    def project(self, x) -> ProjectionResult:
        g = float((x - self.point) @ self.n)
        return ProjectionResult(float((x - self.point) @ self.t), x - g * self.n, self.n.copy(),
                                self.t.copy(), g)


def closest_point(surface: BodySurface, x, pts, seed=None, max_iter=30) -> ProjectionResult:
    """Closest-point projection of ``x`` onto the current curve ``pts``.

    Newton on ``(x - c) . c' = 0`` from the warm start ``seed`` or the best
    of uniform samples; golden-section search on the bracketing samples if
    Newton fails. Minimizers at a curve end are clamped there.
    """
    x = np.asarray(x, dtype=float)
    lo, hi = surface.kv.domain
    tol = 1e-14 * (hi - lo)
    samp = surface.sample_matrix @ pts
    d2 = np.sum((samp - x) ** 2, axis=1)
    kbest = int(np.argmin(d2))
    seeds = [surface.samples[kbest]]
    if seed is not None and lo <= seed <= hi:
        seeds.insert(0, float(seed))

    def newton(xi):
        for _ in range(max_iter):
            f0, R = surface.basis(xi, 2)
            c = R @ pts[f0 : f0 + surface.p + 1]
            r = x - c[0]
            f = r @ c[1]
            df = -(c[1] @ c[1]) + r @ c[2]
            if df >= 0.0:
                df = -(c[1] @ c[1])
            xn = min(max(xi - f / df, lo), hi)
            if abs(xn - xi) <= tol:
                return xn, True
            xi = xn
        return xi, False

    best = None
    for s in seeds:
        xi, ok = newton(s)
        if ok:
            f0, R = surface.basis(xi, 0)
            dist = np.sum((x - R[0] @ pts[f0 : f0 + surface.p + 1]) ** 2)
            if dist <= d2[kbest] * (1 + 1e-12) + 1e-30:
                best = xi
                break
    converged = best is not None
    if not converged:
        a = surface.samples[max(kbest - 1, 0)]
        b = surface.samples[min(kbest + 1, len(surface.samples) - 1)]
        gr = 0.5 * (np.sqrt(5.0) - 1.0)

        def dist(xi):
            f0, R = surface.basis(xi, 0)
            return np.sum((x - R[0] @ pts[f0 : f0 + surface.p + 1]) ** 2)

        c1, c2 = b - gr * (b - a), a + gr * (b - a)
        for _ in range(200):
            if dist(c1) < dist(c2):
                b = c2
            else:
                a = c1
            c1, c2 = b - gr * (b - a), a + gr * (b - a)
            if b - a < tol:
                break
        best, converged = newton(0.5 * (a + b))
        if not converged:
            best, converged = 0.5 * (a + b), b - a < 1e3 * tol
    return _projection_at(surface, x, pts, best, converged)


def _projection_at(surface, x, pts, xi, converged=True):
    lo, hi = surface.kv.domain
    f0, R = surface.basis(xi, 2)
    c = R @ pts[f0 : f0 + surface.p + 1]
    l = np.linalg.norm(c[1])
    t = c[1] / l
    n = surface.normal(c[1])
    r = x - c[0]
    at_end = 0
    if abs(r @ t) > 1e-12 * max(1.0, np.linalg.norm(r)):
        if xi <= lo:
            at_end = -1
        elif xi >= hi:
            at_end = 1
    return ProjectionResult(xi, c[0], n, t, float(r @ n), converged, at_end, f0, R, c)


# --- point kinematics -----------------------------------------------------


@dataclass
class GapPoint:
    """Gap of one slave point with derivatives over the local dofs ``cols``."""

    gap: float
    normal: np.ndarray
    cols: np.ndarray
    n_slave: int  # leading entries of cols that belong to the slave
    G: np.ndarray  # dg/dq
    dn: np.ndarray  # (2, nd) dn/dq
    Ns: np.ndarray  # (2, nd) dx_s/dq
    Nsd: np.ndarray  # (2, nd) dx_s'/dq
    xs_d: np.ndarray  # current slave tangent x_s'
    dG: np.ndarray | None = None
    projection: ProjectionResult | None = None

    @property
    def dgn(self):
        """d(g n)/dq."""
        return np.outer(self.normal, self.G) + self.gap * self.dn


def _spread(values, nd, offset, n_nodes):
    """(2, nd) matrix with ``M[k, offset + 2A + k] = values[A]``."""
    M = np.zeros((2, nd))
    for k in range(2):
        M[k, offset + k : offset + 2 * n_nodes : 2] = values
    return M


def gap_point(slave: BodySurface, xi_s, pts_s, master, u_full, pts_m=None, seed=None,
              second=False) -> GapPoint:
    """Gap and its linearization for the slave point at curve parameter ``xi_s``."""
    f_s, Rs = slave.basis(xi_s, 1)
    loc_s = pts_s[f_s : f_s + slave.p + 1]
    xs = Rs[0] @ loc_s
    xs_d = Rs[1] @ loc_s
    cols_s = slave.local_dofs(f_s)
    ns = cols_s.size
    nn_s = slave.p + 1
    if master.rigid:
        pr = master.project(xs)
        nd = ns
        Ns = _spread(Rs[0], nd, 0, nn_s)
        Nsd = _spread(Rs[1], nd, 0, nn_s)
        G = Ns.T @ pr.normal
        dG = np.zeros((nd, nd)) if second else None
        return GapPoint(pr.gap, pr.normal, cols_s, ns, G, np.zeros((2, nd)), Ns, Nsd, xs_d, dG, pr)
    pr = closest_point(master, xs, pts_m, seed)
    cols_m = master.local_dofs(pr.first)
    nd = ns + cols_m.size
    nn_m = master.p + 1
    Ns = _spread(Rs[0], nd, 0, nn_s)
    Nsd = _spread(Rs[1], nd, 0, nn_s)
    Mm = _spread(pr.basis[0], nd, ns, nn_m)
    Ma = _spread(pr.basis[1], nd, ns, nn_m)
    a, b = pr.deriv[1], pr.deriv[2]
    l = np.linalg.norm(a)
    n, t = pr.normal, pr.tangent
    r = xs - pr.point
    D = Ns - Mm
    if pr.at_end == 0:
        Xi = (D.T @ a + Ma.T @ r) / (l * l - r @ b)
        da = Ma + np.outer(b, Xi)
        dn = -np.outer(t, n @ da) / l
        G = D.T @ n
        dG = None
        if second:
            dG = D.T @ dn - np.outer(Ma.T @ n, Xi)
    else:
        s = r @ t
        dn = -np.outer(t, n @ Ma) / l
        G = D.T @ n - (s / l) * (Ma.T @ n)
        dG = None
        if second:
            ds_l = (D.T @ t + (pr.gap / l) * (Ma.T @ n)) / l - (s / l**2) * (Ma.T @ t)
            dG = D.T @ dn - np.outer(Ma.T @ n, ds_l) - (s / l) * (Ma.T @ dn)
    cols = np.r_[cols_s, cols_m]
    return GapPoint(pr.gap, n, cols, ns, G, dn, Ns, Nsd, xs_d, dG, pr)


# --- evaluation point sets ------------------------------------------------


def compute_pts_weights(surface_or_curve) -> np.ndarray:
    """Moment-fitted weights at the Greville points of a curve basis.

    Solves ``sum_j N_i(tau_j) w_j = int N_i`` so that every function of the
    curve's spline space is integrated exactly in the parametric measure.
    """
    kv = surface_or_curve.kv if hasattr(surface_or_curve, "kv") else surface_or_curve.knot
    weights = surface_or_curve.weights
    p, n = kv.degree, kv.n
    tau = greville_points(kv)
    G = np.zeros((n, n))
    for j, x in enumerate(tau):
        f, R = rational_curve_basis(kv, weights, x, 0)
        G[f : f + p + 1, j] = R[0]
    xg, wg = gauss_points(kv, 2 * p + 2)
    F = np.zeros(n)
    for x, w in zip(xg, wg):
        f, R = rational_curve_basis(kv, weights, x, 0)
        F[f : f + p + 1] += w * R[0]
    if abs(np.linalg.det(G)) < 1e-300 or np.linalg.cond(G) > 1e14:
        raise ConfigurationError("moment-fitting matrix is singular")
    return np.linalg.solve(G, F)


@dataclass
class ContactPair:
    """Slave/master pair with penalty ``penalty`` and a formulation tag."""

    slave: BodySurface
    master: object
    penalty: float
    formulation: str = "ccs"
    seeds: dict = field(default_factory=dict, repr=False)
    _weights: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.penalty <= 0:
            raise ConfigurationError("penalty must be positive")
        if self.formulation not in FORMULATIONS:
            raise ConfigurationError("unknown formulation %r" % self.formulation)

    def passes(self):
        """(slave, master) surface pairs evaluated by the formulation."""
        out = [(self.slave, self.master)]
        two = self.formulation in TWO_HALF_PASS or self.formulation in COLLOCATED_FORMS
        if two and not self.master.rigid:
            out.append((self.master, self.slave))
        return out

    def points(self, surface):
        """Evaluation parameters and parametric weights on a slave surface."""
        if self.formulation.startswith("gpts"):
            return surface.gauss()
        if surface.name not in self._weights:
            self._weights[surface.name] = compute_pts_weights(surface)
        return surface.greville(), self._weights[surface.name]

    def _seed(self, key, i):
        arr = self.seeds.get(key)
        return None if arr is None else arr[i]


def _coo(n):
    return [], [], []


def _coo_add(coo, rows, cols, vals):
    coo[0].append(np.repeat(rows, cols.size))
    coo[1].append(np.tile(cols, rows.size))
    coo[2].append(np.ravel(vals))


def _coo_build(coo, n):
    if not coo[0]:
        return sp.csr_matrix((n, n))
    return sp.csr_matrix(
        (np.concatenate(coo[2]), (np.concatenate(coo[0]), np.concatenate(coo[1]))), shape=(n, n)
    )


def _galerkin_pass(pair, slave, master, u_full, r, coo, one_pass, tangent=True, frozen=None):
    xi, w = pair.points(slave)
    pts_s = slave.points(u_full)
    pts_m = None if master.rigid else master.points(u_full)
    key = (slave.name, master.name)
    new_seeds = np.zeros(xi.size)
    eps = pair.penalty
    flags = np.zeros(xi.size, dtype=bool)
    for i, (x, wq) in enumerate(zip(xi, w)):
        gp = gap_point(slave, x, pts_s, master, u_full, pts_m, pair._seed(key, i), second=one_pass)
        new_seeds[i] = gp.projection.xi
        act = is_active(gp.gap) if frozen is None else frozen[key][i]
        flags[i] = act
        if not act or (gp.projection.converged is False):
            continue
        J = np.linalg.norm(gp.xs_d)
        ts = gp.xs_d / J
        dJ = gp.Nsd.T @ ts
        g = gp.gap
        if one_pass:
            r_loc = eps * g * wq * J * gp.G
            rows = gp.cols
            if tangent:
                K = eps * wq * (J * np.outer(gp.G, gp.G) + g * J * gp.dG + g * np.outer(gp.G, dJ))
        else:
            Ns_s = gp.Ns[:, : gp.n_slave]
            r_loc = eps * g * wq * J * (Ns_s.T @ gp.normal)
            rows = gp.cols[: gp.n_slave]
            if tangent:
                K = eps * wq * (J * Ns_s.T @ gp.dgn + g * np.outer(Ns_s.T @ gp.normal, dJ))
        np.add.at(r, rows, r_loc)
        if tangent:
            _coo_add(coo, rows, gp.cols, K)
    pair.seeds[key] = new_seeds
    return flags


def assemble_galerkin_contact(pair: ContactPair, u_full, n, tangent=True, frozen=None):
    """Contact residual and tangent of the GPTS/PTS families (full dof numbering)."""
    if pair.formulation not in GALERKIN_FORMS:
        raise ConfigurationError("%s is not a Galerkin formulation" % pair.formulation)
    r = np.zeros(n)
    coo = _coo(n)
    one_pass = pair.formulation not in TWO_HALF_PASS
    flags = {}
    for slave, master in pair.passes():
        flags[(slave.name, master.name)] = _galerkin_pass(
            pair, slave, master, u_full, r, coo, one_pass, tangent, frozen
        )
    return r, (_coo_build(coo, n) if tangent else None), flags


def assemble_gpts(pair: ContactPair, u_full, n, two_half_pass=False):
    """GPTS contributions; ``two_half_pass`` selects GPTS-2hp."""
    form = pair.formulation
    pair.formulation = "gpts2hp" if two_half_pass else "gpts"
    try:
        return assemble_galerkin_contact(pair, u_full, n)[:2]
    finally:
        pair.formulation = form


def assemble_pts(pair: ContactPair, u_full, n, two_half_pass=False):
    """PTS+ contributions at Greville points with moment-fitted weights."""
    form = pair.formulation
    pair.formulation = "pts2hp" if two_half_pass else "pts"
    try:
        return assemble_galerkin_contact(pair, u_full, n)[:2]
    finally:
        pair.formulation = form


def collocated_tractions(pair: ContactPair, slave: BodySurface, master, u_full, frozen=None):
    """Reference contact tractions at the Greville points of ``slave``.

    Returns ``(T, dT, cols, flags)`` with ``T`` of shape (k, 2) and
    ``dT[k]`` the derivative with respect to the global dofs ``cols[k]``.
    The current traction ``-eps <g>_- n_bar`` is pulled back with the
    stretch ``|x'| / |X'|`` of the slave side.
    """
    tau = slave.greville()
    pts_s = slave.points(u_full)
    pts_m = None if master.rigid else master.points(u_full)
    key = (slave.name, master.name)
    eps = pair.penalty
    k = tau.size
    ncol = 2 * (slave.p + 1) + (0 if master.rigid else 2 * (master.p + 1))
    T = np.zeros((k, 2))
    dT = np.zeros((k, 2, ncol))
    cols = np.zeros((k, ncol), dtype=int)
    flags = np.zeros(k, dtype=bool)
    seeds = np.zeros(k)
    for i, x in enumerate(tau):
        gp = gap_point(slave, x, pts_s, master, u_full, pts_m, pair._seed(key, i))
        seeds[i] = gp.projection.xi
        cols[i] = gp.cols
        act = is_active(gp.gap) if frozen is None else frozen[key][i]
        flags[i] = act
        if not act or not gp.projection.converged:
            continue
        f_s, Rs = slave.basis(x, 1)
        X_d = Rs[1] @ slave.X[f_s : f_s + slave.p + 1]
        L0 = np.linalg.norm(X_d)
        J = np.linalg.norm(gp.xs_d)
        lam = J / L0
        dlam = gp.Nsd.T @ (gp.xs_d / J) / L0
        g = gp.gap
        T[i] = -eps * g * lam * gp.normal
        dT[i] = -eps * (lam * gp.dgn + g * np.outer(gp.normal, dlam))
    pair.seeds[key] = seeds
    return T, dT, cols, flags


def contact_traction_map(pair: ContactPair, u_full, frozen=None):
    """``{body name: {side: (T, dT, cols)}}`` for the collocated families."""
    out, flags = {}, {}
    for slave, master in pair.passes():
        T, dT, cols, fl = collocated_tractions(pair, slave, master, u_full, frozen)
        out.setdefault(slave.body.name, {})[slave.side] = (T, dT, cols)
        flags[(slave.name, master.name)] = fl
    return out, flags


def collocated_contact_rows(pair: ContactPair, grids: dict, u_full, load_factor, enhanced,
                            frozen=None, cstar=C_STAR):
    """Collocated rows at every control point of the contact sides (CCS/ECCS).

    ``grids`` maps body names to their :class:`CollocationGrid`. Returns the
    filled :class:`RowBlock` and the active flags per pass.
    """
    tractions, flags = contact_traction_map(pair, u_full, frozen)
    block = RowBlock()
    for body_name, sides in tractions.items():
        grid = grids[body_name]
        pts = np.unique(np.concatenate([grid.side_points[s] for s in sides]))
        point_rows(grid, u_full, load_factor, pts, enhanced, sides, block, cstar)
    return block, flags


def merge_ccs(bulk: AssembledSystem, block: RowBlock) -> AssembledSystem:
    """Replace the Galerkin rows owned by collocated contact rows."""
    n = bulk.size
    rows, rc, Kc = block.finalize(n)
    keep = np.ones(n)
    keep[rows] = 0.0
    r = keep * bulk.residual + rc
    K = (sp.diags(keep) @ bulk.tangent + Kc).tocsr()
    kind = bulk.row_kind.copy()
    kind[rows] = COLLOCATED_CONTACT
    return AssembledSystem(r, K, kind)


def active_set(pair: ContactPair, u_full):
    """Active flags per pass at the formulation's evaluation points."""
    flags = {}
    for slave, master in pair.passes():
        if pair.formulation in COLLOCATED_FORMS:
            xi = slave.greville()
        else:
            xi = pair.points(slave)[0]
        pts_s = slave.points(u_full)
        pts_m = None if master.rigid else master.points(u_full)
        key = (slave.name, master.name)
        fl = np.zeros(xi.size, dtype=bool)
        for i, x in enumerate(xi):
            f, R = slave.basis(x, 0)
            xs = R[0] @ pts_s[f : f + slave.p + 1]
            pr = master.project(xs) if master.rigid else closest_point(master, xs, pts_m,
                                                                      pair._seed(key, i))
            fl[i] = pr.converged and is_active(pr.gap)
        flags[key] = fl
    return flags


def galerkin_or_collocated(formulation: str) -> str:
    return "galerkin" if formulation in GALERKIN_FORMS else "collocated"


__all__ = [
    "BodySurface",
    "CollocationGrid",
    "ContactPair",
    "RigidPlane",
    "active_set",
    "assemble_galerkin_contact",
    "assemble_gpts",
    "assemble_pts",
    "closest_point",
    "collocated_contact_rows",
    "compute_pts_weights",
    "merge_ccs",
    "penalty_traction",
]
