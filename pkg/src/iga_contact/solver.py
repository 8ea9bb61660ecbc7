"""Incremental Newton solver with bisection of load increments."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .collocation import C_STAR, CollocationGrid, assemble_collocated_bulk
from .contact import (
    COLLOCATED_FORMS,
    FORMULATIONS,
    GALERKIN_FORMS,
    ContactPair,
    assemble_galerkin_contact,
    collocated_contact_rows,
    contact_traction_map,
    merge_ccs,
)
from .errors import ConfigurationError, InadmissibleStateError, SolverError
from .fespace import GALERKIN, AssembledSystem, Body, ConstraintMap, GalerkinBody

log = logging.getLogger(__name__)


@dataclass
class Model:
    """Bodies, contact pairs and periodic ties solved under one formulation.

    ``periodic`` lists ``(body name, master side, slave side)`` triples whose
    control points are tied component-wise in side order.
    """

    bodies: list
    pairs: list = field(default_factory=list)
    formulation: str = "ccs"
    periodic: list = field(default_factory=list)
    cstar: float = C_STAR

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ConfigurationError("unknown formulation %r" % self.formulation)
        off = 0
        for b in self.bodies:
            b.offset = off
            off += b.n_dofs
        self.n_dofs = off
        self.by_name = {b.name: b for b in self.bodies}
        if len(self.by_name) != len(self.bodies):
            raise ConfigurationError("body names must be unique")
        for p in self.pairs:
            p.formulation = self.formulation
            # surfaces cache dofs at construction; rebuild after offsets changed
            for s in (p.slave, p.master):
                if not s.rigid:
                    s.dofs = s.body.offset + 2 * s.cps[:, None] + np.arange(2)
        self.galerkin = {b.name: GalerkinBody(b) for b in self.bodies}
        self.grids = {}
        if self.formulation in ("c", "ec"):
            self.grids = {b.name: CollocationGrid(b) for b in self.bodies}
        elif self.formulation in ("ccs", "eccs"):
            names = {s.body.name for p in self.pairs for s in (p.slave, p.master) if not s.rigid}
            self.grids = {n: CollocationGrid(self.by_name[n]) for n in names}
        self.constraints = ConstraintMap(self.n_dofs, self.dirichlet, self.ties())

    # boundary data ----------------------------------------------------------
    def dirichlet(self, load_factor):
        out = {}
        for b in self.bodies:
            for d, v in b.dirichlet(load_factor).items():
                out[d] = v
        return out

    def ties(self):
        out = []
        for name, ms, ss in self.periodic:
            b = self.by_name[name]
            m, s = b.patch.side_indices(ms), b.patch.side_indices(ss)
            if m.size != s.size:
                raise ConfigurationError("periodic sides have different control point counts")
            for a, c in zip(m, s):
                for k in range(2):
                    out.append((b.offset + 2 * c + k, b.offset + 2 * a + k))
        return out

    def body_slice(self, b: Body):
        return slice(b.offset, b.offset + b.n_dofs)

    # assembly ----------------------------------------------------------------
    def galerkin_bulk(self, u, load_factor, tangent=True):
        rs, Ks = [], []
        for b in self.bodies:
            r, K = self.galerkin[b.name].residual(u[self.body_slice(b)], load_factor, tangent)
            rs.append(r)
            Ks.append(K)
        r = np.concatenate(rs)
        K = sp.block_diag(Ks, format="csr") if tangent else None
        return r, K

    def assemble(self, u, load_factor, frozen=None):
        """Merged system of the formulation and the Galerkin residual for reactions.

        Returns ``(system, galerkin_residual, active_flags)``.
        """
        n = self.n_dofs
        form = self.formulation
        flags = {}
        if form in GALERKIN_FORMS:
            r, K = self.galerkin_bulk(u, load_factor)
            for p in self.pairs:
                rc, Kc, fl = assemble_galerkin_contact(p, u, n, frozen=frozen)
                r, K = r + rc, K + Kc
                flags.update(fl)
            sysm = AssembledSystem(r, K.tocsr(), np.full(n, GALERKIN, dtype=np.int8))
            return sysm, r, flags
        if form in ("ccs", "eccs"):
            r, K = self.galerkin_bulk(u, load_factor)
            sysm = AssembledSystem(r, K, np.full(n, GALERKIN, dtype=np.int8))
            for p in self.pairs:
                block, fl = collocated_contact_rows(
                    p, self.grids, u, load_factor, form == "eccs", frozen, self.cstar
                )
                sysm = merge_ccs(sysm, block)
                flags.update(fl)
            return sysm, r, flags
        # fully collocated
        tr = {}
        for p in self.pairs:
            t, fl = contact_traction_map(p, u, frozen)
            for name, sides in t.items():
                tr.setdefault(name, {}).update(sides)
            flags.update(fl)
        r = np.zeros(n)
        K = sp.csr_matrix((n, n))
        kind = np.zeros(n, dtype=np.int8)
        for b in self.bodies:
            s = assemble_collocated_bulk(self.grids[b.name], u, load_factor, form.upper(),
                                         tr.get(b.name), n, self.cstar)
            r, K = r + s.residual, K + s.tangent
            sl = self.body_slice(b)
            kind[sl] = s.row_kind[sl]
        return AssembledSystem(r, K.tocsr(), kind), None, flags

    def galerkin_residual(self, u, load_factor):
        """Residual of the Galerkin weak form (bulk, loads, Galerkin contact)."""
        r, _ = self.galerkin_bulk(u, load_factor, tangent=False)
        if self.formulation in GALERKIN_FORMS:
            for p in self.pairs:
                r = r + assemble_galerkin_contact(p, u, self.n_dofs, tangent=False)[0]
        return r


def reaction_force(model: Model, u, load_factor, body: str, side: str, residual=None):
    """Reaction on the constrained components of ``side`` of ``body``.

    The Galerkin residual at the fixed dofs, summed per component.
    """
    b = model.by_name[body]
    r = model.galerkin_residual(u, load_factor) if residual is None else residual
    out = np.zeros(2)
    cps = b.patch.side_indices(side)
    fixed = set(model.constraints.fixed.tolist())
    for k in range(2):
        dofs = [b.offset + 2 * a + k for a in cps if b.offset + 2 * a + k in fixed]
        out[k] = r[dofs].sum() if dofs else 0.0
    return out


@dataclass
class SolveConfig:
    load_steps: int = 10
    newton_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_iter: int = 30
    max_bisections: int = 8
    zigzag_window: int = 4
    zigzag_tol: float = 1e-3
    stagnation_level: float = 1e-6

    def __post_init__(self):
        if self.load_steps < 1 or self.max_iter < 1 or self.max_bisections < 0:
            raise ConfigurationError("solver counts must be positive")
        if not 0 < self.newton_tol < 1 or self.abs_tol <= 0:
            raise ConfigurationError("tolerances must lie in (0, 1)")


@dataclass
class StepRecord:
    step: int
    load_factor: float
    converged: bool
    iterations: int
    residuals: list
    bisections: int = 0
    reactions: dict = field(default_factory=dict)


@dataclass
class SolveTrace:
    steps: list = field(default_factory=list)
    success: bool = False
    message: str = ""

    @property
    def load_factor(self) -> float:
        return self.steps[-1].load_factor if self.steps else 0.0


@dataclass
class SystemState:
    u: np.ndarray
    load_factor: float


class _StepFailed(Exception):
    pass


def _zigzag(res, window, tol):
    """Residual alternating between two values: ``|r_k - r_{k-2}| / r_k < tol`` twice."""
    if len(res) < window:
        return False
    hits = [abs(res[k] - res[k - 2]) < tol * res[k] for k in range(len(res) - 2, len(res))]
    return all(hits)


def _roundoff(sysm, u, cmap):
    """Residual level reachable in floating point: ``eps * |K| |u|`` on the free rows."""
    scale = abs(sysm.tangent) @ np.abs(u)
    return 16.0 * np.finfo(float).eps * float(np.linalg.norm(cmap.Tt @ scale))


def newton(model: Model, u, lam_old, lam_new, cfg: SolveConfig):
    """Newton iterations for one increment starting from the converged ``u``."""
    cmap = model.constraints
    u = u.copy()
    du_d = cmap.dirichlet_values(lam_new) - cmap.dirichlet_values(lam_old)
    res = []
    ref = None
    for it in range(cfg.max_iter + 1):
        try:
            sysm, _, _ = model.assemble(u, lam_new)
        except InadmissibleStateError as exc:
            raise _StepFailed("inadmissible state: %s" % exc)
        K, rhs = cmap.reduce(sysm, du_d if it == 0 else None)
        nrm = float(np.linalg.norm(cmap.Tt @ sysm.residual)) if it > 0 else float(np.linalg.norm(rhs))
        if it == 0:
            ref = max(nrm, 1e-300)
        else:
            res.append(nrm)
            if nrm <= max(cfg.newton_tol * ref, cfg.abs_tol, _roundoff(sysm, u, cmap)):
                return u, it, res
            # stagnation deep below the initial residual is the roundoff plateau
            if len(res) >= 2 and nrm <= cfg.stagnation_level * ref and nrm > 0.5 * res[-2]:
                return u, it, res
            if not np.isfinite(nrm):
                raise _StepFailed("non-finite residual")
            if _zigzag(res, cfg.zigzag_window, cfg.zigzag_tol):
                raise _StepFailed("zig-zagging residual")
        if it == cfg.max_iter:
            break
        try:
            dq = spla.spsolve(K, rhs)
        except RuntimeError as exc:
            raise _StepFailed("linear solve failed: %s" % exc)
        if not np.all(np.isfinite(dq)):
            raise _StepFailed("singular tangent")
        du = cmap.expand(dq)
        if it == 0 and cmap.fixed.size:
            du[cmap.fixed] += du_d
        u = u + du
    raise _StepFailed("no convergence in %d iterations" % cfg.max_iter)


def solve(model: Model, cfg: SolveConfig, monitors=(), u0=None, callback=None):
    """Load-stepped solution from the stress-free state to load factor one.

    ``monitors`` lists ``(body, side)`` pairs whose reactions are recorded in
    the trace after every original load step.

    Returns ``(SystemState, SolveTrace)``; the trace has ``success=False``
    and a message when bisections are exhausted.
    """
    u = np.zeros(model.n_dofs) if u0 is None else np.asarray(u0, dtype=float).copy()
    fixed = model.constraints.fixed
    if fixed.size:
        u[fixed] = model.constraints.dirichlet_values(0.0)
    lam = 0.0
    trace = SolveTrace()
    for k in range(1, cfg.load_steps + 1):
        target = k / cfg.load_steps
        dl = target - lam
        depth = 0
        iters, res_all = 0, []
        while lam < target:
            step_to = target if lam + dl >= target - 1e-14 else lam + dl
            try:
                u_new, it, res = newton(model, u, lam, step_to, cfg)
            except _StepFailed as exc:
                depth += 1
                log.info("step %d: %s, bisecting (level %d)", k, exc, depth)
                if depth > cfg.max_bisections:
                    trace.steps.append(StepRecord(k, lam, False, iters, res_all, depth - 1))
                    trace.message = "step %d failed at load factor %.6g: %s" % (k, lam, exc)
                    return SystemState(u, lam), trace
                dl = 0.5 * (step_to - lam)
                continue
            u, lam = u_new, step_to
            iters += it
            res_all.extend(res)
        rec = StepRecord(k, lam, True, iters, res_all, depth)
        if monitors:
            rg = model.galerkin_residual(u, lam)
            for body, side in monitors:
                rec.reactions["%s.%s" % (body, side)] = reaction_force(model, u, lam, body, side, rg)
        trace.steps.append(rec)
        if callback is not None:
            callback(rec, u)
    trace.success = True
    return SystemState(u, lam), trace


def solve_or_raise(model: Model, cfg: SolveConfig, monitors=()):
    state, trace = solve(model, cfg, monitors)
    if not trace.success:
        err = SolverError(trace.message)
        err.trace = trace
        raise err
    return state, trace
