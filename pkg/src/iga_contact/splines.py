"""B-spline and NURBS machinery for tensor-product patches.

Control points of a patch are stored as an ``(n, m, 2)`` array indexed
``[i, j]``; flat control point numbering is ``a = j * n + i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

SIDES = ("south", "north", "west", "east")


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector of degree ``degree``."""

    degree: int
    knots: np.ndarray = field(repr=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        p = self.degree
        if p < 0:
            raise ConfigurationError("degree must be non-negative")
        if knots.ndim != 1 or knots.size < 2 * (p + 1):
            raise ConfigurationError("knot vector too short for degree %d" % p)
        if np.any(np.diff(knots) < 0):
            raise ConfigurationError("knots must be non-decreasing")
        if np.any(knots[: p + 1] != knots[0]) or np.any(knots[-p - 1 :] != knots[-1]):
            raise ConfigurationError("knot vector must be open")
        if knots[-1] <= knots[0]:
            raise ConfigurationError("knot vector has zero length")
        _, counts = np.unique(knots[p + 1 : -p - 1], return_counts=True)
        if counts.size and counts.max() > p:
            raise ConfigurationError("interior knot multiplicity exceeds degree")

    @classmethod
    def uniform(cls, degree: int, n_elements: int, start=0.0, end=1.0) -> "KnotVector":
        inner = np.linspace(start, end, n_elements + 1)
        return cls(degree, np.r_[[start] * degree, inner, [end] * degree])

    @classmethod
    def from_breaks(cls, degree: int, breaks) -> "KnotVector":
        """Open knot vector with single interior knots at ``breaks[1:-1]``."""
        breaks = np.asarray(breaks, dtype=float)
        return cls(degree, np.r_[[breaks[0]] * degree, breaks, [breaks[-1]] * degree])

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return self.knots.size - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def breaks(self) -> np.ndarray:
        """Distinct knot values, i.e. the Bezier element boundaries."""
        return np.unique(self.knots)

    @property
    def n_elements(self) -> int:
        return self.breaks.size - 1

    def multiplicity(self, value: float) -> int:
        return int(np.sum(self.knots == value))

    def max_interior_multiplicity(self) -> int:
        p = self.degree
        _, counts = np.unique(self.knots[p + 1 : -p - 1], return_counts=True)
        return int(counts.max()) if counts.size else 0

    def find_span(self, xi: float) -> int:
        lo, hi = self.domain
        if xi < lo - 1e-14 * (hi - lo) or xi > hi + 1e-14 * (hi - lo):
            raise DomainError("parameter %r outside knot range [%g, %g]" % (xi, lo, hi))
        p, n = self.degree, self.n
        if xi >= self.knots[n]:
            return n - 1
        if xi <= self.knots[p]:
            return p
        return int(np.searchsorted(self.knots, xi, side="right") - 1)

    def greville(self) -> np.ndarray:
        return greville_points(self)


def eval_basis(kv: KnotVector, xi: float, deriv_order: int = 0):
    """Nonzero basis functions of ``kv`` at ``xi`` and their derivatives.

    Returns
    -------
    span : int
        Knot span index; the local functions are ``N_{span-p} .. N_{span}``.
    ders : ndarray, shape (deriv_order + 1, p + 1)
        ``ders[k, r]`` is the k-th derivative of ``N_{span-p+r}``.
    """
    p, U = kv.degree, kv.knots
    if deriv_order > p and p > 0:
        raise DomainError("derivative order exceeds degree")
    span = kv.find_span(xi)
    xi = min(max(xi, U[0]), U[-1])
    nd = deriv_order
    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = xi - U[span + 1 - j]
        right[j] = U[span + j] - xi
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((nd + 1, p + 1))
    ders[0] = ndu[:, p]
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, nd + 1):
            d = 0.0
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = float(p)
    for k in range(1, nd + 1):
        ders[k] *= fac
        fac *= p - k
    return span, ders


def greville_points(kv: KnotVector) -> np.ndarray:
    """Greville abscissae: averages of ``p`` consecutive interior knots."""
    p, U = kv.degree, kv.knots
    if p == 0:
        return 0.5 * (U[:-1] + U[1:])
    csum = np.r_[0.0, np.cumsum(U)]
    tau = (csum[p + 1 : p + 1 + kv.n] - csum[1 : 1 + kv.n]) / p
    tau[0], tau[-1] = U[0], U[-1]
    return tau


def gauss_points(kv: KnotVector, n_per_element: int | None = None):
    """Gauss-Legendre points and weights over every Bezier element."""
    ng = kv.degree + 1 if n_per_element is None else n_per_element
    gp, gw = np.polynomial.legendre.leggauss(ng)
    br = kv.breaks
    a, b = br[:-1, None], br[1:, None]
    pts = 0.5 * (a + b) + 0.5 * (b - a) * gp[None, :]
    wts = 0.5 * (b - a) * gw[None, :]
    return pts.ravel(), wts.ravel()


@dataclass(frozen=True)
class NurbsCurve:
    """Univariate NURBS curve, e.g. a boundary view of a patch."""

    knot: KnotVector
    control_points: np.ndarray
    weights: np.ndarray
    cp_index: np.ndarray | None = None  # flat patch indices of the control points

    @property
    def n(self) -> int:
        return self.knot.n

    def basis(self, xi: float, deriv_order: int = 0):
        """Rational basis ``(first local index, R)`` with ``R`` of shape (d+1, p+1)."""
        return rational_curve_basis(self.knot, self.weights, xi, deriv_order)

    def evaluate(self, xi: float, deriv_order: int = 0, points=None) -> np.ndarray:
        """Position and parametric derivatives, shape ``(deriv_order + 1, 2)``."""
        pts = self.control_points if points is None else points
        first, R = self.basis(xi, deriv_order)
        return R @ pts[first : first + R.shape[1]]

    def greville(self) -> np.ndarray:
        return greville_points(self.knot)


def rational_curve_basis(kv: KnotVector, weights, xi: float, deriv_order: int = 0):
    span, N = eval_basis(kv, xi, deriv_order)
    first = span - kv.degree
    w = np.asarray(weights)[first : span + 1]
    A = N * w[None, :]
    W = A.sum(axis=1)
    R = np.empty_like(A)
    R[0] = A[0] / W[0]
    if deriv_order >= 1:
        R[1] = (A[1] - R[0] * W[1]) / W[0]
    if deriv_order >= 2:
        R[2] = (A[2] - 2.0 * R[1] * W[1] - R[0] * W[2]) / W[0]
    return first, R


@dataclass(frozen=True)
class NurbsPatch2D:
    """Tensor-product NURBS surface patch in the plane."""

    knot_u: KnotVector
    knot_v: KnotVector
    control_points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "weights", w)
        shape = (self.knot_u.n, self.knot_v.n)
        if cp.shape != shape + (2,) or w.shape != shape:
            raise ConfigurationError(
                "control grid %s does not match basis counts %s" % (cp.shape[:2], shape)
            )
        if np.any(w <= 0):
            raise ConfigurationError("weights must be strictly positive")

    @property
    def degrees(self) -> tuple[int, int]:
        return self.knot_u.degree, self.knot_v.degree

    @property
    def shape(self) -> tuple[int, int]:
        return self.knot_u.n, self.knot_v.n

    @property
    def n_control_points(self) -> int:
        return self.knot_u.n * self.knot_v.n

    def flat_control_points(self) -> np.ndarray:
        return self.control_points.transpose(1, 0, 2).reshape(-1, 2)

    def flat_weights(self) -> np.ndarray:
        return self.weights.T.ravel()

    def side_indices(self, side: str) -> np.ndarray:
        """Flat indices of the control points on ``side``, in curve order."""
        n, m = self.shape
        if side == "south":
            return np.arange(n)
        if side == "north":
            return (m - 1) * n + np.arange(n)
        if side == "west":
            return np.arange(m) * n
        if side == "east":
            return np.arange(m) * n + n - 1
        raise ValueError("unknown side %r" % side)

    def evaluate(self, xi: float, eta: float, deriv_order: int = 0, points=None):
        """Surface point and parametric derivatives.

        Returns a dict with keys ``"x"`` and, depending on ``deriv_order``,
        ``"x_u"``, ``"x_v"``, ``"x_uu"``, ``"x_uv"``, ``"x_vv"``. ``points``
        optionally replaces the control points (flat ordering), which is how
        the current configuration is evaluated.
        """
        cache = tensor_basis(self, [xi], [eta], deriv_order)
        pts = self.flat_control_points() if points is None else np.asarray(points)
        idx = cache.index[0, 0]
        out = {"x": cache.R[0, 0] @ pts[idx]}
        if deriv_order >= 1:
            out["x_u"] = cache.dR[0, 0, :, 0] @ pts[idx]
            out["x_v"] = cache.dR[0, 0, :, 1] @ pts[idx]
        if deriv_order >= 2:
            out["x_uu"] = cache.d2R[0, 0, :, 0] @ pts[idx]
            out["x_uv"] = cache.d2R[0, 0, :, 1] @ pts[idx]
            out["x_vv"] = cache.d2R[0, 0, :, 2] @ pts[idx]
        return out

    def boundary_curve(self, side: str) -> NurbsCurve:
        return boundary_curve(self, side)

    def orientation(self) -> float:
        """+1 for a right-handed parametrization, -1 otherwise."""
        lo_u, hi_u = self.knot_u.domain
        lo_v, hi_v = self.knot_v.domain
        d = self.evaluate(0.5 * (lo_u + hi_u), 0.5 * (lo_v + hi_v), 1)
        det = d["x_u"][0] * d["x_v"][1] - d["x_u"][1] * d["x_v"][0]
        return 1.0 if det > 0 else -1.0


@dataclass
class TensorBasis:
    """Rational basis on a tensor grid of parameter values.

    Arrays are shaped ``(nu, nv, nen, ...)`` with local function ordering
    ``r + (p + 1) * s``. ``d2R[..., k]`` holds the uu, uv, vv derivatives.
    """

    index: np.ndarray
    R: np.ndarray
    dR: np.ndarray | None
    d2R: np.ndarray | None


def _univariate_table(kv: KnotVector, values, deriv_order: int):
    values = np.asarray(values, dtype=float)
    spans = np.empty(values.size, dtype=int)
    ders = np.empty((values.size, deriv_order + 1, kv.degree + 1))
    nd = min(deriv_order, kv.degree) if kv.degree > 0 else 0
    for k, x in enumerate(values):
        s, d = eval_basis(kv, float(x), nd)
        spans[k] = s
        ders[k, : nd + 1] = d
        ders[k, nd + 1 :] = 0.0
    return spans, ders


def tensor_basis(patch: NurbsPatch2D, u_values, v_values, deriv_order: int = 1) -> TensorBasis:
    p, q = patch.degrees
    n, _ = patch.shape
    su, Nu = _univariate_table(patch.knot_u, u_values, deriv_order)
    sv, Nv = _univariate_table(patch.knot_v, v_values, deriv_order)
    nu, nv = su.size, sv.size
    iu = su[:, None] - p + np.arange(p + 1)[None, :]  # (nu, p+1)
    iv = sv[:, None] - q + np.arange(q + 1)[None, :]  # (nv, q+1)
    # local (r, s) -> flat r + (p+1) s; global i + n j
    gidx = iu[:, None, None, :] + n * iv[None, :, :, None]  # (nu, nv, q+1, p+1)
    index = gidx.reshape(nu, nv, -1)
    w = patch.weights[iu[:, None, None, :], iv[None, :, :, None]]  # (nu,nv,q+1,p+1)

    def prod(du, dv):
        return (Nu[:, None, None, du, :] * Nv[None, :, dv, :, None] * w).reshape(nu, nv, -1)

    A = prod(0, 0)
    W = A.sum(-1, keepdims=True)
    R = A / W
    dR = d2R = None
    if deriv_order >= 1:
        Au, Av = prod(1, 0), prod(0, 1)
        Wu, Wv = Au.sum(-1, keepdims=True), Av.sum(-1, keepdims=True)
        Ru = (Au - R * Wu) / W
        Rv = (Av - R * Wv) / W
        dR = np.stack([Ru, Rv], axis=-1)
    if deriv_order >= 2:
        Auu, Auv, Avv = prod(2, 0), prod(1, 1), prod(0, 2)
        Wuu = Auu.sum(-1, keepdims=True)
        Wuv = Auv.sum(-1, keepdims=True)
        Wvv = Avv.sum(-1, keepdims=True)
        Ruu = (Auu - 2 * Ru * Wu - R * Wuu) / W
        Ruv = (Auv - Ru * Wv - Rv * Wu - R * Wuv) / W
        Rvv = (Avv - 2 * Rv * Wv - R * Wvv) / W
        d2R = np.stack([Ruu, Ruv, Rvv], axis=-1)
    return TensorBasis(index, R, dR, d2R)


@dataclass
class PhysicalBasis:
    """Basis functions and physical derivatives at a flat list of points."""

    index: np.ndarray  # (npts, nen)
    R: np.ndarray  # (npts, nen)
    grad: np.ndarray  # (npts, nen, 2)  dR/dX
    X: np.ndarray  # (npts, 2)
    jac: np.ndarray  # (npts, 2, 2)  dX_i / dxi_alpha
    detJ: np.ndarray  # (npts,)
    hess: np.ndarray | None = None  # (npts, nen, 2, 2)
    dR_param: np.ndarray | None = None  # (npts, nen, 2)


def physical_basis(patch: NurbsPatch2D, u_values, v_values, second: bool = False) -> PhysicalBasis:
    """Basis on the tensor grid, flattened with ``u`` running fastest."""
    tb = tensor_basis(patch, u_values, v_values, 2 if second else 1)
    nu, nv, nen = tb.R.shape
    # flatten with u fastest: transpose (nv, nu)
    index = tb.index.transpose(1, 0, 2).reshape(-1, nen)
    R = tb.R.transpose(1, 0, 2).reshape(-1, nen)
    dR = tb.dR.transpose(1, 0, 2, 3).reshape(-1, nen, 2)
    P = patch.flat_control_points()[index]  # (npts, nen, 2)
    X = np.einsum("pa,pai->pi", R, P)
    jac = np.einsum("pai,paj->pij", P, dR)
    detJ = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if np.any(np.abs(detJ) < 1e-300):
        raise DomainError("singular geometry map")
    jinv = np.linalg.inv(jac)  # (npts, alpha, i)
    grad = np.einsum("paA,pAi->pai", dR, jinv)
    hess = None
    if second:
        d2 = tb.d2R.transpose(1, 0, 2, 3).reshape(-1, nen, 3)
        H = np.empty(d2.shape[:2] + (2, 2))
        H[..., 0, 0] = d2[..., 0]
        H[..., 0, 1] = H[..., 1, 0] = d2[..., 1]
        H[..., 1, 1] = d2[..., 2]
        Xh = np.einsum("pai,paAB->piAB", P, H)  # geometry second derivatives
        corr = H - np.einsum("pak,pkAB->paAB", grad, Xh)
        hess = np.einsum("paAB,pAi,pBj->paij", corr, jinv, jinv)
    return PhysicalBasis(index, R, grad, X, jac, detJ, hess, dR)


def boundary_curve(patch: NurbsPatch2D, side: str) -> NurbsCurve:
    """View of a patch side as a univariate NURBS curve."""
    if side in ("south", "north"):
        j = 0 if side == "south" else -1
        pts, w, kv = patch.control_points[:, j], patch.weights[:, j], patch.knot_u
    elif side in ("west", "east"):
        i = 0 if side == "west" else -1
        pts, w, kv = patch.control_points[i, :], patch.weights[i, :], patch.knot_v
    else:
        raise ValueError("unknown side %r" % side)
    return NurbsCurve(kv, pts.copy(), w.copy(), patch.side_indices(side))


def side_parameter(patch: NurbsPatch2D, side: str, t: float) -> tuple[float, float]:
    """Surface parameters of curve parameter ``t`` on ``side``."""
    lo_u, hi_u = patch.knot_u.domain
    lo_v, hi_v = patch.knot_v.domain
    return {
        "south": (t, lo_v),
        "north": (t, hi_v),
        "west": (lo_u, t),
        "east": (hi_u, t),
    }[side]


def outward_normal(side: str, tangent, orientation: float) -> np.ndarray:
    """Outward unit normal from the along-side tangent vector(s)."""
    t = np.asarray(tangent, dtype=float)
    rot = np.stack([t[..., 1], -t[..., 0]], axis=-1)  # clockwise rotation
    sign = orientation * (1.0 if side in ("south", "east") else -1.0)
    nrm = np.linalg.norm(rot, axis=-1, keepdims=True)
    return sign * rot / nrm


# --- knot insertion ---------------------------------------------------------


def _insert_knot_curve(kv: KnotVector, Pw: np.ndarray, u: float):
    """Boehm insertion of one knot into homogeneous control points ``Pw``."""
    p, U = kv.degree, kv.knots
    k = kv.find_span(u)
    if u == U[-1]:
        raise ConfigurationError("cannot insert a knot at the domain end")
    s = kv.multiplicity(u)
    if s + 1 > p:
        raise ConfigurationError("knot %g would exceed multiplicity %d" % (u, p))
    n = kv.n
    Q = np.empty((n + 1,) + Pw.shape[1:])
    Q[: k - p + 1] = Pw[: k - p + 1]
    Q[k - s + 1 :] = Pw[k - s :]
    for i in range(k - p + 1, k - s + 1):
        alpha = (u - U[i]) / (U[i + p] - U[i])
        Q[i] = alpha * Pw[i] + (1.0 - alpha) * Pw[i - 1]
    newU = np.insert(U, k + 1, u)
    return KnotVector(p, newU), Q


def refine_knots(patch: NurbsPatch2D, direction: str, new_knots) -> NurbsPatch2D:
    """Insert ``new_knots`` in direction ``"u"`` or ``"v"``; geometry is unchanged."""
    Pw = np.concatenate(
        [patch.control_points * patch.weights[..., None], patch.weights[..., None]], axis=-1
    )
    ku, kv = patch.knot_u, patch.knot_v
    if direction == "v":
        Pw = Pw.transpose(1, 0, 2)
        ku, kv = kv, ku
    elif direction != "u":
        raise ValueError("direction must be 'u' or 'v'")
    lo, hi = ku.domain
    for x in sorted(float(x) for x in new_knots):
        if not lo < x < hi:
            raise ConfigurationError("knot %g outside the open parameter range" % x)
        ku, Pw = _insert_knot_curve(ku, Pw, x)
    if direction == "v":
        Pw = Pw.transpose(1, 0, 2)
        ku, kv = kv, ku
    w = Pw[..., 2]
    return NurbsPatch2D(ku, kv, Pw[..., :2] / w[..., None], w)


def refine_to_breaks(patch: NurbsPatch2D, u_breaks=None, v_breaks=None) -> NurbsPatch2D:
    """Insert single knots so the element boundaries become the given breaks."""
    for direction, br, kv in (("u", u_breaks, patch.knot_u), ("v", v_breaks, patch.knot_v)):
        if br is None:
            continue
        br = np.asarray(br, dtype=float)
        existing = kv.breaks
        new = [x for x in br[1:-1] if not np.any(np.isclose(existing, x, rtol=0, atol=1e-14))]
        patch = refine_knots(patch, direction, new)
    return patch


def elevate_bezier(Pw: np.ndarray, times: int = 1) -> np.ndarray:
    """Degree elevation of a single (homogeneous) Bezier segment along axis 0."""
    for _ in range(times):
        p = Pw.shape[0] - 1
        Q = np.empty((p + 2,) + Pw.shape[1:])
        Q[0], Q[-1] = Pw[0], Pw[-1]
        for i in range(1, p + 1):
            a = i / (p + 1)
            Q[i] = a * Pw[i - 1] + (1 - a) * Pw[i]
        Pw = Q
    return Pw


def graded_breaks(n_elements: int, element_fraction=0.8, length_fraction=0.1, at="start"):
    """Element boundaries with ``element_fraction`` of the elements packed into
    ``length_fraction`` of the (unit) parameter range at one end."""
    n_fine = int(round(element_fraction * n_elements))
    n_coarse = n_elements - n_fine
    if n_fine < 1 or n_coarse < 1:
        return np.linspace(0.0, 1.0, n_elements + 1)
    fine = np.linspace(0.0, length_fraction, n_fine + 1)
    coarse = np.linspace(length_fraction, 1.0, n_coarse + 1)[1:]
    br = np.r_[fine, coarse]
    if at == "end":
        br = 1.0 - br[::-1]
    elif at != "start":
        raise ValueError("at must be 'start' or 'end'")
    return br
