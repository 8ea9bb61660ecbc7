"""Plane-strain constitutive laws: Hooke's law and compressible neo-Hooke.

All kernels are vectorized over leading axes; ``F`` has shape ``(..., 2, 2)``
with the out-of-plane stretch fixed to one. Bulk assembly works with the
first Piola-Kirchhoff stress ``P`` and its derivative ``A = dP/dF``; the
second-derivative ``dA/dF`` feeds the collocated divergence tangent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InadmissibleStateError

_I2 = np.eye(2)


def _det(F):
    return F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]


def _inv(F, det):
    G = np.empty_like(F)
    G[..., 0, 0] = F[..., 1, 1]
    G[..., 1, 1] = F[..., 0, 0]
    G[..., 0, 1] = -F[..., 0, 1]
    G[..., 1, 0] = -F[..., 1, 0]
    return G / det[..., None, None]


@dataclass(frozen=True)
class KinematicState:
    F: np.ndarray

    @property
    def J(self):
        return _det(np.asarray(self.F))

    @property
    def C(self):
        F = np.asarray(self.F)
        return np.swapaxes(F, -1, -2) @ F

    @property
    def E(self):
        return 0.5 * (self.C - _I2)


@dataclass(frozen=True)
class StressState:
    S: np.ndarray
    P: np.ndarray
    tangent: np.ndarray  # Voigt (xx, yy, xy) with engineering shear


# Voigt index pairs for (xx, yy, xy)
_VOIGT = ((0, 0), (1, 1), (0, 1))


def _to_voigt(C4):
    out = np.empty(C4.shape[:-4] + (3, 3))
    for a, (i, j) in enumerate(_VOIGT):
        for b, (k, l) in enumerate(_VOIGT):
            out[..., a, b] = C4[..., i, j, k, l]
    return out


@dataclass(frozen=True)
class Material:
    """Isotropic material with Lame parameters ``lam`` and ``mu``."""

    lam: float
    mu: float

    def __post_init__(self):
        if self.mu <= 0 or self.lam + 2.0 * self.mu / 3.0 <= 0:
            raise ConfigurationError("Lame parameters violate mu > 0, lam + 2 mu / 3 > 0")

    @classmethod
    def from_young(cls, E: float, nu: float):
        return cls(E * nu / ((1 + nu) * (1 - 2 * nu)), E / (2 * (1 + nu)))

    # interface -------------------------------------------------------------
    def energy(self, F):
        raise NotImplementedError

    def piola(self, F):
        raise NotImplementedError

    def piola_tangent(self, F):
        """Return ``(P, A)`` with ``A[..., i, J, k, L] = dP_iJ / dF_kL``."""
        raise NotImplementedError

    def piola_tangent_derivative(self, F):
        """``dA[..., i, J, k, L, m, N] = d A_iJkL / dF_mN``."""
        raise NotImplementedError

    def cauchy(self, F):
        raise NotImplementedError

    def second_piola(self, F):
        raise NotImplementedError

    @property
    def is_linear(self) -> bool:
        return False


@dataclass(frozen=True)
class LinearElastic(Material):
    """Hooke's law on the symmetric displacement gradient.

    ``P`` is identified with the small-strain Cauchy stress.
    """

    @property
    def is_linear(self) -> bool:
        return True

    def _tensor(self):
        d = _I2
        return self.lam * np.einsum("ij,kl->ijkl", d, d) + self.mu * (
            np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)
        )

    def strain(self, F):
        H = np.asarray(F) - _I2
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    def stress(self, eps):
        tr = eps[..., 0, 0] + eps[..., 1, 1]
        return self.lam * tr[..., None, None] * _I2 + 2.0 * self.mu * eps

    def energy(self, F):
        eps = self.strain(F)
        return 0.5 * np.einsum("...ij,...ij->...", eps, self.stress(eps))

    def piola(self, F):
        return self.stress(self.strain(F))

    def piola_tangent(self, F):
        F = np.asarray(F)
        A = np.broadcast_to(self._tensor(), F.shape[:-2] + (2, 2, 2, 2))
        return self.piola(F), A

    def piola_tangent_derivative(self, F):
        return np.zeros(np.shape(F)[:-2] + (2,) * 6)

    def cauchy(self, F):
        return self.piola(F)

    def second_piola(self, F):
        return self.piola(F)

    def voigt_tangent(self):
        return _to_voigt(self._tensor())


@dataclass(frozen=True)
class NeoHookean(Material):
    """psi = mu/2 (I1 - 3) - mu ln J + lam/2 (ln J)^2, I1 including the unit out-of-plane stretch."""

    def _kin(self, F):
        F = np.asarray(F, dtype=float)
        J = _det(F)
        if np.any(J <= 0):
            raise InadmissibleStateError("det F <= 0 (min %g)" % np.min(J))
        return F, J, _inv(F, J)

    def energy(self, F):
        F, J, _ = self._kin(F)
        I1 = np.einsum("...ij,...ij->...", F, F) + 1.0
        lnJ = np.log(J)
        return 0.5 * self.mu * (I1 - 3.0) - self.mu * lnJ + 0.5 * self.lam * lnJ**2

    def piola(self, F):
        F, J, G = self._kin(F)
        c = self.lam * np.log(J) - self.mu
        return self.mu * F + c[..., None, None] * np.swapaxes(G, -1, -2)

    def piola_tangent(self, F):
        F, J, G = self._kin(F)
        lam, mu = self.lam, self.mu
        c = lam * np.log(J) - mu
        P = mu * F + c[..., None, None] * np.swapaxes(G, -1, -2)
        A = (
            mu * np.einsum("ik,JL->iJkL", _I2, _I2)
            + lam * np.einsum("...Ji,...Lk->...iJkL", G, G)
            - c[..., None, None, None, None] * np.einsum("...Jk,...Li->...iJkL", G, G)
        )
        return P, A

    def piola_tangent_derivative(self, F):
        F, J, G = self._kin(F)
        lam = self.lam
        c = (lam * np.log(J) - self.mu)[..., None, None, None, None, None, None]
        e = np.einsum
        dA = lam * (
            -e("...Jm,...Ni,...Lk->...iJkLmN", G, G, G)
            - e("...Ji,...Lm,...Nk->...iJkLmN", G, G, G)
            - e("...Nm,...Jk,...Li->...iJkLmN", G, G, G)
        )
        dA = dA + c * (
            e("...Jm,...Nk,...Li->...iJkLmN", G, G, G)
            + e("...Jk,...Lm,...Ni->...iJkLmN", G, G, G)
        )
        return dA

    def second_piola(self, F):
        F, J, G = self._kin(F)
        Cinv = G @ np.swapaxes(G, -1, -2)
        return self.mu * (_I2 - Cinv) + (self.lam * np.log(J))[..., None, None] * Cinv

    def material_tangent(self, F):
        """``dS/dE`` as a fourth-order tensor."""
        F, J, G = self._kin(F)
        Ci = G @ np.swapaxes(G, -1, -2)
        f = (self.mu - self.lam * np.log(J))[..., None, None, None, None]
        sym = 0.5 * (np.einsum("...ik,...jl->...ijkl", Ci, Ci) + np.einsum("...il,...jk->...ijkl", Ci, Ci))
        return self.lam * np.einsum("...ij,...kl->...ijkl", Ci, Ci) + 2.0 * f * sym

    def cauchy(self, F):
        F, J, _ = self._kin(F)
        P = self.piola(F)
        return P @ np.swapaxes(F, -1, -2) / J[..., None, None]


def eval_stress(mat: Material, kin: KinematicState) -> StressState:
    """Stress measures and the Voigt material tangent at ``kin``."""
    F = np.asarray(kin.F, dtype=float)
    if isinstance(mat, NeoHookean):
        S = mat.second_piola(F)
        return StressState(S, F @ S, _to_voigt(mat.material_tangent(F)))
    sig = mat.piola(F)
    return StressState(sig, sig, np.broadcast_to(mat.voigt_tangent(), F.shape[:-2] + (3, 3)))


def eval_energy(mat: Material, kin: KinematicState):
    return mat.energy(kin.F)
