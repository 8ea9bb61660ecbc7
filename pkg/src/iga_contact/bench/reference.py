"""Closed-form reference of the cylinder-on-plane problem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HertzReference:
    """Line contact of an elastic cylinder (load ``load`` per unit thickness)
    with a rigid plane in plane strain."""

    load: float
    radius: float
    young: float
    poisson: float

    @property
    def plane_strain_modulus(self) -> float:
        return self.young / (1.0 - self.poisson**2)

    @property
    def half_width(self) -> float:
        return float(np.sqrt(4.0 * self.load * self.radius / (np.pi * self.plane_strain_modulus)))

    @property
    def max_pressure(self) -> float:
        return 2.0 * self.load / (np.pi * self.half_width)

    def pressure(self, x):
        """Elliptical pressure distribution, zero outside the contact zone."""
        s = np.clip(1.0 - (np.asarray(x, dtype=float) / self.half_width) ** 2, 0.0, None)
        return self.max_pressure * np.sqrt(s)
