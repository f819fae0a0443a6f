"""
Punta esférica con crestas, inspirada en la yema del dedo
"""
from typing import Dict

import numpy as np

from .ridged_tip import RidgedTip
from ..config import Config
from ..errors import ConfigError


class SphericalRidgedTip(RidgedTip):
    """
    Crestas sobre un casquete esférico de radio sphere_radius.

    Cada punto de la cresta baja además la sagita de la esfera en su
    posición, y el ancho del parche sale de la cuerda del segmento circular
    indentado.
    """

    kind = 'spherical-ridged'

    def __init__(
        self,
        contact_width: float = Config.CONTACT_WIDTH,
        ridge_depth: float = Config.RIDGE_DEPTH,
        ridge_width: float = Config.RIDGE_WIDTH,
        ridge_wavelength: float = Config.RIDGE_WAVELENGTH,
        sphere_radius: float = Config.SPHERE_RADIUS,
    ):
        super().__init__(contact_width, ridge_depth, ridge_width, ridge_wavelength)
        self.sphere_radius = float(sphere_radius)  # mm

    def validate(self):
        super().validate()
        if not self.sphere_radius * 2 > self.contact_width:
            raise ConfigError("el diámetro de la esfera debe superar contact_width",
                              'tip.sphere_radius')

    def describe(self) -> Dict[str, float]:
        params = super().describe()
        params['sphere_radius'] = self.sphere_radius
        return params

    def patch_width(self, preload_depth: float) -> float:
        depth = min(preload_depth / 1000.0, self.sphere_radius)
        chord = 2.0 * np.sqrt(max(2.0 * self.sphere_radius * depth - depth ** 2, 0.0))
        return float(min(self.contact_width, max(chord, self.ridge_width / 1000.0)))

    def sagitta(self, u: np.ndarray) -> np.ndarray:
        """Caída de la esfera (µm) a distancia u (mm) del centro"""
        radius = self.sphere_radius
        u = np.clip(np.abs(u), 0.0, radius)
        return (radius - np.sqrt(radius ** 2 - np.square(u))) * 1000.0

    def support_offset(self, u: np.ndarray, preload_depth: float) -> np.ndarray:
        return super().support_offset(u, preload_depth) - self.sagitta(u)
