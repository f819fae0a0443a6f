"""
Punta plana con crestas paralelas (huella dactilar)
"""
from typing import Dict

import numpy as np

from .base import EDGE_TOLERANCE, TipGeometry
from ..config import Config
from ..errors import ConfigError


class RidgedTip(TipGeometry):
    """
    Punta plana con crestas de perfil trapezoidal.

    Cada cresta tiene una meseta de la mitad de su ancho y flancos que
    bajan ridge_depth hasta el borde. Solo las crestas tocan la superficie
    y solo las mesetas reparten la carga.
    """

    kind = 'flat-ridged'

    def __init__(
        self,
        contact_width: float = Config.CONTACT_WIDTH,
        ridge_depth: float = Config.RIDGE_DEPTH,
        ridge_width: float = Config.RIDGE_WIDTH,
        ridge_wavelength: float = Config.RIDGE_WAVELENGTH,
    ):
        super().__init__(contact_width)
        self.ridge_depth = float(ridge_depth)            # µm
        self.ridge_width = float(ridge_width)            # µm
        self.ridge_wavelength = float(ridge_wavelength)  # µm

    def validate(self):
        super().validate()
        if not self.ridge_wavelength > self.ridge_width > 0:
            raise ConfigError("se requiere ridge_wavelength > ridge_width > 0", 'tip')
        if self.ridge_depth < 0:
            raise ConfigError("ridge_depth no puede ser negativa", 'tip.ridge_depth')
        if self.ridge_width / 1000.0 > self.contact_width:
            raise ConfigError("la cresta es más ancha que el parche", 'tip.ridge_width')

    def describe(self) -> Dict[str, float]:
        params = super().describe()
        params.update(ridge_depth=self.ridge_depth, ridge_width=self.ridge_width,
                      ridge_wavelength=self.ridge_wavelength)
        return params

    def ridge_centers(self, width: float) -> np.ndarray:
        """Centros (mm) de las crestas que caben en un parche de ancho width"""
        ridge = self.ridge_width / 1000.0
        spacing = self.ridge_wavelength / 1000.0
        count = max(1, int(np.floor((width - ridge) / spacing + 1e-9)) + 1)
        return (np.arange(count) - (count - 1) / 2.0) * spacing

    def ridge_profile(self, v: np.ndarray) -> np.ndarray:
        """Desplazamiento (µm) del perfil trapezoidal en la posición local v (mm)"""
        quarter = self.ridge_width / 4000.0
        flank = np.clip((np.abs(v) - quarter) / quarter, 0.0, 1.0)
        return -self.ridge_depth * flank

    def _regions(self, preload_depth: float, half: float) -> np.ndarray:
        centers = self.ridge_centers(self.patch_width(preload_depth))
        return np.stack([centers - half, centers + half], axis=1)

    def support_regions(self, preload_depth: float) -> np.ndarray:
        return self._regions(preload_depth, self.ridge_width / 2000.0)

    def bearing_regions(self, preload_depth: float) -> np.ndarray:
        return self._regions(preload_depth, self.ridge_width / 4000.0)

    def support_offset(self, u: np.ndarray, preload_depth: float) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        centers = self.ridge_centers(self.patch_width(preload_depth))
        spacing = self.ridge_wavelength / 1000.0
        # Cresta más cercana: los centros son equiespaciados y simétricos
        index = np.clip(np.rint(u / spacing + (centers.size - 1) / 2.0), 0, centers.size - 1)
        local = u - centers[index.astype(int)]
        inside = np.abs(local) <= self.ridge_width / 2000.0 + EDGE_TOLERANCE
        return np.where(inside, self.ridge_profile(local), np.nan)
