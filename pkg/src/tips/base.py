"""
Clase base abstracta para las geometrías de punta del sensor
"""
from abc import ABC, abstractmethod
from typing import ClassVar, Dict

import numpy as np

from ..config import Config
from ..errors import ConfigError

EDGE_TOLERANCE = 1e-9  # mm


class TipGeometry(ABC):
    """
    Todas las puntas heredan de esta clase e implementan support_offset()
    con su perfil inferior.

    El perfil se expresa respecto al centro del parche: posición u (mm) y
    desplazamiento vertical (µm, <= 0) respecto al plano de la cresta más
    saliente. Fuera de las zonas de apoyo el perfil vale NaN.
    """

    kind: ClassVar[str] = ''

    def __init__(self, contact_width: float = Config.CONTACT_WIDTH):
        self.contact_width = float(contact_width)  # mm

    @abstractmethod
    def support_offset(self, u: np.ndarray, preload_depth: float) -> np.ndarray:
        """
            u: posiciones relativas al centro del parche en mm
            preload_depth: indentación estática en µm
            Returns: desplazamiento en µm, NaN donde la punta no apoya
        """
        pass

    def patch_width(self, preload_depth: float) -> float:
        """Ancho (mm) de la zona de contacto para la indentación dada"""
        return self.contact_width

    def support_regions(self, preload_depth: float) -> np.ndarray:
        """Intervalos (n, 2) en mm, relativos al centro, donde la punta puede tocar"""
        half = self.patch_width(preload_depth) / 2.0
        return np.array([[-half, half]])

    def bearing_regions(self, preload_depth: float) -> np.ndarray:
        """Intervalos (n, 2) que reparten la carga en el término de compliancia"""
        return self.support_regions(preload_depth)

    def validate(self):
        if not self.contact_width > 0:
            raise ConfigError("contact_width debe ser > 0", 'tip.contact_width')

    def describe(self) -> Dict[str, float]:
        """Parámetros planos de la punta (para procedencia y configuración)"""
        return {'kind': self.kind, 'contact_width': self.contact_width}

    def __repr__(self):
        params = ', '.join(f"{k}={v}" for k, v in self.describe().items() if k != 'kind')
        return f"{self.__class__.__name__}({params})"
