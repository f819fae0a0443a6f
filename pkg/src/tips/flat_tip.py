"""
Punta plana sin crestas
"""
import numpy as np

from .base import EDGE_TOLERANCE, TipGeometry


class FlatTip(TipGeometry):
    """
    Punta plana: todo el parche a la misma altura.
    Es el diseño de control.
    """

    kind = 'flat'

    def support_offset(self, u: np.ndarray, preload_depth: float) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        half = self.patch_width(preload_depth) / 2.0
        return np.where(np.abs(u) <= half + EDGE_TOLERANCE, 0.0, np.nan)
