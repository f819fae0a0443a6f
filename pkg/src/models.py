"""
Modelos de datos que circulan entre las etapas del pipeline
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError, SchemaVersionError

FEATURE_LAYOUT_VERSION = 'tactil-66/v1'


def _frozen_array(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SurfaceProfile:
    """
    Perfil de alturas 1-D uniformemente muestreado.

    length: mm
    resolution: muestras/mm
    heights: µm, la primera muestra en x=0 y la última en x=length
    """
    length: float
    resolution: float
    heights: np.ndarray

    def __post_init__(self):
        heights = _frozen_array(self.heights)
        object.__setattr__(self, 'heights', heights)
        if heights.ndim != 1 or heights.size < 2:
            raise DataError("Un perfil necesita al menos 2 alturas")
        if not self.length > 0:
            raise DataError("La longitud del perfil debe ser positiva")
        if heights.size != round(self.length * self.resolution):
            raise DataError(
                f"Se esperaban {round(self.length * self.resolution)} alturas, "
                f"hay {heights.size}"
            )

    @property
    def x(self) -> np.ndarray:
        """Posiciones de las muestras en mm"""
        return np.linspace(0.0, self.length, self.heights.size)

    @property
    def spacing(self) -> float:
        return self.length / (self.heights.size - 1)


@dataclass(frozen=True)
class RoughnessMetrics:
    """Ra, Rt y Rp en µm"""
    ra: float
    rt: float
    rp: float


@dataclass(frozen=True, eq=False)
class MagnetTrajectory:
    """
    Pose del centro del imán respecto a su reposo.

    times: s, uniformes
    x_disp / z_disp: µm
    rotation: mrad alrededor del eje y
    """
    times: np.ndarray
    x_disp: np.ndarray
    z_disp: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        for name in ('times', 'x_disp', 'z_disp', 'rotation'):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        n = self.times.size
        if any(getattr(self, name).size != n for name in ('x_disp', 'z_disp', 'rotation')):
            raise DataError("Las series de la trayectoria difieren en longitud")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise DataError("Los tiempos de la trayectoria deben ser crecientes")

    @property
    def rate(self) -> float:
        if self.times.size < 2:
            return 0.0
        # Redondeo para absorber el error de coma flotante de arange/rate
        return round((self.times.size - 1) / (self.times[-1] - self.times[0]), 6)

    def __len__(self):
        return self.times.size


@dataclass(frozen=True, eq=False)
class FieldSeries:
    """
    Campo triaxial cuantizado en cuentas LSB.

    meta: procedencia ('simulated' | 'ingested') y demás datos de la corrida
    """
    times: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    bz: np.ndarray
    rate: float
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'times', _frozen_array(self.times))
        for name in ('bx', 'by', 'bz'):
            object.__setattr__(self, name, _frozen_array(getattr(self, name), np.int64))
        n = self.times.size
        if self.bx.size != n or self.by.size != n or self.bz.size != n:
            raise DataError("Las componentes del campo difieren en longitud")
        if not self.rate > 0:
            raise DataError("La frecuencia de muestreo debe ser positiva")

    def axes(self) -> Dict[str, np.ndarray]:
        return {'x': self.bx, 'y': self.by, 'z': self.bz}

    @property
    def provenance(self) -> str:
        return self.meta.get('provenance', 'simulated')

    def __len__(self):
        return self.times.size


@dataclass(frozen=True, eq=False)
class UniformSeries:
    """Serie uniformemente muestreada a rate Hz"""
    rate: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen_array(self.values))
        if not self.rate > 0:
            raise DataError("La frecuencia de muestreo debe ser positiva")

    @property
    def duration(self) -> float:
        return self.values.size / self.rate

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """
    Espectro de magnitud unilateral con corrección de amplitud.

    n: longitud de la serie transformada
    window_sum: suma de la ventana (normalización documentada)
    """
    freqs: np.ndarray
    power: np.ndarray
    n: int
    window_sum: float

    def __post_init__(self):
        object.__setattr__(self, 'freqs', _frozen_array(self.freqs))
        object.__setattr__(self, 'power', _frozen_array(self.power))
        if self.freqs.size != self.power.size:
            raise DataError("Frecuencias y potencias difieren en longitud")

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if self.freqs.size > 1 else 0.0

    def energy(self) -> float:
        """
        Energía de la señal enventanada reconstruida desde el espectro
        (Parseval con la normalización de amplitud usada).
        """
        scaled = self.power * self.window_sum
        interior = scaled[1:] / 2.0
        if self.n % 2 == 0:
            interior = interior[:-1]
            nyquist = scaled[-1] ** 2
        else:
            nyquist = 0.0
        total = scaled[0] ** 2 + 2.0 * np.sum(interior ** 2) + nyquist
        return float(total / self.n)


@dataclass(frozen=True)
class SpectralPeak:
    """Pico espectral: frecuencia en Hz, magnitud y prominencia topográfica"""
    freq: float
    power: float
    prominence: float


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Vector de 66 características con versión de esquema"""
    values: np.ndarray
    layout_version: str = FEATURE_LAYOUT_VERSION
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen_array(self.values))

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """
    Filas de características con etiqueta de clase y metadatos.

    features: matriz (n_filas × n_características)
    labels: identificador de clase por fila
    meta: diccionario por fila (velocidad, dirección, repetición, ensayo, diseño)
    """
    features: np.ndarray
    labels: Tuple[Any, ...]
    meta: Tuple[Dict[str, Any], ...] = ()
    layout_version: str = FEATURE_LAYOUT_VERSION

    def __post_init__(self):
        features = _frozen_array(self.features)
        if features.ndim != 2:
            raise DataError("La matriz de características debe ser 2-D")
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'labels', tuple(self.labels))
        meta = tuple(self.meta) if self.meta else tuple({} for _ in self.labels)
        object.__setattr__(self, 'meta', meta)
        if len(self.labels) != features.shape[0] or len(meta) != features.shape[0]:
            raise DataError("Etiquetas, metadatos y filas difieren en número")

    @classmethod
    def from_vectors(
        cls,
        vectors: Sequence[FeatureVector],
        labels: Iterable[Any],
        meta: Optional[Iterable[Dict[str, Any]]] = None,
    ) -> 'LabeledDataset':
        """Construye el dataset rechazando versiones de esquema mezcladas"""
        versions = {v.layout_version for v in vectors}
        if len(versions) > 1:
            raise SchemaVersionError(f"Versiones de esquema mezcladas: {sorted(versions)}")
        version = versions.pop() if versions else FEATURE_LAYOUT_VERSION
        matrix = np.vstack([v.values for v in vectors]) if vectors else np.zeros((0, 0))
        return cls(matrix, tuple(labels), tuple(meta) if meta is not None else (),
                   version)

    def with_features(self, features: np.ndarray) -> 'LabeledDataset':
        return LabeledDataset(features, self.labels, self.meta, self.layout_version)

    def subset(self, rows: Sequence[int]) -> 'LabeledDataset':
        rows = list(rows)
        return LabeledDataset(
            self.features[rows] if rows else np.zeros((0, self.n_features)),
            tuple(self.labels[i] for i in rows),
            tuple(self.meta[i] for i in rows),
            self.layout_version,
        )

    @property
    def n_features(self) -> int:
        return self.features.shape[1] if self.features.ndim == 2 else 0

    @property
    def classes(self) -> List[Any]:
        return sorted(set(self.labels))

    def __len__(self):
        return len(self.labels)
