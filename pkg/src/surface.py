"""
Superficies 1-D parametrizadas y métricas de rugosidad
"""
import logging
from dataclasses import dataclass
from typing import Dict, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from .config import Config
from .csvio import read_csv, write_csv
from .errors import DataError, InvalidSpecError
from .models import RoughnessMetrics, SurfaceProfile

logger = logging.getLogger(__name__)

SurfaceKind = Literal['sinusoid', 'sum-of-sinusoids', 'stochastic']
PROFILE_HEADER = ('x_mm', 'height_um')


@dataclass(frozen=True)
class SurfaceSpec:
    """
    Receta de una superficie.

    components: (λ en mm, A en µm, fase en rad) para los tipos sinusoidales
    seed / correlation_length (mm) / rms_amplitude (µm): tipo estocástico
    """
    kind: SurfaceKind
    components: Tuple[Tuple[float, float, float], ...] = ()
    seed: int = 0
    correlation_length: float = 0.0
    rms_amplitude: float = 0.0

    @classmethod
    def sinusoid(cls, wavelength: float, amplitude: float) -> 'SurfaceSpec':
        return cls('sinusoid', ((float(wavelength), float(amplitude), 0.0),))

    @classmethod
    def sum_of_sinusoids(cls, components: Sequence[Sequence[float]]) -> 'SurfaceSpec':
        parts = []
        for component in components:
            wavelength, amplitude, *rest = component
            parts.append((float(wavelength), float(amplitude), float(rest[0]) if rest else 0.0))
        return cls('sum-of-sinusoids', tuple(parts))

    @classmethod
    def stochastic(cls, seed: int, correlation_length: float,
                   rms_amplitude: float) -> 'SurfaceSpec':
        return cls('stochastic', (), int(seed), float(correlation_length), float(rms_amplitude))

    def validate(self):
        """Rechaza longitudes de onda no positivas y amplitudes negativas"""
        if self.kind in ('sinusoid', 'sum-of-sinusoids'):
            if not self.components:
                raise InvalidSpecError("Una superficie sinusoidal necesita componentes")
            if self.kind == 'sinusoid' and len(self.components) != 1:
                raise InvalidSpecError("El tipo 'sinusoid' admite una sola componente")
            for wavelength, amplitude, _ in self.components:
                if not wavelength > 0:
                    raise InvalidSpecError(f"Longitud de onda no positiva: {wavelength}")
                if amplitude < 0:
                    raise InvalidSpecError(f"Amplitud negativa: {amplitude}")
        elif self.kind == 'stochastic':
            if not self.correlation_length > 0:
                raise InvalidSpecError("La longitud de correlación debe ser positiva")
            if self.rms_amplitude < 0:
                raise InvalidSpecError("La amplitud RMS no puede ser negativa")
        else:
            raise InvalidSpecError(f"Tipo de superficie desconocido: {self.kind!r}")

    @property
    def wavelength(self) -> Optional[float]:
        """Longitud de onda principal (la de mayor amplitud)"""
        if not self.components:
            return None
        return max(self.components, key=lambda c: c[1])[0]

    @property
    def amplitude(self) -> Optional[float]:
        if not self.components:
            return self.rms_amplitude
        return max(c[1] for c in self.components)

    def describe(self) -> Dict[str, object]:
        """Parámetros planos para cabeceras de procedencia"""
        if self.kind == 'stochastic':
            return {'kind': self.kind, 'seed': self.seed,
                    'correlation_length_mm': self.correlation_length,
                    'rms_amplitude_um': self.rms_amplitude}
        return {'kind': self.kind,
                'components': ';'.join(f"{l}:{a}:{p}" for l, a, p in self.components)}


def surface_height(spec: SurfaceSpec, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Altura analítica h(x) en µm de una superficie sinusoidal.

    Los tipos estocásticos solo existen muestreados: usar generate_surface.
    """
    spec.validate()
    if spec.kind == 'stochastic':
        raise InvalidSpecError("Las superficies estocásticas no tienen forma analítica")
    x = np.asarray(x, dtype=float)
    heights = np.zeros_like(x)
    for wavelength, amplitude, phase in spec.components:
        heights = heights + amplitude * np.sin(2.0 * np.pi * x / wavelength + phase)
    return float(heights) if heights.ndim == 0 else heights


def generate_surface(
    spec: SurfaceSpec,
    length: float,
    resolution: float = Config.DEFAULT_RESOLUTION,
) -> SurfaceProfile:
    """
    Muestrea la superficie sobre [0, length] mm.

    Determinista: el tipo estocástico usa su semilla.
    """
    spec.validate()
    if not length > 0:
        raise InvalidSpecError(f"La longitud debe ser positiva: {length}")
    if resolution < Config.MIN_RESOLUTION:
        raise InvalidSpecError(
            f"Resolución {resolution} muestras/mm por debajo del mínimo {Config.MIN_RESOLUTION}"
        )
    n = int(round(length * resolution))
    if n < 2:
        raise InvalidSpecError("La superficie tendría menos de 2 muestras")

    x = np.linspace(0.0, length, n)
    if spec.kind == 'stochastic':
        heights = _stochastic_heights(spec, n, length / (n - 1))
    else:
        heights = surface_height(spec, x)

    smallest = min((c[0] for c in spec.components), default=None)
    if smallest is not None and smallest * resolution < 12:
        logger.warning("Solo %.1f muestras por longitud de onda (λ=%s mm)",
                       smallest * resolution, smallest)
    return SurfaceProfile(length=float(length), resolution=float(resolution), heights=heights)


def _stochastic_heights(spec: SurfaceSpec, n: int, spacing: float) -> np.ndarray:
    # Ruido blanco gaussiano suavizado por media móvil y reescalado al RMS pedido
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal(n)
    width = max(1, int(round(spec.correlation_length / spacing)))
    smoothed = ndimage.uniform_filter1d(noise, size=width, mode='reflect')
    smoothed = smoothed - smoothed.mean()
    rms = float(np.sqrt(np.mean(smoothed ** 2)))
    if rms == 0.0:
        return np.zeros(n)
    return smoothed * (spec.rms_amplitude / rms)


def sample_height(profile: SurfaceProfile, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Interpolación lineal de la altura (µm) en x mm; exacta en las muestras"""
    x = np.asarray(x, dtype=float)
    tolerance = 1e-12 * max(1.0, profile.length)
    if np.any(x < -tolerance) or np.any(x > profile.length + tolerance):
        raise DataError(f"x fuera de [0, {profile.length}] mm")
    heights = np.interp(x, profile.x, profile.heights)
    return float(heights) if heights.ndim == 0 else heights


def roughness(profile: SurfaceProfile) -> RoughnessMetrics:
    """
    Ra = media de |h - media|, Rt = max - min, Rp = max - media.
    """
    heights = profile.heights
    if heights.size == 0:
        raise DataError("Perfil vacío")
    mean = float(np.mean(heights))
    return RoughnessMetrics(
        ra=float(np.mean(np.abs(heights - mean))),
        rt=float(np.max(heights) - np.min(heights)),
        rp=float(np.max(heights) - mean),
    )


def save_profile_csv(profile: SurfaceProfile, path, comments: Optional[Dict[str, object]] = None):
    rows = zip(profile.x.tolist(), profile.heights.tolist())
    write_csv(path, PROFILE_HEADER, rows, comments)


def load_profile_csv(path) -> SurfaceProfile:
    table = read_csv(path)
    if tuple(table.header) != PROFILE_HEADER:
        raise DataError(f"{path}: cabecera inesperada {table.header}")
    x = np.array(table.column('x_mm'), dtype=float)
    heights = np.array(table.column('height_um'), dtype=float)
    if x.size < 2:
        raise DataError(f"{path}: perfil con menos de 2 muestras")
    length = float(x[-1] - x[0])
    return SurfaceProfile(length=length, resolution=x.size / length, heights=heights)


@dataclass(frozen=True)
class MaterialSample:
    """Muestra física caracterizada por microscopía confocal"""
    material_id: str
    material: str
    description: str
    roughness: RoughnessMetrics


_MATERIALS = (
    ('aluminum', 'Aluminum', 'Un-etched', 0.795, 9.37, 3.68),
    ('wood', 'Wood', 'Un-etched', 5.74, 45.3, 14.6),
    ('acrylic-lines-1.3', 'Acrylic', 'Lines, 1.3 mm', 7.04, 110.0, 18.7),
    ('acrylic-lines-0.5', 'Acrylic', 'Lines, 0.5 mm', 10.9, 71.6, 31.1),
    ('acrylic-crosshatch', 'Acrylic', 'Cross-hatched', 15.3, 264.0, 52.6),
    ('wood-etched', 'Wood', 'Roughly-etched', 23.8, 180.0, 51.5),
)


def material_catalog() -> Dict[str, MaterialSample]:
    """Las seis muestras de material registradas (Ra/Rt/Rp medidos)"""
    return {
        material_id: MaterialSample(material_id, material, description,
                                    RoughnessMetrics(ra=ra, rt=rt, rp=rp))
        for material_id, material, description, ra, rt, rp in _MATERIALS
    }
