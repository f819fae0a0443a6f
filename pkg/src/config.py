"""
Configuración global del sistema

Config reúne todas las constantes del modelo (nada queda escondido en el
código) y los parámetros por defecto del pipeline. Los registros de
parámetros toman sus valores por defecto de Config.
"""
import math
from dataclasses import dataclass
from typing import ClassVar, Dict, Literal, Tuple

from .errors import ConfigError

PSI_TO_PA: float = 6894.757293168
MU0: float = 4e-7 * math.pi

Direction = Literal['+x', '-x']


class Config:
    """Configuración centralizada del modelo y del pipeline"""

    # Superficies
    DEFAULT_RESOLUTION: float = 200.0      # muestras/mm
    MIN_RESOLUTION: float = 50.0

    # Punta y elastómero (geometría del sensor)
    CONTACT_WIDTH: float = 4.0             # mm
    RIDGE_DEPTH: float = 80.0              # µm
    RIDGE_WIDTH: float = 400.0             # µm
    RIDGE_WAVELENGTH: float = 600.0        # µm
    SPHERE_RADIUS: float = 10.0            # mm
    MAX_TILT: float = 100.0                # mrad
    EPIDERMIS_THICKNESS: float = 2.0       # mm
    DERMIS_THICKNESS: float = 3.0          # mm
    EPIDERMIS_MODULUS: float = 96.0        # psi (Mold Star 30)
    DERMIS_MODULUS: float = 8.0            # psi (Ecoflex 00-10)

    # Modelo concentrado (sustituye al FEM)
    SHAPE_FACTOR: float = 4.0
    K_X_RATIO: float = 1.0 / 3.0
    DAMPING_RATIO: float = 0.1
    FRICTION_COEFFICIENT: float = 0.5
    MASS_PARTICIPATION: float = 0.3
    LOAD_SHARING: float = 0.1              # fracción de la carga que reparten las mesetas
    MAGNET_DENSITY: float = 7500.0         # kg/m³ (N50)

    # Barrido
    PRELOAD_DEPTH: float = 50.0            # µm
    SCAN_DURATION: float = 1.5             # s
    SIM_RATE: float = 20000.0              # Hz
    OUTPUT_RATE: float = 5000.0            # Hz
    MIN_OUTPUT_RATE: float = 5000.0

    # Imán y magnetómetro
    MAGNET_EDGE: float = 2.0               # mm
    REMANENCE: float = 1.43                # T
    SENSOR_OFFSET: float = 3.0             # mm por debajo del centro del imán
    CONVERSION: float = 1.0                # µT/LSB
    RESOLUTION_BITS: int = 17
    MIN_SENSOR_DISTANCE: float = 0.5       # mm

    # Pipeline de características
    TARGET_RATE: float = 330.0             # Hz
    HIGHPASS_CUTOFF: float = 2.0           # Hz
    FILTER_ORDER: int = 4
    ANTIALIAS_FRACTION: float = 0.45
    PEAK_PROMINENCE: float = 2.0           # LSB
    MAX_PEAKS: int = 20
    ZERO_TOLERANCE: float = 1e-9
    MIN_FEATURE_DURATION: float = 1.0      # s

    # Clasificación
    KNN_K: int = 5
    CV_FOLDS: int = 5
    CV_REPEATS: int = 10
    ALPHA: float = 0.05

    # Adquisición
    EMA_ALPHA: float = 0.12
    CONTACT_THRESHOLD: float = 10.0        # LSB
    BASELINE_SAMPLES: int = 50
    MIN_PASS_TRAVEL: float = 1.0           # mm
    MIN_PASS_DURATION: float = 0.2         # s
    VELOCITY_TOLERANCE: float = 0.20
    MAX_MALFORMED_FRACTION: float = 0.01
    EXPERIMENT_VELOCITIES: Tuple[float, ...] = (25.0, 50.0, 100.0, 150.0)

    @classmethod
    def validate(cls):
        """Valida que la configuración sea coherente"""
        if cls.MIN_RESOLUTION <= 0 or cls.DEFAULT_RESOLUTION < cls.MIN_RESOLUTION:
            raise ConfigError("La resolución por defecto debe ser >= la mínima")

        if cls.SIM_RATE < 4 * cls.OUTPUT_RATE:
            raise ConfigError("SIM_RATE debe ser al menos 4 veces OUTPUT_RATE")

        if cls.OUTPUT_RATE < cls.MIN_OUTPUT_RATE:
            raise ConfigError(f"OUTPUT_RATE debe ser >= {cls.MIN_OUTPUT_RATE} Hz")

        if not 0 < cls.EMA_ALPHA <= 1:
            raise ConfigError("EMA_ALPHA debe estar en (0, 1]")

        if cls.HIGHPASS_CUTOFF >= cls.TARGET_RATE / 2:
            raise ConfigError("El corte del paso alto debe ser menor que Nyquist")

        if any([
            cls.KNN_K < 1,
            cls.CV_FOLDS < 2,
            cls.CV_REPEATS < 1,
            cls.MAX_PEAKS < 0,
        ]):
            raise ConfigError("Parámetros de clasificación inválidos")

        if cls.RIDGE_WAVELENGTH <= cls.RIDGE_WIDTH or cls.RIDGE_WIDTH <= 0:
            raise ConfigError("Se requiere RIDGE_WAVELENGTH > RIDGE_WIDTH > 0")


def _require_positive(owner: str, **values: float):
    for name, value in values.items():
        if not value > 0:
            raise ConfigError(f"debe ser > 0 (recibido {value!r})", f"{owner}.{name}")


@dataclass(frozen=True)
class ElastomerStack:
    """
    Capas de elastómero que suspenden el imán.

    epidermis_thickness / dermis_thickness: mm
    epidermis_modulus / dermis_modulus: psi
    """
    epidermis_thickness: float = Config.EPIDERMIS_THICKNESS
    dermis_thickness: float = Config.DERMIS_THICKNESS
    epidermis_modulus: float = Config.EPIDERMIS_MODULUS
    dermis_modulus: float = Config.DERMIS_MODULUS

    def validate(self):
        _require_positive(
            'stack',
            epidermis_thickness=self.epidermis_thickness,
            dermis_thickness=self.dermis_thickness,
            epidermis_modulus=self.epidermis_modulus,
            dermis_modulus=self.dermis_modulus,
        )

    @property
    def total_thickness(self) -> float:
        return self.epidermis_thickness + self.dermis_thickness


@dataclass(frozen=True)
class SuspensionModel:
    """Constantes declaradas del modelo concentrado de 3 grados de libertad"""
    shape_factor: float = Config.SHAPE_FACTOR
    k_x_ratio: float = Config.K_X_RATIO
    damping_ratio: float = Config.DAMPING_RATIO
    friction_coefficient: float = Config.FRICTION_COEFFICIENT
    mass_participation: float = Config.MASS_PARTICIPATION
    load_sharing: float = Config.LOAD_SHARING
    magnet_density: float = Config.MAGNET_DENSITY

    def validate(self):
        _require_positive(
            'model',
            shape_factor=self.shape_factor,
            k_x_ratio=self.k_x_ratio,
            damping_ratio=self.damping_ratio,
            magnet_density=self.magnet_density,
        )
        if self.friction_coefficient < 0 or self.mass_participation < 0:
            raise ConfigError("fricción y participación de masa deben ser >= 0", 'model')
        if not 0 <= self.load_sharing <= 1:
            raise ConfigError("load_sharing debe estar en [0, 1]", 'model.load_sharing')


@dataclass(frozen=True)
class ScanConfig:
    """
    Barrido a velocidad constante.

    velocity: mm/s
    direction: '+x' o '-x'
    preload_depth: µm de indentación estática
    duration: s
    sim_rate / output_rate: Hz
    start_offset: mm desplazados desde el borde de inicio
    """
    velocity: float
    direction: Direction = '+x'
    preload_depth: float = Config.PRELOAD_DEPTH
    duration: float = Config.SCAN_DURATION
    sim_rate: float = Config.SIM_RATE
    output_rate: float = Config.OUTPUT_RATE
    start_offset: float = 0.0

    def validate(self):
        _require_positive('scan', velocity=self.velocity, duration=self.duration,
                          output_rate=self.output_rate)
        if self.direction not in ('+x', '-x'):
            raise ConfigError(f"dirección desconocida {self.direction!r}", 'scan.direction')
        if self.preload_depth < 0 or self.start_offset < 0:
            raise ConfigError("preload_depth y start_offset deben ser >= 0", 'scan')
        if self.sim_rate < 4 * self.output_rate:
            raise ConfigError("sim_rate debe ser >= 4 × output_rate", 'scan.sim_rate')
        if self.output_rate < Config.MIN_OUTPUT_RATE:
            raise ConfigError(f"output_rate debe ser >= {Config.MIN_OUTPUT_RATE} Hz",
                              'scan.output_rate')
        ratio = self.sim_rate / self.output_rate
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("sim_rate debe ser múltiplo entero de output_rate",
                              'scan.sim_rate')

    @property
    def travel(self) -> float:
        """Recorrido total en mm"""
        return self.velocity * self.duration

    @property
    def sign(self) -> float:
        return 1.0 if self.direction == '+x' else -1.0


@dataclass(frozen=True)
class MagnetModel:
    """
    Imán cúbico modelado como dipolo puntual.

    edge: mm
    remanence: T
    axis: orientación de reposo (unitaria)
    """
    edge: float = Config.MAGNET_EDGE
    remanence: float = Config.REMANENCE
    axis: Tuple[float, float, float] = (0.0, 0.0, 1.0)

    def validate(self):
        _require_positive('magnet', edge=self.edge, remanence=self.remanence)
        norm = math.sqrt(sum(a * a for a in self.axis))
        if abs(norm - 1.0) > 1e-9:
            raise ConfigError("el eje debe ser unitario", 'magnet.axis')

    @property
    def volume(self) -> float:
        """Volumen en m³"""
        return (self.edge * 1e-3) ** 3

    @property
    def moment(self) -> float:
        """Momento dipolar en A·m²"""
        return self.remanence * self.volume / MU0


@dataclass(frozen=True)
class MagnetometerLayout:
    """
    Posición del chip respecto al centro del imán en reposo.

    position: mm (x, y, z)
    conversion: µT/LSB
    resolution_bits: cota de saturación ±(2^bits - 1)
    """
    position: Tuple[float, float, float] = (0.0, 0.0, -Config.SENSOR_OFFSET)
    conversion: float = Config.CONVERSION
    resolution_bits: int = Config.RESOLUTION_BITS

    def validate(self, magnet: MagnetModel = MagnetModel()):
        _require_positive('layout', conversion=self.conversion,
                          resolution_bits=self.resolution_bits)
        distance = math.sqrt(sum(p * p for p in self.position))
        if distance <= magnet.edge / 2:
            raise ConfigError("el sensor queda dentro del imán", 'layout.position')

    @property
    def count_bound(self) -> int:
        return 2 ** int(self.resolution_bits) - 1


@dataclass(frozen=True)
class PipelineParams:
    """Parámetros del pipeline de extracción de características"""
    target_rate: float = Config.TARGET_RATE
    highpass_cutoff: float = Config.HIGHPASS_CUTOFF
    prominence: float = Config.PEAK_PROMINENCE
    max_peaks: int = Config.MAX_PEAKS
    filter_order: int = Config.FILTER_ORDER

    def validate(self):
        _require_positive('pipeline', target_rate=self.target_rate,
                          highpass_cutoff=self.highpass_cutoff,
                          filter_order=self.filter_order)
        if self.highpass_cutoff >= self.target_rate / 2:
            raise ConfigError("el corte debe ser menor que Nyquist", 'pipeline.highpass_cutoff')
        if self.prominence < 0 or self.max_peaks < 0:
            raise ConfigError("prominencia y máximo de picos deben ser >= 0", 'pipeline')


@dataclass(frozen=True)
class KnnConfig:
    """k vecinos más cercanos con distancia euclídea"""
    k: int = Config.KNN_K
    distance: str = 'euclidean'

    def validate(self, train_size: int = None):
        if self.k < 1:
            raise ConfigError("k debe ser >= 1", 'knn.k')
        if self.distance != 'euclidean':
            raise ConfigError(f"distancia no soportada {self.distance!r}", 'knn.distance')
        if train_size is not None and self.k > train_size:
            raise ConfigError(f"k={self.k} supera el tamaño de entrenamiento {train_size}",
                              'knn.k')


@dataclass(frozen=True)
class CvPlan:
    """Validación cruzada estratificada repetida"""
    folds: int = Config.CV_FOLDS
    repeats: int = Config.CV_REPEATS
    seed: int = 0

    PRESETS: ClassVar[Dict[str, Tuple[int, int]]] = {
        'power-analysis': (5, 10),
        'velocity-split': (5, 60),
    }

    @classmethod
    def preset(cls, name: str, seed: int = 0) -> 'CvPlan':
        """Planes con nombre: 50 y 300 modelos"""
        if name not in cls.PRESETS:
            raise ConfigError(f"plan desconocido {name!r}", 'cv.preset')
        folds, repeats = cls.PRESETS[name]
        return cls(folds=folds, repeats=repeats, seed=seed)

    def validate(self):
        if self.folds < 2:
            raise ConfigError("se requieren al menos 2 pliegues", 'cv.folds')
        if self.repeats < 1:
            raise ConfigError("se requiere al menos 1 repetición", 'cv.repeats')

    @property
    def model_count(self) -> int:
        return self.folds * self.repeats
