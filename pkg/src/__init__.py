"""
Paquete principal de simulación y clasificación de texturas táctiles
"""

from .config import (
    Config,
    CvPlan,
    ElastomerStack,
    KnnConfig,
    MagnetModel,
    MagnetometerLayout,
    PipelineParams,
    ScanConfig,
    SuspensionModel,
)
from .errors import ConfigError, DataError, TactilError
from .models import (
    FeatureVector,
    FieldSeries,
    LabeledDataset,
    MagnetTrajectory,
    PowerSpectrum,
    SurfaceProfile,
    UniformSeries,
)
from .surface import SurfaceSpec, generate_surface, roughness
from .tips import FlatTip, RidgedTip, SphericalRidgedTip, TipGeometry, make_tip
from .mechanics import simulate_scan
from .magnetics import trajectory_to_field
from .features import extract
from .learn import evaluate, knn_predict
from .experiment import ExperimentConfig, load_experiment, preset_experiment
from .simulation import Simulation

__version__ = '1.0.0'

__all__ = [
    'Config',
    'CvPlan',
    'ElastomerStack',
    'KnnConfig',
    'MagnetModel',
    'MagnetometerLayout',
    'PipelineParams',
    'ScanConfig',
    'SuspensionModel',
    'ConfigError',
    'DataError',
    'TactilError',
    'FeatureVector',
    'FieldSeries',
    'LabeledDataset',
    'MagnetTrajectory',
    'PowerSpectrum',
    'SurfaceProfile',
    'UniformSeries',
    'SurfaceSpec',
    'generate_surface',
    'roughness',
    'FlatTip',
    'RidgedTip',
    'SphericalRidgedTip',
    'TipGeometry',
    'make_tip',
    'simulate_scan',
    'trajectory_to_field',
    'extract',
    'evaluate',
    'knn_predict',
    'ExperimentConfig',
    'load_experiment',
    'preset_experiment',
    'Simulation',
]
