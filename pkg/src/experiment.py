"""
Configuración declarativa de experimentos (TOML) y presets de barrido
"""
import hashlib
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import (
    CvPlan, ElastomerStack, KnnConfig, MagnetModel, MagnetometerLayout, PipelineParams,
    ScanConfig, SuspensionModel, Config,
)
from .errors import ConfigError
from .learn import NORMALIZE_MODES
from .surface import SurfaceSpec
from .tips import TipGeometry, make_tip

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 'tactil-out/v1'
DEFAULT_DESIGNS = ('flat', 'flat-ridged')

# Barridos de simulación: longitudes de onda (mm), amplitudes (µm), velocidades (mm/s)
SWEEP_PRESETS: Dict[str, Dict[str, Any]] = {
    'initial-survey': {
        'wavelengths': (0.06, 0.24, 0.30, 0.60, 5.98),
        'amplitudes': (10.0, 25.0, 50.0, 100.0),
        'velocities': (25.0, 50.0, 100.0),
        'label_by': 'wavelength',
    },
    'wavelength-sweep': {
        'wavelengths': (0.27, 0.33, 0.36, 0.39, 0.42, 0.45, 0.48, 0.51, 0.54, 0.57),
        'amplitudes': (10.0, 25.0, 50.0),
        'velocities': (25.0, 50.0, 100.0),
        'label_by': 'wavelength',
    },
    'amplitude-sweep': {
        'wavelengths': (0.24, 0.30, 0.60),
        'amplitudes': (15.0, 20.0, 30.0, 35.0, 40.0, 45.0),
        'velocities': (25.0, 50.0, 100.0),
        'label_by': 'amplitude',
    },
}


@dataclass(frozen=True)
class DesignConfig:
    """Un diseño de sensor: punta, elastómero, imán y magnetómetro"""
    name: str
    tip: TipGeometry
    stack: ElastomerStack = ElastomerStack()
    magnet: MagnetModel = MagnetModel()
    layout: MagnetometerLayout = MagnetometerLayout()
    model: SuspensionModel = SuspensionModel()

    def describe(self) -> Dict[str, Any]:
        return {'name': self.name, 'tip': self.tip.describe(), 'stack': asdict(self.stack),
                'magnet': asdict(self.magnet), 'layout': asdict(self.layout),
                'model': asdict(self.model)}


@dataclass(frozen=True)
class SurfaceEntry:
    """Superficie con identificador y etiqueta de clase"""
    surface_id: str
    spec: SurfaceSpec
    label: str


@dataclass(frozen=True)
class ScanGrid:
    """
    Rejilla de barridos y parámetros comunes.

    max_start_offset: mm; cada corrida arranca en un desfase sembrado en
    [0, max_start_offset) para que las repeticiones difieran
    margin: mm sobrantes al final de la superficie
    """
    velocities: Tuple[float, ...] = (25.0, 50.0, 100.0)
    directions: Tuple[str, ...] = ('+x',)
    repetitions: int = 3
    preload_depth: float = Config.PRELOAD_DEPTH
    duration: float = Config.SCAN_DURATION
    sim_rate: float = Config.SIM_RATE
    output_rate: float = Config.OUTPUT_RATE
    max_start_offset: float = 1.0
    resolution: float = Config.DEFAULT_RESOLUTION
    margin: float = 0.5

    def validate(self):
        if any(not v > 0 for v in self.velocities):
            raise ConfigError("las velocidades deben ser > 0", 'scan.velocities')
        for direction in self.directions:
            if direction not in ('+x', '-x'):
                raise ConfigError(f"dirección desconocida {direction!r}", 'scan.directions')
        if self.repetitions < 0:
            raise ConfigError("repetitions debe ser >= 0", 'scan.repetitions')
        if self.max_start_offset < 0 or self.margin < 0:
            raise ConfigError("max_start_offset y margin deben ser >= 0", 'scan')
        if self.resolution < Config.MIN_RESOLUTION:
            raise ConfigError(f"resolution debe ser >= {Config.MIN_RESOLUTION}", 'scan.resolution')
        ScanConfig(velocity=1.0, preload_depth=self.preload_depth, duration=self.duration,
                   sim_rate=self.sim_rate, output_rate=self.output_rate).validate()


@dataclass(frozen=True)
class RunSpec:
    """Una corrida del barrido cartesiano"""
    design: DesignConfig
    surface: SurfaceEntry
    velocity: float
    direction: str
    repetition: int
    start_offset: float

    @property
    def run_id(self) -> str:
        direction = 'px' if self.direction == '+x' else 'nx'
        return (f"{self.design.name}__{self.surface.surface_id}__v{self.velocity:g}"
                f"__{direction}__r{self.repetition}")

    def meta(self) -> Dict[str, Any]:
        return {'run_id': self.run_id, 'design': self.design.name, 'label': self.surface.label,
                'velocity': self.velocity, 'direction': self.direction,
                'repetition': self.repetition, 'trial': 1}


@dataclass(frozen=True)
class ExperimentConfig:
    """Experimento completo; la semilla es obligatoria"""
    name: str
    seed: int
    designs: Tuple[DesignConfig, ...]
    surfaces: Tuple[SurfaceEntry, ...]
    grid: ScanGrid = ScanGrid()
    pipeline: PipelineParams = PipelineParams()
    knn: KnnConfig = KnnConfig()
    cv: CvPlan = CvPlan()
    normalize_mode: str = 'fold'
    alpha: float = Config.ALPHA
    show_outliers: bool = True
    out_dir: Path = Path('out')
    manifest: Optional[Path] = None

    def validate(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("la semilla debe ser un entero >= 0", 'seed')
        names = [d.name for d in self.designs]
        if len(set(names)) != len(names):
            raise ConfigError("nombres de diseño repetidos", 'designs')
        ids = [s.surface_id for s in self.surfaces]
        if len(set(ids)) != len(ids):
            raise ConfigError("identificadores de superficie repetidos", 'surfaces')
        self.grid.validate()
        self.pipeline.validate()
        self.knn.validate()
        self.cv.validate()
        if self.normalize_mode not in NORMALIZE_MODES:
            raise ConfigError(f"modo desconocido {self.normalize_mode!r}", 'cv.normalize')
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha debe estar en (0, 1)", 'stats.alpha')

    def surface_length(self) -> float:
        """Longitud común de todas las superficies (mm)"""
        widths = [d.tip.patch_width(self.grid.preload_depth) for d in self.designs] or [0.0]
        fastest = max(self.grid.velocities, default=0.0)
        return (self.grid.max_start_offset + fastest * self.grid.duration + max(widths)
                + self.grid.margin)

    def start_offset(self, i_surface: int, i_velocity: int, i_direction: int,
                     repetition: int) -> float:
        """
        Desfase sembrado por (superficie, velocidad, dirección, repetición);
        todos los diseños comparten el mismo desfase en una misma corrida.
        """
        sequence = np.random.SeedSequence([self.seed, i_surface, i_velocity, i_direction,
                                           repetition])
        return float(np.random.default_rng(sequence).random()) * self.grid.max_start_offset

    def runs(self) -> List[RunSpec]:
        """Producto cartesiano diseño × superficie × velocidad × dirección × repetición"""
        runs = []
        for design in self.designs:
            for i_surface, surface in enumerate(self.surfaces):
                for i_velocity, velocity in enumerate(self.grid.velocities):
                    for i_direction, direction in enumerate(self.grid.directions):
                        for repetition in range(1, self.grid.repetitions + 1):
                            offset = self.start_offset(i_surface, i_velocity, i_direction,
                                                       repetition)
                            runs.append(RunSpec(design, surface, float(velocity), direction,
                                                repetition, offset))
        return runs

    def scan_for(self, run: RunSpec) -> ScanConfig:
        return ScanConfig(
            velocity=run.velocity,
            direction=run.direction,
            preload_depth=self.grid.preload_depth,
            duration=self.grid.duration,
            sim_rate=self.grid.sim_rate,
            output_rate=self.grid.output_rate,
            start_offset=run.start_offset,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Representación canónica (sin el directorio de salida)"""
        return {
            'name': self.name,
            'seed': self.seed,
            'designs': [d.describe() for d in self.designs],
            'surfaces': [{'id': s.surface_id, 'label': s.label, **s.spec.describe()}
                         for s in self.surfaces],
            'grid': asdict(self.grid),
            'pipeline': asdict(self.pipeline),
            'knn': asdict(self.knn),
            'cv': asdict(self.cv),
            'normalize_mode': self.normalize_mode,
            'alpha': self.alpha,
            'show_outliers': self.show_outliers,
            'manifest': str(self.manifest) if self.manifest else None,
        }

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:12]

    def provenance(self) -> Dict[str, Any]:
        """Comentarios de cabecera comunes a todos los archivos de salida"""
        return {'output_schema': SCHEMA_VERSION, 'config_hash': self.config_hash,
                'seed': self.seed}


def sweep_surfaces(wavelengths: Sequence[float], amplitudes: Sequence[float],
                   label_by: str = 'wavelength') -> Tuple[SurfaceEntry, ...]:
    """Una superficie sinusoidal por combinación (λ, A)"""
    if label_by not in ('wavelength', 'amplitude'):
        raise ConfigError(f"label_by desconocido {label_by!r}", 'surface_grid.label_by')
    entries = []
    for wavelength in wavelengths:
        for amplitude in amplitudes:
            label = f"{wavelength:g}" if label_by == 'wavelength' else f"{amplitude:g}"
            entries.append(SurfaceEntry(f"sin-l{wavelength:g}-a{amplitude:g}",
                                        SurfaceSpec.sinusoid(wavelength, amplitude), label))
    return tuple(entries)


def default_designs(names: Sequence[str] = DEFAULT_DESIGNS) -> Tuple[DesignConfig, ...]:
    return tuple(DesignConfig(name, make_tip(name)) for name in names)


def preset_experiment(name: str, seed: int = 0, out_dir: Path = Path('out')) -> ExperimentConfig:
    """Barridos de simulación con nombre y los diseños plano y plano con crestas"""
    if name not in SWEEP_PRESETS:
        raise ConfigError(f"preset desconocido {name!r}; opciones: {sorted(SWEEP_PRESETS)}",
                          'preset')
    table = SWEEP_PRESETS[name]
    experiment = ExperimentConfig(
        name=name,
        seed=seed,
        designs=default_designs(),
        surfaces=sweep_surfaces(table['wavelengths'], table['amplitudes'], table['label_by']),
        grid=ScanGrid(velocities=table['velocities']),
        out_dir=Path(out_dir),
    )
    experiment.validate()
    return experiment


def _join(prefix: str, key: Optional[str]) -> Optional[str]:
    if not key:
        return prefix or None
    return f"{prefix}.{key}" if prefix else key


def _rebase(exc: ConfigError, prefix: str, owner: Optional[str] = None) -> ConfigError:
    """Antepone prefix a la ruta de la clave; owner sustituye el primer componente"""
    key = exc.key_path
    if owner is not None and key:
        key = owner + key[key.find('.'):] if '.' in key else owner
    return ConfigError(exc.detail, _join(prefix, key))


def _table(document: Mapping[str, Any], key: str, path: str) -> Dict[str, Any]:
    value = document.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError("se esperaba una tabla", _join(path, key))
    return dict(value)


def _build(cls, table: Mapping[str, Any], path: str, tuples: Sequence[str] = ()):
    """Instancia un dataclass de parámetros rechazando claves desconocidas"""
    allowed = {f.name for f in fields(cls)}
    for key in table:
        if key not in allowed:
            raise ConfigError("clave desconocida", _join(path, key))
    values = {k: tuple(v) if k in tuples else v for k, v in table.items()}
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"valor inválido ({exc})", path) from None


def _validated(item, prefix: str, owner: str):
    try:
        item.validate()
    except ConfigError as exc:
        raise _rebase(exc, prefix, owner) from None
    return item


def _parse_design(table: Mapping[str, Any], path: str) -> DesignConfig:
    if 'name' not in table:
        raise ConfigError("falta la clave 'name'", path)
    tip_table = _table(table, 'tip', path)
    kind = tip_table.pop('kind', table['name'])
    try:
        tip = make_tip(str(kind), **tip_table)
    except ConfigError as exc:
        raise _rebase(exc, path, 'tip') from None
    for key in table:
        if key not in ('name', 'tip', 'stack', 'magnet', 'layout', 'model'):
            raise ConfigError("clave desconocida", _join(path, key))

    magnet = _validated(_build(MagnetModel, _table(table, 'magnet', path), f"{path}.magnet",
                               ('axis',)), path, 'magnet')
    layout = _build(MagnetometerLayout, _table(table, 'layout', path), f"{path}.layout",
                    ('position',))
    try:
        layout.validate(magnet)
    except ConfigError as exc:
        raise _rebase(exc, path, 'layout') from None
    return DesignConfig(
        name=str(table['name']),
        tip=tip,
        stack=_validated(_build(ElastomerStack, _table(table, 'stack', path), f"{path}.stack"),
                         path, 'stack'),
        magnet=magnet,
        layout=layout,
        model=_validated(_build(SuspensionModel, _table(table, 'model', path), f"{path}.model"),
                         path, 'model'),
    )


def _parse_surface(table: Mapping[str, Any], path: str) -> SurfaceEntry:
    try:
        surface_id = str(table['id'])
        kind = table.get('kind', 'sinusoid')
        if kind == 'sinusoid':
            spec = SurfaceSpec.sinusoid(table['wavelength'], table['amplitude'])
            default_label = f"{float(table['wavelength']):g}"
        elif kind == 'sum-of-sinusoids':
            spec = SurfaceSpec.sum_of_sinusoids(table['components'])
            default_label = surface_id
        elif kind == 'stochastic':
            spec = SurfaceSpec.stochastic(table['seed'], table['correlation_length'],
                                          table['rms_amplitude'])
            default_label = surface_id
        else:
            raise ConfigError(f"tipo desconocido {kind!r}", _join(path, 'kind'))
    except KeyError as exc:
        raise ConfigError(f"falta la clave {exc.args[0]!r}", path) from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"valor inválido ({exc})", path) from None
    try:
        spec.validate()
    except ConfigError as exc:
        raise ConfigError(exc.detail, path) from None
    return SurfaceEntry(surface_id, spec, str(table.get('label', default_label)))


def parse_experiment(
    document: Mapping[str, Any],
    base_dir: Path = Path('.'),
    seed: Optional[int] = None,
    out_dir: Optional[Path] = None,
) -> ExperimentConfig:
    """
    Construye el experimento desde un documento TOML ya leído.

    Un 'preset' de nivel superior aporta superficies y velocidades; las
    tablas presentes en el documento lo sobrescriben.
    """
    known = {'name', 'seed', 'preset', 'out_dir', 'designs', 'surfaces', 'surface_grid', 'scan',
             'pipeline', 'knn', 'cv', 'stats', 'plots', 'ingest'}
    for key in document:
        if key not in known:
            raise ConfigError("clave desconocida", key)

    if seed is None:
        if 'seed' not in document:
            raise ConfigError("la semilla es obligatoria", 'seed')
        seed = document['seed']
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("la semilla debe ser un entero", 'seed')

    preset_name = document.get('preset')
    base = (preset_experiment(preset_name, seed) if preset_name
            else ExperimentConfig(name='experiment', seed=seed, designs=default_designs(),
                                  surfaces=()))

    designs = base.designs
    if 'designs' in document:
        if not isinstance(document['designs'], list):
            raise ConfigError("se esperaba una lista de tablas", 'designs')
        designs = tuple(_parse_design(t, f"designs[{i}]")
                        for i, t in enumerate(document['designs']))

    surfaces = base.surfaces
    if 'surface_grid' in document:
        grid_table = _table(document, 'surface_grid', '')
        try:
            surfaces = sweep_surfaces(grid_table['wavelengths'], grid_table['amplitudes'],
                                      grid_table.get('label_by', 'wavelength'))
        except KeyError as exc:
            raise ConfigError(f"falta la clave {exc.args[0]!r}", 'surface_grid') from None
        for i, entry in enumerate(surfaces):
            try:
                entry.spec.validate()
            except ConfigError as exc:
                raise ConfigError(exc.detail, f"surface_grid[{i}]") from None
    if 'surfaces' in document:
        surfaces = surfaces + tuple(_parse_surface(t, f"surfaces[{i}]")
                                    for i, t in enumerate(document['surfaces']))

    scan_table = _table(document, 'scan', '')
    grid = base.grid if not scan_table else _build(
        ScanGrid, {**asdict(base.grid), **scan_table}, 'scan', ('velocities', 'directions'))

    cv_table = _table(document, 'cv', '')
    normalize_mode = cv_table.pop('normalize', base.normalize_mode)
    cv_preset = cv_table.pop('preset', None)
    cv = CvPlan.preset(cv_preset, seed) if cv_preset else CvPlan(seed=seed)
    if cv_table:
        cv = _build(CvPlan, {**asdict(cv), **cv_table}, 'cv')

    stats_table = _table(document, 'stats', '')
    plots_table = _table(document, 'plots', '')
    ingest_table = _table(document, 'ingest', '')
    manifest = ingest_table.get('manifest')

    if out_dir is None:
        out_dir = Path(document.get('out_dir', 'out'))
        if not out_dir.is_absolute():
            out_dir = base_dir / out_dir

    experiment = ExperimentConfig(
        name=str(document.get('name', base.name)),
        seed=seed,
        designs=designs,
        surfaces=surfaces,
        grid=grid,
        pipeline=_build(PipelineParams, _table(document, 'pipeline', ''), 'pipeline'),
        knn=_build(KnnConfig, _table(document, 'knn', ''), 'knn'),
        cv=cv,
        normalize_mode=str(normalize_mode),
        alpha=float(stats_table.get('alpha', base.alpha)),
        show_outliers=bool(plots_table.get('show_outliers', base.show_outliers)),
        out_dir=Path(out_dir),
        manifest=(base_dir / manifest) if manifest else None,
    )
    experiment.validate()
    return experiment


def load_experiment(path, seed: Optional[int] = None,
                    out_dir: Optional[Path] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        document = tomllib.loads(path.read_text(encoding='utf-8'))
    except OSError as exc:
        raise ConfigError(f"No se pudo leer {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML inválido en {path}: {exc}") from exc
    return parse_experiment(document, path.parent, seed, out_dir)
