"""
Orquestación de los barridos de simulación
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

from .csvio import read_comments
from .errors import DataError
from .experiment import ExperimentConfig, RunSpec
from .magnetics import save_field_csv, trajectory_to_field
from .mechanics import save_trajectory_csv, simulate_scan
from .models import SurfaceProfile
from .surface import generate_surface

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunResult:
    """Resultado de una corrida: rutas escritas y si se reutilizó"""
    run_id: str
    design: str
    field_path: Path
    trajectory_path: Path
    skipped: bool = False
    saturated: int = 0


def run_paths(out_dir: Path, run: RunSpec) -> Dict[str, Path]:
    folder = Path(out_dir) / 'runs' / run.design.name
    return {
        'field': folder / f"{run.run_id}.field.csv",
        'trajectory': folder / f"{run.run_id}.trajectory.csv",
    }


def _is_current(path: Path, config_hash: str) -> bool:
    if not path.exists():
        return False
    try:
        return read_comments(path).get('config_hash') == config_hash
    except DataError:
        return False


def simulate_run(
    experiment: ExperimentConfig,
    run: RunSpec,
    profile: SurfaceProfile,
    force: bool = False,
) -> RunResult:
    """Mecánica + campo de una corrida, con escritura atómica de ambos CSV"""
    paths = run_paths(experiment.out_dir, run)
    config_hash = experiment.config_hash
    if not force and all(_is_current(p, config_hash) for p in paths.values()):
        return RunResult(run.run_id, run.design.name, paths['field'], paths['trajectory'],
                         skipped=True)

    design = run.design
    trajectory = simulate_scan(design.tip, design.stack, profile, experiment.scan_for(run),
                               design.magnet, design.model)
    series = trajectory_to_field(trajectory, design.magnet, design.layout, run.meta())

    comments = dict(experiment.provenance())
    comments.update(run_id=run.run_id, surface=run.surface.surface_id,
                    start_offset_mm=repr(run.start_offset))
    comments.update({f"surface.{k}": v for k, v in run.surface.spec.describe().items()})
    comments.update({f"tip.{k}": v for k, v in design.tip.describe().items()})
    save_trajectory_csv(trajectory, paths['trajectory'], comments)
    save_field_csv(series, paths['field'], comments)
    return RunResult(run.run_id, design.name, paths['field'], paths['trajectory'],
                     saturated=int(series.meta.get('saturated', 0)))


class Simulation:
    """
    Clase principal que orquesta el barrido cartesiano de simulaciones

    Genera cada superficie una sola vez, ejecuta las corridas (en paralelo
    si jobs > 1) y presenta un resumen
    """

    def __init__(self, experiment: ExperimentConfig, jobs: int = 1, force: bool = False):
        """
        Inicializa la simulación.

        Args:
            experiment: Experimento validado
            jobs: Procesos simultáneos
            force: Recalcular aunque existan salidas vigentes

        Raises:
            ConfigError: Si la configuración es inválida
        """
        experiment.validate()
        if jobs < 1:
            raise ValueError("jobs debe ser >= 1")
        self.experiment = experiment
        self.jobs = jobs
        self.force = force
        self.runs: List[RunSpec] = experiment.runs()
        self.results: List[RunResult] = []
        self._profiles: Dict[str, SurfaceProfile] = {}

    def profile_for(self, run: RunSpec) -> SurfaceProfile:
        """Perfil de superficie común a todos los diseños y velocidades"""
        key = run.surface.surface_id
        if key not in self._profiles:
            self._profiles[key] = generate_surface(run.surface.spec,
                                                   self.experiment.surface_length(),
                                                   self.experiment.grid.resolution)
        return self._profiles[key]

    def run(self, verbose: bool = True) -> List[RunResult]:
        """
        Ejecuta todas las corridas.

        Args:
            verbose: Si True, imprime el encabezado, el progreso y el resumen
        """
        if verbose:
            self._print_header()
        if not self.runs:
            logger.warning("La rejilla de barrido está vacía: no hay corridas")

        tasks = [(run, self.profile_for(run)) for run in self.runs]
        if self.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                futures = [pool.submit(simulate_run, self.experiment, run, profile, self.force)
                           for run, profile in tasks]
                results = [future.result() for future in futures]
        else:
            results = []
            for number, (run, profile) in enumerate(tasks, 1):
                results.append(simulate_run(self.experiment, run, profile, self.force))
                if verbose and number % 50 == 0:
                    print(f"Corrida {number:5d}/{len(tasks)}")

        self.results = results
        if verbose:
            self._print_results()
        return results

    def _print_header(self):
        """Imprime el encabezado del barrido"""
        grid = self.experiment.grid
        print("=" * 60)
        print(f"SIMULACIÓN DE BARRIDOS: {self.experiment.name}")
        print("=" * 60)
        print(f"Diseños: {', '.join(d.name for d in self.experiment.designs)}")
        print(f"Superficies: {len(self.experiment.surfaces)}")
        print(f"Velocidades (mm/s): {', '.join(f'{v:g}' for v in grid.velocities)}")
        print(f"Direcciones: {', '.join(grid.directions)} | Repeticiones: {grid.repetitions}")
        print(f"Corridas totales: {len(self.runs):,}")
        print(f"Semilla: {self.experiment.seed} | Hash de configuración: "
              f"{self.experiment.config_hash}")
        print("=" * 60)

    def _print_results(self):
        """Imprime el resumen de corridas ejecutadas y reutilizadas"""
        print("\n" + "=" * 60)
        print("RESULTADOS")
        print("=" * 60)
        computed = [r for r in self.results if not r.skipped]
        print(f"Corridas calculadas: {len(computed):,}")
        print(f"Corridas reutilizadas: {len(self.results) - len(computed):,}")
        saturated = sum(r.saturated for r in self.results)
        if saturated:
            print(f"Lecturas saturadas: {saturated:,}")
        by_design: Dict[str, int] = {}
        for result in self.results:
            by_design[result.design] = by_design.get(result.design, 0) + 1
        for design, count in by_design.items():
            print(f"  - {design}: {count} corridas")
        print(f"Salida: {Path(self.experiment.out_dir) / 'runs'}")
        print("=" * 60)


def field_files(directory: Path) -> List[Path]:
    """CSV de campo bajo directory (recursivo), en orden estable"""
    return sorted(Path(directory).rglob('*.field.csv'))


def current_field_files(experiment: ExperimentConfig) -> Tuple[List[Path], int]:
    """
    CSV de campo de la rejilla actual escritos con su hash de configuración.

    Las corridas sin simular, las de otro hash y los CSV que quedan fuera de
    la rejilla se omiten con un aviso.
    Returns: (rutas vigentes, cantidad de CSV omitidos)
    """
    expected = [run_paths(experiment.out_dir, run)['field'] for run in experiment.runs()]
    config_hash = experiment.config_hash
    current = [path for path in expected if _is_current(path, config_hash)]
    present = [path for path in expected if path.exists()]
    missing = len(expected) - len(present)
    stale = len(present) - len(current)

    runs_dir = Path(experiment.out_dir) / 'runs'
    known = set(expected)
    outside = sum(1 for path in field_files(runs_dir) if path not in known) if runs_dir.exists() else 0

    if missing:
        logger.warning("%d corridas de la rejilla sin simular", missing)
    if stale:
        logger.warning("%d corridas con otro hash de configuración (vigente %s); ejecutar simulate",
                       stale, config_hash)
    if outside:
        logger.warning("%d CSV de campo fuera de la rejilla actual se ignoran", outside)
    return current, stale + outside
