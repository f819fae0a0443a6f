"""
Interfaz de línea de comandos: simulate, features, classify, ingest, report

Códigos de salida: 0 éxito, 2 error de configuración, 3 error de datos,
4 error interno.
"""
import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .config import Config, CvPlan, PipelineParams
from .csvio import read_comments
from .errors import ConfigError, DataError, SchemaVersionError, TactilError
from .experiment import (
    SCHEMA_VERSION, SWEEP_PRESETS, ExperimentConfig, load_experiment, preset_experiment,
)
from .features import extract, read_feature_table, write_feature_table
from .ingest import ingest_log, load_manifest, save_pass_index
from .magnetics import load_field_csv, save_field_csv
from .models import FeatureVector, LabeledDataset
from .reports import (
    classify_tables, compare_designs, print_summary, read_accuracy_report, render_box_plots,
    write_reports,
)
from .simulation import Simulation, current_field_files, field_files

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _experiment(args, require_seed: bool = True) -> ExperimentConfig:
    """Experimento desde --config y/o --preset, con --seed y --out como sobrescrituras"""
    out = Path(args.out) if args.out else None
    preset = args.preset
    if args.config:
        if preset in SWEEP_PRESETS:
            raise ConfigError("con --config el barrido se elige con la clave 'preset'", 'preset')
        experiment = load_experiment(args.config, args.seed, out)
    elif preset in SWEEP_PRESETS:
        if args.seed is None:
            raise ConfigError("la semilla es obligatoria (--seed)", 'seed')
        experiment = preset_experiment(preset, args.seed, out or Path('out'))
    else:
        if args.seed is None and require_seed:
            raise ConfigError("la semilla es obligatoria (--seed o --config)", 'seed')
        seed = args.seed if args.seed is not None else 0
        experiment = ExperimentConfig(name='default', seed=seed, designs=(), surfaces=(),
                                      cv=CvPlan(seed=seed), out_dir=out or Path('out'))

    if preset in CvPlan.PRESETS:
        experiment = replace(experiment, cv=CvPlan.preset(preset, experiment.seed))
    elif preset is not None and preset not in SWEEP_PRESETS:
        options = sorted(SWEEP_PRESETS) + sorted(CvPlan.PRESETS)
        raise ConfigError(f"preset desconocido {preset!r}; opciones: {options}", 'preset')
    experiment.validate()
    return experiment


def cmd_simulate(experiment: ExperimentConfig, jobs: int = 1, force: bool = False,
                 verbose: bool = True) -> int:
    """Barrido cartesiano completo; las salidas vigentes se reutilizan salvo force"""
    Simulation(experiment, jobs=jobs, force=force).run(verbose=verbose)
    return EXIT_OK


def _row_meta(path: Path, meta: Dict[str, Any]) -> Dict[str, Any]:
    return {
        'run_id': meta.get('run_id', path.name[:-len('.field.csv')]),
        'design': meta.get('design', ''),
        'label': meta.get('label', meta.get('material', '')),
        'velocity': meta.get('velocity', ''),
        'direction': meta.get('direction', ''),
        'repetition': meta.get('repetition', ''),
        'trial': meta.get('trial', ''),
    }


def _extract_file(path: Path, pipeline: PipelineParams) -> Tuple[Dict[str, Any], FeatureVector]:
    schema = read_comments(path).get('output_schema')
    if schema is not None and schema != SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: esquema {schema!r}, se esperaba {SCHEMA_VERSION!r}")
    series = load_field_csv(path)
    return _row_meta(path, series.meta), extract(series, pipeline)


def _safe_extract(path: Path, pipeline: PipelineParams):
    try:
        return path, _extract_file(path, pipeline), None
    except TactilError as exc:
        return path, None, str(exc)


def _warn_foreign_hash(paths: Sequence[Path], config_hash: str):
    foreign = 0
    for path in paths:
        try:
            found = read_comments(path).get('config_hash')
        except DataError:
            continue
        if found and found != config_hash:
            foreign += 1
    if foreign:
        logger.warning("%d CSV de entrada con otro hash de configuración (vigente %s)",
                       foreign, config_hash)


def cmd_features(experiment: ExperimentConfig, input_dir: Optional[Path] = None,
                 jobs: int = 1) -> int:
    """
    Una fila de 66 características por corrida/pasada, en una tabla por
    diseño. Los archivos corruptos se informan y el resto se procesa.
    """
    skipped = 0
    if input_dir:
        input_dir = Path(input_dir)
        paths = field_files(input_dir)
        _warn_foreign_hash(paths, experiment.config_hash)
    else:
        input_dir = Path(experiment.out_dir) / 'runs'
        paths, skipped = current_field_files(experiment)
    if skipped:
        print(f"Omitidos: {skipped} CSV de campo de otra configuración o fuera de la rejilla")
    if not paths:
        logger.warning("No hay CSV de campo vigentes en %s", input_dir)
        return EXIT_OK

    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_safe_extract, paths, [experiment.pipeline] * len(paths)))
    else:
        outcomes = [_safe_extract(path, experiment.pipeline) for path in paths]

    tables: Dict[str, List[Tuple[Dict[str, Any], FeatureVector]]] = {}
    errors = []
    for path, result, error in outcomes:
        if error is not None:
            errors.append((path, error))
            logger.error("%s: %s", path, error)
            continue
        meta, vector = result
        tables.setdefault(meta['design'] or 'unknown', []).append((meta, vector))

    out_dir = Path(experiment.out_dir) / 'features'
    for design, rows in sorted(tables.items()):
        comments = dict(experiment.provenance())
        comments['design'] = design
        write_feature_table(out_dir / f"{design}.features.csv", rows, comments)

    print(f"Características: {sum(len(r) for r in tables.values())} filas en "
          f"{len(tables)} tablas, {len(errors)} archivos con error")
    for path, error in errors:
        print(f"  ✗ {path}: {error}")
    if errors and not tables:
        return EXIT_DATA
    return EXIT_OK


def _split_by_design(dataset: LabeledDataset) -> Dict[str, LabeledDataset]:
    rows: Dict[str, List[int]] = {}
    for index, meta in enumerate(dataset.meta):
        rows.setdefault(meta.get('design', ''), []).append(index)
    return {design: dataset.subset(indices) for design, indices in rows.items()}


def cmd_classify(experiment: ExperimentConfig, tables: Sequence[Path] = (),
                 jobs: int = 1) -> int:
    """Distribuciones por (diseño, velocidad), exactitud por clase y ANOVA + Tukey"""
    paths = [Path(p) for p in tables] or sorted(
        (Path(experiment.out_dir) / 'features').glob('*.features.csv'))
    if not paths:
        raise DataError("No hay tablas de características para clasificar")

    by_design: Dict[str, LabeledDataset] = {}
    for path in paths:
        for design, dataset in _split_by_design(read_feature_table(path)).items():
            if design in by_design:
                raise DataError(f"El diseño {design!r} aparece en más de una tabla")
            by_design[design] = dataset

    report = classify_tables(by_design, experiment.cv, experiment.knn,
                             experiment.normalize_mode, experiment.alpha, jobs)
    out_dir = Path(experiment.out_dir) / 'reports'
    comments = dict(experiment.provenance())
    comments.update(folds=experiment.cv.folds, repeats=experiment.cv.repeats,
                    normalize=experiment.normalize_mode)
    write_reports(report, out_dir, comments)
    render_box_plots(report, out_dir, experiment.show_outliers, comments)
    print_summary(report)
    return EXIT_OK


def cmd_ingest(experiment: ExperimentConfig, manifest: Optional[Path] = None) -> int:
    """Segmenta cada registro del manifiesto; error solo si fallan todos"""
    manifest = Path(manifest) if manifest else experiment.manifest
    if manifest is None:
        raise ConfigError("falta el manifiesto (--manifest o [ingest].manifest)", 'ingest.manifest')
    entries = load_manifest(manifest)
    if not entries:
        logger.warning("Manifiesto vacío: nada que procesar")
        return EXIT_OK

    out_dir = Path(experiment.out_dir) / 'passes'
    all_passes = []
    failures = []
    for log_path, meta in entries:
        try:
            segmentation = ingest_log(log_path, meta)
        except TactilError as exc:
            failures.append((log_path, str(exc)))
            logger.warning("%s: %s", log_path, exc)
            continue
        for flag in segmentation.flags:
            logger.warning("%s: %s", log_path.name, flag)
        for number, item in enumerate(segmentation.passes):
            target = out_dir / meta.design / f"{log_path.stem}_p{number}.field.csv"
            comments = dict(experiment.provenance())
            comments['flags'] = ';'.join(item.flags)
            save_field_csv(item.series, target, comments)
        all_passes.extend(segmentation.passes)
        print(f"  {log_path.name}: {len(segmentation)} pasadas")

    save_pass_index(all_passes, out_dir / 'passes.csv', experiment.provenance())
    print(f"Registros: {len(entries)} | procesados: {len(entries) - len(failures)} | "
          f"pasadas: {len(all_passes)}")
    for path, error in failures:
        print(f"  ✗ {path}: {error}")
    return EXIT_DATA if len(failures) == len(entries) else EXIT_OK


def cmd_report(experiment: ExperimentConfig, accuracy_csv: Optional[Path] = None) -> int:
    """Regenera diagramas, estadísticos y resumen desde accuracy.csv"""
    out_dir = Path(experiment.out_dir) / 'reports'
    path = Path(accuracy_csv) if accuracy_csv else out_dir / 'accuracy.csv'
    report = read_accuracy_report(path)
    report.stats = compare_designs(report.distributions, experiment.alpha)
    render_box_plots(report, path.parent, experiment.show_outliers, read_comments(path))
    print_summary(report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='tactil',
        description="Simulación y clasificación de texturas con un sensor táctil magnético",
    )
    parser.add_argument('-v', '--verbose', action='store_true', help="registro DEBUG")
    commands = parser.add_subparsers(dest='command', required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="archivo TOML del experimento")
    common.add_argument('--out', help="directorio de salida")
    common.add_argument('--jobs', type=_positive_int, default=1, help="trabajos en paralelo")
    common.add_argument('--seed', type=int, help="semilla global")
    common.add_argument('--force', action='store_true', help="recalcular salidas existentes")
    common.add_argument('--preset', help="preset de barrido o de validación cruzada")

    commands.add_parser('simulate', parents=[common], help="ejecutar el barrido de simulación")
    features = commands.add_parser('features', parents=[common], help="extraer características")
    features.add_argument('--input', help="directorio con CSV de campo (por defecto OUT/runs)")
    classify = commands.add_parser('classify', parents=[common], help="clasificar y comparar")
    classify.add_argument('tables', nargs='*', help="tablas de características")
    ingest = commands.add_parser('ingest', parents=[common], help="segmentar registros")
    ingest.add_argument('--manifest', help="manifiesto TOML de sesiones")
    report = commands.add_parser('report', parents=[common], help="regenerar reportes")
    report.add_argument('--input', help="accuracy.csv (por defecto OUT/reports/accuracy.csv)")
    return parser


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("debe ser >= 1")
    return value


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Función principal de ejecución"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        Config.validate()
        if args.command == 'simulate':
            return cmd_simulate(_experiment(args), args.jobs, args.force)
        if args.command == 'features':
            return cmd_features(_experiment(args), args.input, args.jobs)
        if args.command == 'classify':
            return cmd_classify(_experiment(args), args.tables, args.jobs)
        if args.command == 'ingest':
            return cmd_ingest(_experiment(args, require_seed=False), args.manifest)
        return cmd_report(_experiment(args, require_seed=False), args.input)
    except ConfigError as exc:
        print(f"Error de configuración: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"Error de datos: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        logger.exception("Error interno")
        return EXIT_INTERNAL
