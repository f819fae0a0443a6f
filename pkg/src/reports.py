"""
Clasificación por diseño y velocidad, comparaciones estadísticas entre
diseños y emisión de reportes (CSV + diagramas de caja SVG)
"""
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import CvPlan, KnnConfig  # noqa: E402
from .csvio import atomic_write_text, read_csv, write_csv  # noqa: E402
from .errors import DataError  # noqa: E402
from .learn import AccuracyDistribution, anova_oneway, evaluate, tukey_hsd  # noqa: E402
from .models import LabeledDataset  # noqa: E402

logger = logging.getLogger(__name__)

POOLED = 'all'
ACCURACY_HEADER = ('design', 'velocity', 'repeat', 'fold', 'accuracy')
SUMMARY_HEADER = ('design', 'velocity', 'models', 'mean', 'std')
CLASS_HEADER = ('design', 'label', 'hits', 'total', 'accuracy')
STATS_HEADER = ('scope', 'test', 'group_a', 'group_b', 'statistic', 'p_value', 'df_between',
                'df_within', 'mean_diff', 'q_crit', 'significant')

# SVG reproducibles: ids estables y sin fecha
matplotlib.rcParams['svg.hashsalt'] = 'tactil'


@dataclass
class ClassificationReport:
    """
    distributions: (diseño, velocidad) -> exactitudes; velocidad 'all' agrupa todas
    stats: filas de ANOVA y Tukey entre diseños por ámbito
    """
    distributions: Dict[Tuple[str, str], AccuracyDistribution] = field(default_factory=dict)
    stats: List[Dict[str, Any]] = field(default_factory=list)

    def designs(self) -> List[str]:
        return sorted({design for design, _ in self.distributions})

    def scopes(self) -> List[str]:
        velocities = {velocity for _, velocity in self.distributions if velocity != POOLED}
        return sorted(velocities, key=float) + [POOLED]


def _velocity_key(value: Any) -> str:
    return f"{float(value or 0):g}"


def classify_design(
    dataset: LabeledDataset,
    plan: CvPlan,
    cfg: KnnConfig,
    normalize_mode: str = 'fold',
    jobs: int = 1,
) -> Dict[str, AccuracyDistribution]:
    """Una distribución por velocidad y otra con todas las velocidades juntas"""
    if len(dataset.classes) < 2:
        raise DataError(f"Se requieren al menos 2 clases, la tabla tiene {len(dataset.classes)}")
    by_velocity: Dict[str, List[int]] = {}
    for row, meta in enumerate(dataset.meta):
        by_velocity.setdefault(_velocity_key(meta.get('velocity', 0)), []).append(row)

    distributions = {}
    for velocity in sorted(by_velocity, key=float):
        subset = dataset.subset(by_velocity[velocity])
        distributions[velocity] = evaluate(subset, plan, cfg, normalize_mode, jobs)
    distributions[POOLED] = evaluate(dataset, plan, cfg, normalize_mode, jobs)
    return distributions


def compare_designs(
    distributions: Mapping[Tuple[str, str], AccuracyDistribution],
    alpha: float,
) -> List[Dict[str, Any]]:
    """ANOVA + Tukey entre diseños, para cada velocidad y para el conjunto"""
    rows: List[Dict[str, Any]] = []
    designs = sorted({design for design, _ in distributions})
    scopes = sorted({scope for _, scope in distributions},
                    key=lambda s: (s == POOLED, 0.0 if s == POOLED else float(s)))
    for scope in scopes:
        present = [d for d in designs if (d, scope) in distributions]
        if len(present) < 2:
            continue
        groups = [distributions[(d, scope)].accuracies for d in present]
        anova = anova_oneway(groups)
        rows.append({'scope': scope, 'test': 'anova', 'group_a': '', 'group_b': '',
                     'statistic': anova.f, 'p_value': anova.p, 'df_between': anova.df_between,
                     'df_within': anova.df_within, 'mean_diff': '', 'q_crit': '',
                     'significant': anova.p < alpha})
        for pair in tukey_hsd(groups, alpha, present):
            rows.append({'scope': scope, 'test': 'tukey', 'group_a': pair.group_a,
                         'group_b': pair.group_b, 'statistic': pair.q, 'p_value': pair.p_value,
                         'df_between': anova.df_between, 'df_within': anova.df_within,
                         'mean_diff': pair.mean_diff, 'q_crit': pair.q_crit,
                         'significant': pair.significant})
    return rows


def classify_tables(
    tables: Mapping[str, LabeledDataset],
    plan: CvPlan,
    cfg: KnnConfig = KnnConfig(),
    normalize_mode: str = 'fold',
    alpha: float = 0.05,
    jobs: int = 1,
) -> ClassificationReport:
    report = ClassificationReport()
    for design in sorted(tables):
        for velocity, distribution in classify_design(tables[design], plan, cfg,
                                                      normalize_mode, jobs).items():
            report.distributions[(design, velocity)] = distribution
    report.stats = compare_designs(report.distributions, alpha)
    return report


def write_reports(report: ClassificationReport, out_dir: Path,
                  comments: Optional[Mapping[str, Any]] = None) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {
        'accuracy': out_dir / 'accuracy.csv',
        'summary': out_dir / 'summary.csv',
        'classes': out_dir / 'class_accuracy.csv',
        'stats': out_dir / 'stats.csv',
    }
    accuracy_rows = []
    summary_rows = []
    class_rows = []
    for (design, velocity), distribution in sorted(report.distributions.items(),
                                                   key=lambda item: _order(item[0])):
        for (repeat, fold), value in zip(distribution.keys, distribution.accuracies):
            accuracy_rows.append([design, velocity, repeat, fold, value])
        summary_rows.append([design, velocity, len(distribution), distribution.mean,
                             distribution.std])
        if velocity == POOLED:
            for label, (hits, total) in distribution.class_hits.items():
                class_rows.append([design, label, hits, total, hits / total if total else 0.0])

    write_csv(paths['accuracy'], ACCURACY_HEADER, accuracy_rows, comments)
    write_csv(paths['summary'], SUMMARY_HEADER, summary_rows, comments)
    write_csv(paths['classes'], CLASS_HEADER, class_rows, comments)
    write_csv(paths['stats'], STATS_HEADER,
              [[row[column] for column in STATS_HEADER] for row in report.stats], comments)
    return paths


def _order(key: Tuple[str, str]):
    design, velocity = key
    return (design, velocity == POOLED, float(velocity) if velocity != POOLED else 0.0)


def read_accuracy_report(path) -> ClassificationReport:
    """Reconstruye las distribuciones desde accuracy.csv"""
    table = read_csv(path)
    if tuple(table.header) != ACCURACY_HEADER:
        raise DataError(f"{path}: cabecera inesperada {table.header}")
    grouped: Dict[Tuple[str, str], List[Tuple[Tuple[int, int], float]]] = {}
    try:
        for design, velocity, repeat, fold, value in table.rows:
            grouped.setdefault((design, velocity), []).append(
                ((int(repeat), int(fold)), float(value)))
    except ValueError as exc:
        raise DataError(f"{path}: valor no numérico ({exc})") from None
    report = ClassificationReport()
    for key, items in grouped.items():
        items.sort()
        report.distributions[key] = AccuracyDistribution(
            accuracies=tuple(v for _, v in items), keys=tuple(k for k, _ in items))
    return report


def render_box_plots(report: ClassificationReport, out_dir: Path, show_outliers: bool = True,
                     comments: Optional[Mapping[str, Any]] = None) -> List[Path]:
    """
    Un diagrama de caja por ámbito (velocidad o conjunto) con una caja por
    diseño. Los bigotes siguen la regla de 1.5 × IQR; ocultar los atípicos
    solo afecta al dibujo. La procedencia (comments) va en la descripción
    del SVG.
    """
    out_dir = Path(out_dir)
    metadata: Dict[str, Any] = {'Date': None}
    if comments:
        metadata['Description'] = '; '.join(f"{key}={value}" for key, value in comments.items())
    designs = report.designs()
    written = []
    for scope in report.scopes():
        present = [d for d in designs if (d, scope) in report.distributions]
        if not present:
            continue
        data = [np.asarray(report.distributions[(d, scope)].accuracies) * 100.0 for d in present]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.boxplot(data, whis=1.5, showfliers=show_outliers)
        ax.set_xticks(range(1, len(present) + 1), present)
        ax.set_ylabel('Exactitud (%)')
        title = 'Todas las velocidades' if scope == POOLED else f"{scope} mm/s"
        ax.set_title(title)
        ax.grid(axis='y', alpha=0.3)
        buffer = io.StringIO()
        fig.savefig(buffer, format='svg', metadata=metadata)
        plt.close(fig)
        path = out_dir / f"accuracy_{'pooled' if scope == POOLED else scope}.svg"
        atomic_write_text(path, buffer.getvalue())
        written.append(path)
    return written


def print_summary(report: ClassificationReport):
    """Resumen en consola por diseño y velocidad"""
    print("\n" + "=" * 60)
    print("EXACTITUD DE CLASIFICACIÓN")
    print("=" * 60)
    for design in report.designs():
        print(f"\n{design}:")
        for scope in report.scopes():
            distribution = report.distributions.get((design, scope))
            if distribution is None:
                continue
            name = 'todas' if scope == POOLED else f"{scope} mm/s"
            print(f"  {name:<12} {distribution.summary():>18}  ({len(distribution)} modelos)")
    anova_rows = [row for row in report.stats if row['test'] == 'anova']
    if anova_rows:
        print("\n" + "-" * 60)
        print("ANOVA ENTRE DISEÑOS")
        print("-" * 60)
        for row in anova_rows:
            marker = "✓" if row['significant'] else " "
            print(f"{marker} {row['scope']:<8} F={row['statistic']:.3f}  p={row['p_value']:.4g}")
    print("=" * 60)
