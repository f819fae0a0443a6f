"""
Clasificación k-NN, validación cruzada estratificada repetida y
comparaciones estadísticas (ANOVA de un factor y Tukey HSD)
"""
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, stats

from .config import Config, CvPlan, KnnConfig
from .errors import ClassTooSmallError, ConfigError, DataError
from .features import FEATURE_NAMES, UNIT_GROUPS, GroupNormalizer
from .models import FeatureVector, LabeledDataset

logger = logging.getLogger(__name__)

NORMALIZE_MODES = ('fold', 'global', 'none')

# Orden fijo de Gauss-Legendre para la distribución del rango studentizado
QUADRATURE_ORDER = 96
_TAIL = 1e-12
_Z_LIMIT = 8.0


class KnnClassifier:
    """k vecinos más cercanos, distancia euclídea y desempates deterministas"""

    def __init__(self, cfg: KnnConfig = KnnConfig()):
        cfg.validate()
        self.cfg = cfg
        self._features: Optional[np.ndarray] = None
        self._labels: List[Any] = []

    def fit(self, features: np.ndarray, labels: Sequence[Any]) -> 'KnnClassifier':
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[0] == 0:
            raise DataError("El conjunto de entrenamiento está vacío")
        if features.shape[0] != len(labels):
            raise DataError("Filas y etiquetas difieren en número")
        self.cfg.validate(features.shape[0])
        self._features = features
        self._labels = list(labels)
        return self

    def predict_one(self, query) -> Any:
        if self._features is None:
            raise DataError("Clasificador sin entrenar")
        values = query.values if isinstance(query, FeatureVector) else query
        values = np.asarray(values, dtype=float)
        if values.shape != (self._features.shape[1],):
            raise DataError(
                f"Dimensión de la consulta {values.shape} != {self._features.shape[1]}"
            )
        distances = np.sqrt(np.sum((self._features - values) ** 2, axis=1))
        return _vote(distances, self._labels, self.cfg.k)

    def predict(self, queries: np.ndarray) -> List[Any]:
        return [self.predict_one(row) for row in np.asarray(queries, dtype=float)]


def _vote(distances: np.ndarray, labels: Sequence[Any], k: int) -> Any:
    """
    Mayoría entre los k más cercanos (orden estable ante distancias iguales).
    Empate de votos: menor distancia media; luego la etiqueta menor.
    """
    nearest = np.argsort(distances, kind='stable')[:k]
    votes = Counter(labels[i] for i in nearest)
    best = max(votes.values())
    tied = sorted(label for label, count in votes.items() if count == best)
    if len(tied) == 1:
        return tied[0]

    def mean_distance(label):
        return float(np.mean([distances[i] for i in nearest if labels[i] == label]))

    return min(tied, key=lambda label: (mean_distance(label), tied.index(label)))


def knn_predict(train: LabeledDataset, query, cfg: KnnConfig = KnnConfig()) -> Any:
    """Clase predicha para una consulta"""
    if len(train) == 0:
        raise DataError("El conjunto de entrenamiento está vacío")
    return KnnClassifier(cfg).fit(train.features, train.labels).predict_one(query)


def stratified_folds(dataset, plan: CvPlan) -> List[np.ndarray]:
    """
    Una asignación de pliegue por fila y por repetición.

    En cada repetición cada clase (en orden) se baraja con una semilla
    derivada y se reparte en turno rotatorio; el turno continúa entre clases
    para equilibrar el tamaño total de los pliegues.
    """
    plan.validate()
    labels = list(dataset.labels if isinstance(dataset, LabeledDataset) else dataset)
    counts = Counter(labels)
    classes = sorted(counts)
    small = [label for label in classes if counts[label] < plan.folds]
    if small:
        raise ClassTooSmallError(
            f"Clases con menos de {plan.folds} miembros: "
            + ", ".join(f"{label!r} ({counts[label]})" for label in small)
        )

    members = {label: np.array([i for i, y in enumerate(labels) if y == label], dtype=int)
               for label in classes}
    assignments = []
    for seed in np.random.SeedSequence(plan.seed).spawn(plan.repeats):
        rng = np.random.default_rng(seed)
        fold_of = np.empty(len(labels), dtype=int)
        offset = 0
        for label in classes:
            shuffled = rng.permutation(members[label])
            fold_of[shuffled] = (offset + np.arange(shuffled.size)) % plan.folds
            offset = (offset + shuffled.size) % plan.folds
        assignments.append(fold_of)
    return assignments


@dataclass(frozen=True)
class AccuracyDistribution:
    """
    Una exactitud por modelo (pliegue × repetición).

    keys: (repetición, pliegue) de cada exactitud, en ese orden
    class_hits: etiqueta -> (aciertos, evaluaciones) acumulados en todos los modelos
    """
    accuracies: Tuple[float, ...]
    keys: Tuple[Tuple[int, int], ...]
    class_hits: Dict[Any, Tuple[int, int]] = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else 0.0

    @property
    def std(self) -> float:
        """Desviación estándar poblacional"""
        return float(np.std(self.accuracies)) if self.accuracies else 0.0

    def per_class(self) -> Dict[Any, float]:
        return {label: hits / total for label, (hits, total) in sorted(self.class_hits.items())
                if total}

    def summary(self) -> str:
        return f"{self.mean * 100:.1f}% ± {self.std * 100:.1f}%"

    def __len__(self):
        return len(self.accuracies)


def _default_groups(n_features: int) -> Dict[str, Tuple[int, ...]]:
    """Grupos de unidades para el esquema de 66 columnas; una columna por grupo si no"""
    if n_features == len(FEATURE_NAMES):
        return UNIT_GROUPS
    return {str(i): (i,) for i in range(n_features)}


def _fold_result(
    features: np.ndarray,
    labels: Sequence[Any],
    train: np.ndarray,
    test: np.ndarray,
    cfg: KnnConfig,
    groups: Optional[Mapping[str, Sequence[int]]],
) -> Tuple[float, Dict[Any, Tuple[int, int]]]:
    if groups is not None:
        features = GroupNormalizer.fit(features, train, groups).transform(features)
    classifier = KnnClassifier(cfg).fit(features[train], [labels[i] for i in train])
    predictions = classifier.predict(features[test])

    hits: Dict[Any, List[int]] = {}
    correct = 0
    for row, predicted in zip(test, predictions):
        truth = labels[row]
        tally = hits.setdefault(truth, [0, 0])
        tally[1] += 1
        if predicted == truth:
            tally[0] += 1
            correct += 1
    return correct / test.size, {label: (h, t) for label, (h, t) in hits.items()}


def evaluate(
    dataset: LabeledDataset,
    plan: CvPlan,
    cfg: KnnConfig = KnnConfig(),
    normalize_mode: str = 'fold',
    jobs: int = 1,
    groups: Optional[Mapping[str, Sequence[int]]] = None,
) -> AccuracyDistribution:
    """
    Entrena y evalúa un modelo por (repetición, pliegue).

    normalize_mode: 'fold' ajusta mín/máx solo con las filas de entrenamiento
    de cada pliegue, 'global' con todo el dataset, 'none' usa los valores crudos.
    Los resultados no dependen de jobs.
    """
    if normalize_mode not in NORMALIZE_MODES:
        raise ConfigError(f"modo de normalización desconocido {normalize_mode!r}",
                          'cv.normalize')
    cfg.validate()
    if len(dataset.classes) < 2:
        raise DataError(f"Se requieren al menos 2 clases, hay {len(dataset.classes)}")
    assignments = stratified_folds(dataset, plan)

    features = np.asarray(dataset.features, dtype=float)
    labels = list(dataset.labels)
    groups = dict(groups) if groups is not None else _default_groups(features.shape[1])
    fold_groups = groups if normalize_mode == 'fold' else None
    if normalize_mode == 'global':
        features = GroupNormalizer.fit(features, range(len(labels)), groups).transform(features)

    tasks = []
    for repeat, fold_of in enumerate(assignments):
        for fold in range(plan.folds):
            test = np.flatnonzero(fold_of == fold)
            train = np.flatnonzero(fold_of != fold)
            tasks.append(((repeat, fold), train, test))

    def run(task):
        key, train, test = task
        return key, _fold_result(features, labels, train, test, cfg, fold_groups)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(run, tasks))
    else:
        results = dict(map(run, tasks))

    keys = tuple(sorted(results))
    class_hits: Dict[Any, Tuple[int, int]] = {}
    for key in keys:
        for label, (hits, total) in results[key][1].items():
            previous = class_hits.get(label, (0, 0))
            class_hits[label] = (previous[0] + hits, previous[1] + total)

    distribution = AccuracyDistribution(
        accuracies=tuple(results[key][0] for key in keys),
        keys=keys,
        class_hits=dict(sorted(class_hits.items())),
    )
    logger.debug("%d modelos evaluados: %s", len(distribution), distribution.summary())
    return distribution


@dataclass(frozen=True)
class AnovaResult:
    f: float
    p: float
    df_between: int
    df_within: int
    ms_within: float

    def __iter__(self):
        return iter((self.f, self.p, self.df_between, self.df_within))


def _check_groups(groups: Sequence[Sequence[float]]) -> List[np.ndarray]:
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise DataError("ANOVA requiere al menos 2 grupos")
    for i, values in enumerate(arrays):
        if values.size < 2:
            raise DataError(f"El grupo {i} tiene menos de 2 valores")
        if not np.all(np.isfinite(values)):
            raise DataError(f"El grupo {i} contiene valores no finitos")
    return arrays


def anova_oneway(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """F = MSB/MSW con p de la cola superior de la distribución F"""
    arrays = _check_groups(groups)
    total = np.concatenate(arrays)
    grand = float(np.mean(total))
    ss_between = float(sum(a.size * (np.mean(a) - grand) ** 2 for a in arrays))
    ss_within = float(sum(np.sum((a - np.mean(a)) ** 2) for a in arrays))
    df_between = len(arrays) - 1
    df_within = total.size - len(arrays)
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within

    if ms_between == 0.0:
        f, p = 0.0, 1.0
    elif ms_within == 0.0:
        f, p = float('inf'), 0.0
    else:
        f = ms_between / ms_within
        p = float(stats.f.sf(f, df_between, df_within))
    return AnovaResult(f, p, df_between, df_within, ms_within)


def _legendre(low: float, high: float) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(QUADRATURE_ORDER)
    half = (high - low) / 2.0
    return low + half * (nodes + 1.0), half * weights


def studentized_range_cdf(q: float, k: int, df: float) -> float:
    """
    P(Q <= q) para k medias y df grados de libertad.

    Integral exterior sobre la densidad de s = chi_df/sqrt(df), interior sobre
    la normal estándar en [-8, 8]; ambas con Gauss-Legendre de orden fijo.
    """
    if k < 2 or df <= 0:
        raise ConfigError(f"parámetros inválidos k={k}, df={df}")
    if q <= 0:
        return 0.0
    if not np.isfinite(q):
        return 1.0

    root = np.sqrt(df)
    s, ws = _legendre(stats.chi.ppf(_TAIL, df) / root, stats.chi.ppf(1.0 - _TAIL, df) / root)
    density = stats.chi.pdf(s * root, df) * root
    z, wz = _legendre(-_Z_LIMIT, _Z_LIMIT)

    band = stats.norm.cdf(z[None, :] + q * s[:, None]) - stats.norm.cdf(z)[None, :]
    inner = k * np.sum(wz[None, :] * stats.norm.pdf(z)[None, :] * band ** (k - 1), axis=1)
    return float(np.clip(np.sum(ws * density * inner), 0.0, 1.0))


def studentized_range_sf(q: float, k: int, df: float) -> float:
    return 1.0 - studentized_range_cdf(q, k, df)


def studentized_range_ppf(probability: float, k: int, df: float) -> float:
    """Cuantil por búsqueda de raíz sobre la CDF por cuadratura"""
    if not 0 < probability < 1:
        raise ConfigError(f"probabilidad fuera de (0, 1): {probability}")
    high = 10.0
    while studentized_range_cdf(high, k, df) < probability:
        high *= 2.0
    return float(optimize.brentq(lambda q: studentized_range_cdf(q, k, df) - probability,
                                 0.0, high, xtol=1e-10))


@dataclass(frozen=True)
class TukeyResult:
    """
    Comparación de un par de grupos.

    mean_diff = media(b) - media(a); el orden del par solo cambia su signo.
    """
    group_a: Any
    group_b: Any
    mean_diff: float
    q: float
    q_crit: float
    p_value: float
    significant: bool


def tukey_hsd(
    groups: Sequence[Sequence[float]],
    alpha: float = Config.ALPHA,
    names: Optional[Sequence[Any]] = None,
) -> List[TukeyResult]:
    """Todas las comparaciones por pares con el valor crítico del rango studentizado"""
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha fuera de (0, 1): {alpha}", 'stats.alpha')
    arrays = _check_groups(groups)
    names = list(names) if names is not None else list(range(len(arrays)))
    if len(names) != len(arrays):
        raise DataError("Nombres y grupos difieren en número")

    anova = anova_oneway(arrays)
    k = len(arrays)
    q_crit = studentized_range_ppf(1.0 - alpha, k, anova.df_within)
    means = [float(np.mean(a)) for a in arrays]

    results = []
    for i in range(k):
        for j in range(i + 1, k):
            diff = means[j] - means[i]
            scale = np.sqrt(anova.ms_within / 2.0 * (1.0 / arrays[i].size + 1.0 / arrays[j].size))
            if diff == 0.0:
                q = 0.0
            elif scale == 0.0:
                q = float('inf')
            else:
                q = abs(diff) / scale
            results.append(TukeyResult(
                group_a=names[i],
                group_b=names[j],
                mean_diff=diff,
                q=q,
                q_crit=q_crit,
                p_value=studentized_range_sf(q, k, anova.df_within),
                significant=q > q_crit,
            ))
    return results
