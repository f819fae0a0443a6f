"""
Características temporales y frecuenciales por eje y normalización por
grupos de unidades
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .config import Config, PipelineParams
from .csvio import read_csv, write_csv
from .dsp import downsample, find_peaks, highpass, power_spectrum, resample
from .errors import DataError, SchemaVersionError
from .models import (
    FEATURE_LAYOUT_VERSION, FeatureVector, FieldSeries, LabeledDataset, PowerSpectrum,
    SpectralPeak, UniformSeries,
)

logger = logging.getLogger(__name__)

AXES = ('x', 'y', 'z')
TIME_FEATURES = ('mean', 'p2p', 'std', 'skew', 'kurt')
SPECTRUM_FEATURES = ('centroid_f', 'std_f', 'skew_f', 'kurt_f',
                     'centroid_p', 'std_p', 'skew_p', 'kurt_p')
PEAK_FEATURES = ('peak_count', 'peak_mean_f', 'peak_std_f', 'peak_skew_f', 'peak_kurt_f',
                 'peak_mean_p', 'peak_std_p', 'peak_skew_p', 'peak_kurt_p')
PER_AXIS = TIME_FEATURES + SPECTRUM_FEATURES + PEAK_FEATURES

FEATURE_NAMES: Tuple[str, ...] = tuple(f"{axis}_{name}" for axis in AXES for name in PER_AXIS)

_GROUP_MEMBERS = {
    'field-LSB': ('mean', 'p2p', 'std'),
    'frequency-Hz': ('centroid_f', 'std_f', 'peak_mean_f', 'peak_std_f'),
    'power-LSB': ('centroid_p', 'std_p', 'peak_mean_p', 'peak_std_p'),
    'dimensionless': ('skew', 'kurt', 'skew_f', 'kurt_f', 'skew_p', 'kurt_p',
                      'peak_skew_f', 'peak_kurt_f', 'peak_skew_p', 'peak_kurt_p'),
    'count': ('peak_count',),
}

# Grupo de unidades -> índices de las ranuras (los grupos particionan las 66)
UNIT_GROUPS: Dict[str, Tuple[int, ...]] = {
    group: tuple(i for i, name in enumerate(FEATURE_NAMES) if name.split('_', 1)[1] in members)
    for group, members in _GROUP_MEMBERS.items()
}

META_COLUMNS = ('run_id', 'design', 'label', 'velocity', 'direction', 'repetition', 'trial')


def _moments(values: np.ndarray) -> Tuple[float, float, float, float]:
    """media, std poblacional, asimetría g1, curtosis de Pearson; 0 si la varianza es nula"""
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    std = float(np.std(values))
    if std <= Config.ZERO_TOLERANCE * max(1.0, abs(mean)):
        return mean, 0.0, 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', RuntimeWarning)
        skew = float(stats.skew(values, bias=True))
        kurt = float(stats.kurtosis(values, fisher=False, bias=True))
    return (mean, std, skew if np.isfinite(skew) else 0.0, kurt if np.isfinite(kurt) else 0.0)


def time_features(series) -> np.ndarray:
    """[media, pico a pico, std, asimetría, curtosis]"""
    values = np.asarray(series.values if isinstance(series, UniformSeries) else series,
                        dtype=float)
    if values.size < 3:
        raise DataError(f"Serie demasiado corta para estadísticos temporales ({values.size})")
    mean, std, skew, kurt = _moments(values)
    return np.array([mean, float(np.max(values) - np.min(values)), std, skew, kurt])


def is_zero_power(spec: PowerSpectrum) -> bool:
    return float(np.sum(spec.power)) <= Config.ZERO_TOLERANCE


def spectrum_features(spec: PowerSpectrum) -> np.ndarray:
    """
    Eje de frecuencia: momentos de las frecuencias ponderados por la
    magnitud. Eje de potencia: momentos sin ponderar de las magnitudes.
    Un espectro sin potencia da ceros.
    """
    power = np.asarray(spec.power, dtype=float)
    freqs = np.asarray(spec.freqs, dtype=float)
    if power.size == 0:
        raise DataError("Espectro vacío")
    if is_zero_power(spec):
        return np.zeros(len(SPECTRUM_FEATURES))

    weights = power / np.sum(power)
    centroid = float(np.sum(freqs * weights))
    deviation = freqs - centroid
    variance = float(np.sum(deviation ** 2 * weights))
    std_f = float(np.sqrt(variance))
    if std_f <= Config.ZERO_TOLERANCE * max(1.0, abs(centroid)):
        std_f, skew_f, kurt_f = 0.0, 0.0, 0.0
    else:
        skew_f = float(np.sum(deviation ** 3 * weights)) / std_f ** 3
        kurt_f = float(np.sum(deviation ** 4 * weights)) / variance ** 2

    return np.array([centroid, std_f, skew_f, kurt_f, *_moments(power)])


def peak_features(peaks: Sequence[SpectralPeak]) -> np.ndarray:
    """
    [cantidad, momentos de frecuencia (4), momentos de magnitud (4)].
    Con menos de 4 picos la asimetría y la curtosis valen 0.
    """
    count = len(peaks)
    if count == 0:
        return np.zeros(len(PEAK_FEATURES))
    freqs = np.array([p.freq for p in peaks], dtype=float)
    powers = np.array([p.power for p in peaks], dtype=float)
    freq_stats = list(_moments(freqs))
    power_stats = list(_moments(powers))
    if count < 4:
        freq_stats[2:] = [0.0, 0.0]
        power_stats[2:] = [0.0, 0.0]
    return np.array([float(count), *freq_stats, *power_stats])


def condition_axis(
    times: np.ndarray,
    values: np.ndarray,
    source_rate: float,
    pipeline: PipelineParams,
) -> UniformSeries:
    """Remuestreo uniforme, diezmado (si hace falta) y paso alto"""
    if source_rate > pipeline.target_rate:
        series = resample(times, values, source_rate)
        series = downsample(series, pipeline.target_rate, pipeline.filter_order)
    else:
        series = resample(times, values, pipeline.target_rate)
    return highpass(series, pipeline.highpass_cutoff, pipeline.filter_order)


def extract(field: FieldSeries, pipeline: PipelineParams = PipelineParams()) -> FeatureVector:
    """Pipeline completo por eje, ensamblado en el orden fijo de FEATURE_NAMES"""
    pipeline.validate()
    if len(field) < 2:
        raise DataError("Serie de campo vacía")
    span = float(field.times[-1] - field.times[0])
    if span + 1.0 / pipeline.target_rate < Config.MIN_FEATURE_DURATION:
        raise DataError(f"Se requiere >= {Config.MIN_FEATURE_DURATION} s de datos, hay {span:.3f} s")

    blocks: List[np.ndarray] = []
    flags: List[str] = []
    for axis, counts in field.axes().items():
        series = condition_axis(field.times, counts.astype(float), field.rate, pipeline)
        spec = power_spectrum(series)
        if is_zero_power(spec):
            flags.append(f"zero-power:{axis}")
        peaks = find_peaks(spec, pipeline.prominence, pipeline.max_peaks)
        blocks.extend([time_features(series), spectrum_features(spec), peak_features(peaks)])

    return FeatureVector(values=np.concatenate(blocks), layout_version=FEATURE_LAYOUT_VERSION,
                         flags=tuple(flags))


@dataclass(frozen=True)
class GroupNormalizer:
    """Mín/máx conjuntos por grupo de unidades, ajustados sobre filas elegidas"""
    groups: Tuple[Tuple[Tuple[int, ...], float, float], ...]
    clamp: bool = False

    @classmethod
    def fit(
        cls,
        features: np.ndarray,
        fit_rows: Sequence[int],
        groups: Mapping[str, Sequence[int]] = UNIT_GROUPS,
        clamp: bool = False,
    ) -> 'GroupNormalizer':
        fit_rows = list(fit_rows)
        if not fit_rows:
            raise DataError("Se necesita al menos una fila para ajustar la normalización")
        _check_partition(groups, features.shape[1])
        fitted = []
        for members in groups.values():
            members = tuple(members)
            block = features[np.ix_(fit_rows, members)]
            fitted.append((members, float(np.min(block)), float(np.max(block))))
        return cls(tuple(fitted), clamp)

    def transform(self, features: np.ndarray) -> np.ndarray:
        out = np.array(features, dtype=float, copy=True)
        for members, low, high in self.groups:
            columns = list(members)
            if high == low:
                out[:, columns] = 0.5
            else:
                out[:, columns] = (out[:, columns] - low) / (high - low)
        if self.clamp:
            np.clip(out, 0.0, 1.0, out=out)
        return out


def _check_partition(groups: Mapping[str, Sequence[int]], width: int):
    seen = sorted(i for members in groups.values() for i in members)
    if seen != list(range(width)):
        raise DataError(f"Los grupos de unidades no particionan las {width} columnas")


def normalize(
    dataset: LabeledDataset,
    fit_rows: Sequence[int],
    groups: Mapping[str, Sequence[int]] = UNIT_GROUPS,
    clamp: bool = False,
) -> LabeledDataset:
    """Escala cada grupo a [0, 1] con el mín/máx de fit_rows; grupo degenerado -> 0.5"""
    normalizer = GroupNormalizer.fit(dataset.features, fit_rows, groups, clamp)
    return dataset.with_features(normalizer.transform(dataset.features))


def write_feature_table(
    path,
    rows: Iterable[Tuple[Mapping[str, Any], FeatureVector]],
    comments: Optional[Mapping[str, Any]] = None,
):
    """Una fila por pasada/corrida: columnas META_COLUMNS + FEATURE_NAMES"""
    body = []
    for meta, vector in rows:
        if vector.layout_version != FEATURE_LAYOUT_VERSION:
            raise SchemaVersionError(f"Vector con esquema {vector.layout_version!r}")
        body.append([meta.get(column, '') for column in META_COLUMNS] + vector.values.tolist())
    header_comments = {'schema': FEATURE_LAYOUT_VERSION}
    header_comments.update(comments or {})
    write_csv(path, META_COLUMNS + FEATURE_NAMES, body, header_comments)


def read_feature_table(path) -> LabeledDataset:
    table = read_csv(path)
    schema = table.comments.get('schema')
    if schema != FEATURE_LAYOUT_VERSION:
        raise SchemaVersionError(f"{path}: esquema {schema!r}, se esperaba {FEATURE_LAYOUT_VERSION!r}")
    if tuple(table.header) != META_COLUMNS + FEATURE_NAMES:
        raise SchemaVersionError(f"{path}: columnas inesperadas")
    n_meta = len(META_COLUMNS)
    try:
        matrix = np.array([[float(v) for v in row[n_meta:]] for row in table.rows], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: valor no numérico ({exc})") from None
    matrix = matrix.reshape(len(table.rows), len(FEATURE_NAMES))
    meta = [dict(zip(META_COLUMNS, row[:n_meta])) for row in table.rows]
    labels = [m['label'] for m in meta]
    return LabeledDataset(matrix, tuple(labels), tuple(meta), schema)
