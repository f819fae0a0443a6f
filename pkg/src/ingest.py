"""
Lectura de registros del banco de pruebas, detección de contacto y
segmentación en pasadas

Formato del registro (una línea por muestra):
    # tactil-log v1
    # rate_hz=340.0
    t_s,x_um,z_um,bx,by,bz
    0.001,100.0,50.0,3,-2,870
"""
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import Config, Direction
from .csvio import atomic_write_text, write_csv
from .dsp import ema
from .errors import ConfigError, DataError, LogFormatError, NoContactError, SchemaVersionError
from .models import FieldSeries
from .surface import material_catalog
from .tips import TIP_KINDS

logger = logging.getLogger(__name__)

LOG_HEADER = ('t_s', 'x_um', 'z_um', 'bx', 'by', 'bz')
LOG_VERSION = 'tactil-log v1'
PASS_INDEX_HEADER = ('pass_id', 'source', 'design', 'material', 'velocity', 'measured_velocity',
                     'direction', 'repetition', 'trial', 't_start', 't_stop', 'samples', 'flags')
SESSION_DIRECTIONS = ('+x', '-x', 'both')


@dataclass(frozen=True)
class LogRecord:
    """t: s; x_enc, z_enc: µm; bx, by, bz: LSB"""
    t: float
    x_enc: float
    z_enc: float
    bx: int
    by: int
    bz: int


@dataclass
class ParsedLog:
    """Registros válidos, comentarios conservados y diagnósticos (línea, motivo)"""
    records: List[LogRecord] = field(default_factory=list)
    comments: Dict[str, str] = field(default_factory=dict)
    comment_lines: List[str] = field(default_factory=list)
    diagnostics: List[Tuple[int, str]] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[LogRecord]:
        return iter(self.records)

    def __getitem__(self, index):
        return self.records[index]

    def arrays(self) -> Dict[str, np.ndarray]:
        return {
            't': np.array([r.t for r in self.records], dtype=float),
            'x': np.array([r.x_enc for r in self.records], dtype=float),
            'z': np.array([r.z_enc for r in self.records], dtype=float),
            'bx': np.array([r.bx for r in self.records], dtype=np.int64),
            'by': np.array([r.by for r in self.records], dtype=np.int64),
            'bz': np.array([r.bz for r in self.records], dtype=np.int64),
        }

    @property
    def rate(self) -> float:
        """rate_hz declarado o 1/mediana del intervalo entre muestras"""
        if 'rate_hz' in self.comments:
            try:
                return float(self.comments['rate_hz'])
            except ValueError:
                raise DataError(f"rate_hz inválido: {self.comments['rate_hz']!r}") from None
        times = np.array([r.t for r in self.records], dtype=float)
        steps = np.diff(times)
        steps = steps[steps > 0]
        if steps.size == 0:
            raise DataError("No se puede deducir la frecuencia de muestreo del registro")
        return round(1.0 / float(np.median(steps)), 6)


def _parse_line(line: str, previous_t: Optional[float]) -> LogRecord:
    fields = [token.strip() for token in line.split(',')]
    if len(fields) != len(LOG_HEADER):
        raise ValueError(f"{len(fields)} campos, se esperaban {len(LOG_HEADER)}")
    t, x, z = (float(token) for token in fields[:3])
    bx, by, bz = (int(token) for token in fields[3:])
    if not all(np.isfinite((t, x, z))):
        raise ValueError("valor no finito")
    if previous_t is not None and t < previous_t:
        raise ValueError(f"tiempo decreciente ({t} < {previous_t})")
    return LogRecord(t, x, z, bx, by, bz)


def parse_log(data: Union[bytes, str]) -> ParsedLog:
    """
    Las líneas '#' se omiten pero se conservan; las mal formadas se
    acumulan como diagnósticos. Más de 1% de líneas malas rechaza el archivo.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode('utf-8')
        except UnicodeDecodeError as exc:
            raise LogFormatError(f"El registro no es UTF-8 ({exc})") from None

    parsed = ParsedLog()
    data_lines = 0
    previous_t = None
    for number, raw in enumerate(data.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith('#'):
            text = line[1:].strip()
            parsed.comment_lines.append(text)
            if text.startswith('tactil-log') and text != LOG_VERSION:
                raise SchemaVersionError(f"Versión de registro {text!r}, se esperaba {LOG_VERSION!r}")
            key, sep, value = text.partition('=')
            if sep:
                parsed.comments[key.strip()] = value.strip()
            continue
        if tuple(token.strip() for token in line.split(',')) == LOG_HEADER:
            continue

        data_lines += 1
        try:
            record = _parse_line(line, previous_t)
        except ValueError as exc:
            parsed.diagnostics.append((number, str(exc)))
            continue
        parsed.records.append(record)
        previous_t = record.t

    bad = len(parsed.diagnostics)
    if bad and bad > Config.MAX_MALFORMED_FRACTION * data_lines:
        raise LogFormatError(f"{bad} de {data_lines} líneas mal formadas",
                             [number for number, _ in parsed.diagnostics])
    if bad:
        logger.warning("%d líneas mal formadas ignoradas", bad)
    return parsed


def format_log(
    times: Sequence[float],
    x_um: Sequence[float],
    z_um: Sequence[float],
    field_series: FieldSeries,
    comments: Optional[Dict[str, Any]] = None,
) -> str:
    """Registro sintético con las lecturas de field_series y rampas de encoder dadas"""
    lines = [f"# {LOG_VERSION}", f"# rate_hz={float(field_series.rate)!r}"]
    lines.extend(f"# {key}={value}" for key, value in (comments or {}).items())
    lines.append(','.join(LOG_HEADER))
    for row in zip(times, x_um, z_um, field_series.bx.tolist(), field_series.by.tolist(),
                   field_series.bz.tolist()):
        t, x, z, bx, by, bz = row
        lines.append(f"{float(t)!r},{float(x)!r},{float(z)!r},{bx},{by},{bz}")
    return '\n'.join(lines) + '\n'


def write_log(path, *args, **kwargs):
    atomic_write_text(path, format_log(*args, **kwargs))


def detect_contact(
    z_field: Sequence[float],
    alpha: float = Config.EMA_ALPHA,
    threshold: float = Config.CONTACT_THRESHOLD,
    baseline_samples: int = Config.BASELINE_SAMPLES,
) -> Optional[int]:
    """
    Primer índice con |ema(z) - media de las primeras muestras| >= threshold.
    None si nunca se cruza el umbral.
    """
    values = np.asarray(z_field, dtype=float)
    if values.size < baseline_samples:
        raise DataError(f"Se requieren {baseline_samples} muestras de referencia, hay {values.size}")
    baseline = float(np.mean(values[:baseline_samples]))
    crossed = np.flatnonzero(np.abs(ema(values, alpha) - baseline) >= threshold)
    return int(crossed[0]) if crossed.size else None


@dataclass(frozen=True)
class SessionMeta:
    """
    Datos declarados de un registro.

    direction: '+x', '-x' o 'both' (pasadas de ida y vuelta)
    repetitions: pasadas esperadas por dirección
    """
    design: str
    material: str
    velocity: float
    direction: str = 'both'
    repetitions: int = 3
    trial: int = 1

    def validate(self, designs: Iterable[str] = TIP_KINDS,
                 materials: Optional[Iterable[str]] = None):
        designs = set(designs)
        materials = set(materials) if materials is not None else set(material_catalog())
        if self.design not in designs:
            raise ConfigError(f"diseño no registrado {self.design!r}", 'design')
        if self.material not in materials:
            raise ConfigError(f"material no registrado {self.material!r}", 'material')
        if not any(abs(self.velocity - v) < 1e-9 for v in Config.EXPERIMENT_VELOCITIES):
            raise ConfigError(
                f"velocidad {self.velocity} fuera de {Config.EXPERIMENT_VELOCITIES}", 'velocity'
            )
        if self.direction not in SESSION_DIRECTIONS:
            raise ConfigError(f"dirección inválida {self.direction!r}", 'direction')
        if self.repetitions < 1 or self.trial < 1:
            raise ConfigError("repetitions y trial deben ser >= 1", 'repetitions')

    @property
    def expected_passes(self) -> int:
        return self.repetitions * (2 if self.direction == 'both' else 1)


@dataclass(frozen=True, eq=False)
class Pass:
    """Un recorrido a velocidad constante en una dirección"""
    series: FieldSeries
    meta: SessionMeta
    measured_velocity: float
    direction: Direction
    repetition: int
    start_index: int
    stop_index: int
    flags: Tuple[str, ...] = ()

    @property
    def duration(self) -> float:
        return float(self.series.times[-1] - self.series.times[0])

    @property
    def within_tolerance(self) -> bool:
        nominal = self.meta.velocity
        return abs(abs(self.measured_velocity) - nominal) <= Config.VELOCITY_TOLERANCE * nominal


@dataclass
class Segmentation:
    passes: List[Pass] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)

    def __len__(self):
        return len(self.passes)


def _reversals(x_mm: np.ndarray, travel: float) -> List[Tuple[int, int, int]]:
    """
    Tramos semiabiertos [inicio, fin) entre inversiones de sentido.

    Una inversión solo cuenta tras retroceder al menos `travel` mm desde el
    extremo; la muestra del extremo pertenece al tramo que termina.
    """
    segments = []
    start, extreme, direction = 0, 0, 0
    for i in range(1, x_mm.size):
        if direction == 0:
            if abs(x_mm[i] - x_mm[start]) >= travel:
                direction = 1 if x_mm[i] > x_mm[start] else -1
                extreme = i
        elif (x_mm[i] - x_mm[extreme]) * direction > 0:
            extreme = i
        elif (x_mm[extreme] - x_mm[i]) * direction >= travel:
            segments.append((start, extreme + 1, direction))
            start = extreme + 1
            direction = -direction
            window = x_mm[start:i + 1] * direction
            extreme = start + int(np.argmax(window))
    if direction != 0 and extreme >= start:
        segments.append((start, extreme + 1, direction))

    trimmed = []
    for begin, end, sign in segments:
        # Fuera la espera inicial sobre el mismo punto
        while begin + 1 < end and x_mm[begin + 1] == x_mm[begin]:
            begin += 1
        trimmed.append((begin, end, sign))
    return trimmed


def segment_passes(
    records: Union[ParsedLog, Sequence[LogRecord]],
    meta: SessionMeta,
    contact_index: int = 0,
    rate: Optional[float] = None,
    source: str = '',
) -> Segmentation:
    """
    Pasadas delimitadas por inversiones del encoder x con >= 1 mm de recorrido.

    La velocidad medida es la pendiente por mínimos cuadrados de x frente a t.
    Menos pasadas que las declaradas en meta se marcan, no son un error.
    """
    parsed = records if isinstance(records, ParsedLog) else ParsedLog(records=list(records))
    arrays = parsed.arrays()
    if rate is None:
        rate = parsed.rate if len(parsed) > 1 or 'rate_hz' in parsed.comments else 1.0
    times = arrays['t'][contact_index:]
    x_mm = arrays['x'][contact_index:] * 1e-3

    result = Segmentation()
    counters = {'+x': 0, '-x': 0}
    for begin, end, sign in _reversals(x_mm, Config.MIN_PASS_TRAVEL):
        direction = '+x' if sign > 0 else '-x'
        first, stop = begin + contact_index, end + contact_index
        duration = float(times[end - 1] - times[begin])
        if duration <= Config.MIN_PASS_DURATION or end - begin < 2:
            result.flags.append(f"short-pass:{first}-{stop}")
            continue
        if meta.direction != 'both' and direction != meta.direction:
            result.flags.append(f"unexpected-direction:{first}-{stop}")
            continue

        velocity = float(np.polyfit(times[begin:end], x_mm[begin:end], 1)[0])
        counters[direction] += 1
        flags = []
        # Un instante repetido conserva la primera muestra
        keep = np.r_[True, np.diff(arrays['t'][first:stop]) > 0]
        duplicates = int(keep.size - np.count_nonzero(keep))
        if duplicates:
            logger.warning("Pasada %s-%s: %d marcas de tiempo repetidas descartadas",
                           first, stop, duplicates)
            flags.append(f"duplicate-timestamps:{duplicates}")
        series = FieldSeries(
            times=arrays['t'][first:stop][keep],
            bx=arrays['bx'][first:stop][keep],
            by=arrays['by'][first:stop][keep],
            bz=arrays['bz'][first:stop][keep],
            rate=rate,
            meta={
                'provenance': 'ingested', 'source': source, 'design': meta.design,
                'material': meta.material, 'velocity': meta.velocity, 'direction': direction,
                'repetition': counters[direction], 'trial': meta.trial,
            },
        )
        item = Pass(series, meta, velocity, direction, counters[direction], first, stop)
        if not item.within_tolerance:
            logger.warning("Pasada %s-%s a %.1f mm/s, declarada %.1f mm/s", first, stop,
                           abs(velocity), meta.velocity)
            flags.append('velocity-out-of-tolerance')
        if flags:
            item = Pass(series, meta, velocity, direction, counters[direction], first, stop,
                        tuple(flags))
        result.passes.append(item)

    if not result.passes:
        result.flags.append('no-travel')
    if len(result.passes) < meta.expected_passes:
        result.flags.append(f"incomplete:{len(result.passes)}/{meta.expected_passes}")
        logger.warning("%s: %d pasadas de %d esperadas", source or 'registro',
                       len(result.passes), meta.expected_passes)
    return result


def ingest_log(
    path,
    meta: SessionMeta,
    alpha: float = Config.EMA_ALPHA,
    threshold: float = Config.CONTACT_THRESHOLD,
) -> Segmentation:
    """Lee, detecta el contacto en z y segmenta un registro"""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"No se pudo leer {path}: {exc}") from exc
    parsed = parse_log(data)
    if not parsed.records:
        raise NoContactError(f"{path}: registro sin muestras")
    contact = detect_contact([r.bz for r in parsed.records], alpha, threshold)
    if contact is None:
        raise NoContactError(f"{path}: no se detectó contacto (umbral {threshold} LSB)")
    logger.debug("%s: contacto en la muestra %d", path.name, contact)
    return segment_passes(parsed, meta, contact, source=str(path))


def load_manifest(path) -> List[Tuple[Path, SessionMeta]]:
    """
    Manifiesto TOML con tablas [[session]]; las rutas relativas se
    resuelven respecto al directorio del manifiesto.
    """
    path = Path(path)
    try:
        document = tomllib.loads(path.read_text(encoding='utf-8'))
    except OSError as exc:
        raise ConfigError(f"No se pudo leer el manifiesto {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML inválido en {path}: {exc}") from exc

    sessions = document.get('session', [])
    if not isinstance(sessions, list):
        raise ConfigError("se esperaba una lista de tablas", 'session')
    entries = []
    for i, table in enumerate(sessions):
        key = f"session[{i}]"
        try:
            log_path = Path(table['path'])
            meta = SessionMeta(
                design=str(table['design']),
                material=str(table['material']),
                velocity=float(table['velocity']),
                direction=str(table.get('direction', 'both')),
                repetitions=int(table.get('repetitions', 3)),
                trial=int(table.get('trial', 1)),
            )
        except KeyError as exc:
            raise ConfigError(f"falta la clave {exc.args[0]!r}", key) from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"valor inválido ({exc})", key) from None
        try:
            meta.validate()
        except ConfigError as exc:
            raise ConfigError(str(exc), key) from None
        entries.append((log_path if log_path.is_absolute() else path.parent / log_path, meta))
    return entries


def save_pass_index(passes: Sequence[Pass], path, comments: Optional[Dict[str, Any]] = None):
    rows = []
    for number, item in enumerate(passes):
        rows.append([
            number, item.series.meta.get('source', ''), item.meta.design, item.meta.material,
            item.meta.velocity, item.measured_velocity, item.direction, item.repetition,
            item.meta.trial, float(item.series.times[0]), float(item.series.times[-1]),
            len(item.series), ';'.join(item.flags),
        ])
    write_csv(path, PASS_INDEX_HEADER, rows, comments)
