"""
Campo de dipolo puntual y cuantización del magnetómetro
"""
import logging
from typing import Dict, Optional, Tuple

import numpy as np

from .config import MagnetModel, MagnetometerLayout, Config
from .csvio import read_csv, write_csv
from .errors import DataError, SingularPositionError
from .models import FieldSeries, MagnetTrajectory

logger = logging.getLogger(__name__)

FIELD_HEADER = ('t_s', 'bx_lsb', 'by_lsb', 'bz_lsb')
MU0_OVER_4PI = 1e-7


def dipole_field_series(
    magnet: MagnetModel,
    x_disp: np.ndarray,
    z_disp: np.ndarray,
    rotation: np.ndarray,
    sensor_pos: Tuple[float, float, float],
) -> np.ndarray:
    """
    B = (µ0/4π)·[3 r̂ (m·r̂) - m] / |r|³ para cada pose.

    x_disp, z_disp: µm; rotation: mrad alrededor de y; sensor_pos: mm
    Returns: matriz (n, 3) en µT
    """
    x_disp = np.atleast_1d(np.asarray(x_disp, dtype=float))
    z_disp = np.atleast_1d(np.asarray(z_disp, dtype=float))
    theta = np.atleast_1d(np.asarray(rotation, dtype=float)) * 1e-3

    centers = np.stack([x_disp * 1e-3, np.zeros_like(x_disp), z_disp * 1e-3], axis=1)
    r = (np.asarray(sensor_pos, dtype=float)[None, :] - centers) * 1e-3  # m
    distance = np.linalg.norm(r, axis=1)
    too_close = distance < Config.MIN_SENSOR_DISTANCE * 1e-3
    if np.any(too_close):
        index = int(np.flatnonzero(too_close)[0])
        raise SingularPositionError(
            f"Sensor a {distance[index] * 1e3:.3f} mm del centro del imán (muestra {index})"
        )

    # Rotación del eje de reposo alrededor de y
    ax, ay, az = magnet.axis
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    moment = magnet.moment * np.stack(
        [ax * cos_t + az * sin_t, np.full_like(theta, ay), -ax * sin_t + az * cos_t], axis=1
    )

    unit = r / distance[:, None]
    projection = np.sum(moment * unit, axis=1)
    field = MU0_OVER_4PI * (3.0 * unit * projection[:, None] - moment) / distance[:, None] ** 3
    return field * 1e6


def dipole_field(
    magnet: MagnetModel,
    pose: Tuple[float, float, float],
    sensor_pos: Tuple[float, float, float],
) -> Tuple[float, float, float]:
    """
    Campo (µT) en sensor_pos para una pose (x µm, z µm, θ mrad) del imán.
    """
    x, z, theta = pose
    bx, by, bz = dipole_field_series(magnet, x, z, theta, sensor_pos)[0]
    return float(bx), float(by), float(bz)


def quantize(b, layout: MagnetometerLayout) -> np.ndarray:
    """
    Redondeo al entero más cercano de b / conversión, saturando en la cota
    del conversor (empates al par).
    """
    counts = np.rint(np.asarray(b, dtype=float) / layout.conversion)
    bound = layout.count_bound
    return np.clip(counts, -bound, bound).astype(np.int64)


def trajectory_to_field(
    trajectory: MagnetTrajectory,
    magnet: MagnetModel,
    layout: MagnetometerLayout,
    meta: Optional[Dict[str, object]] = None,
) -> FieldSeries:
    """Una lectura cuantizada por muestra de la trayectoria"""
    magnet.validate()
    layout.validate(magnet)
    if len(trajectory) < 2:
        raise DataError("La trayectoria necesita al menos 2 muestras")

    field = dipole_field_series(magnet, trajectory.x_disp, trajectory.z_disp,
                                trajectory.rotation, layout.position)
    raw = np.rint(field / layout.conversion)
    saturated = int(np.count_nonzero(np.abs(raw) > layout.count_bound))
    if saturated:
        logger.warning("%d lecturas saturadas en ±%d LSB", saturated, layout.count_bound)
    counts = quantize(field, layout)

    info = dict(meta or {})
    info.update(provenance='simulated', saturated=saturated)
    return FieldSeries(times=trajectory.times, bx=counts[:, 0], by=counts[:, 1],
                       bz=counts[:, 2], rate=trajectory.rate, meta=info)


def save_field_csv(series: FieldSeries, path, comments: Optional[Dict[str, object]] = None):
    """Mismo esquema para datos simulados y adquiridos"""
    header_comments = {'rate_hz': repr(float(series.rate))}
    header_comments.update({f"meta.{k}": v for k, v in series.meta.items()})
    header_comments.update(comments or {})
    rows = zip(series.times.tolist(), series.bx.tolist(), series.by.tolist(),
               series.bz.tolist())
    write_csv(path, FIELD_HEADER, rows, header_comments)


def load_field_csv(path) -> FieldSeries:
    table = read_csv(path)
    if tuple(table.header) != FIELD_HEADER:
        raise DataError(f"{path}: cabecera inesperada {table.header}")
    try:
        times = np.array(table.column('t_s'), dtype=float)
        counts = [np.array(table.column(name), dtype=np.int64) for name in FIELD_HEADER[1:]]
    except ValueError as exc:
        raise DataError(f"{path}: valor no numérico ({exc})") from None
    meta = {k[len('meta.'):]: v for k, v in table.comments.items() if k.startswith('meta.')}
    if 'rate_hz' in table.comments:
        rate = float(table.comments['rate_hz'])
    elif times.size > 1:
        rate = (times.size - 1) / (times[-1] - times[0])
    else:
        raise DataError(f"{path}: no se puede deducir la frecuencia de muestreo")
    series = FieldSeries(times, counts[0], counts[1], counts[2], rate, meta)
    return series
