"""
Modelo mecánico concentrado del sensor

Sustituye al FEM por tres sistemas masa-resorte-amortiguador desacoplados
(z, x, θ) excitados por la envolvente de contacto rígida de la punta.
"""
import logging
from dataclasses import astuple, dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .config import (
    PSI_TO_PA, Config, ElastomerStack, MagnetModel, ScanConfig, SuspensionModel,
)
from .csvio import read_csv, write_csv
from .errors import ConfigError, DataError, IntegrationDivergedError, PatchOutsideSurfaceError
from .models import MagnetTrajectory, SurfaceProfile
from .tips import TipGeometry

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ('t_s', 'x_um', 'z_um', 'theta_mrad')
_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class SuspensionParams:
    """
    k_x, k_z: N/m
    k_theta: N·m/rad
    m_eff: kg
    zeta: adimensional
    """
    k_x: float
    k_z: float
    k_theta: float
    m_eff: float
    zeta: float

    def __iter__(self):
        return iter(astuple(self))


def contact_envelope(
    tip: TipGeometry,
    surface: SurfaceProfile,
    x_center: float,
    preload_depth: float,
    load_sharing: float = Config.LOAD_SHARING,
) -> Tuple[float, float]:
    """
    Contacto cinemático de punta rígida.

    Returns: (z_base en µm, inclinación en mrad)
    """
    z_base, tilt = envelope_series(tip, surface, np.array([x_center], dtype=float),
                                   preload_depth, load_sharing)
    return float(z_base[0]), float(tilt[0])


def envelope_series(
    tip: TipGeometry,
    surface: SurfaceProfile,
    centers: np.ndarray,
    preload_depth: float,
    load_sharing: float = Config.LOAD_SHARING,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Versión vectorizada de contact_envelope para muchos centros.

    Los apoyos son las muestras de la superficie que caen bajo las zonas de
    apoyo de la punta, con el desplazamiento de la punta en su posición:

        top = max(altura + desplazamiento)
        z_base = top - preload_depth + load_sharing * (media_apoyo - top)

    media_apoyo es la altura media de la superficie bajo las zonas que
    reparten la carga (integral exacta del perfil lineal a trozos). Con
    load_sharing = 0 queda la envolvente rígida pura.

    La inclinación es la pendiente entre el apoyo más alto y el apoyo más
    alto separado al menos un cuarto del parche.
    """
    centers = np.asarray(centers, dtype=float)
    if not 0 <= load_sharing <= 1:
        raise ConfigError("load_sharing debe estar en [0, 1]", 'model.load_sharing')
    width = tip.patch_width(preload_depth)
    tolerance = 1e-9 * max(1.0, surface.length)
    if centers.size and (centers.min() - width / 2 < -tolerance
                         or centers.max() + width / 2 > surface.length + tolerance):
        raise PatchOutsideSurfaceError(
            f"El parche de {width} mm sale de la superficie de {surface.length} mm"
        )

    heights = surface.heights
    spacing = surface.spacing
    last = heights.size - 1
    regions = tip.support_regions(preload_depth)
    bearing = tip.bearing_regions(preload_depth)
    cumulative = _cumulative_heights(heights, spacing)

    # Columnas de muestras por zona: una más de las que caben siempre
    columns = np.floor((regions[:, 1] - regions[:, 0]) / spacing).astype(int) + 2
    region_of = np.repeat(np.arange(len(regions)), columns)
    step = np.concatenate([np.arange(n) for n in columns])
    upper = regions[region_of, 1]
    separation = width / 4.0

    z_base = np.empty(centers.size)
    tilt = np.empty(centers.size)
    chunk = max(1, _CHUNK_ELEMENTS // step.size)

    for start in range(0, centers.size, chunk):
        block = centers[start:start + chunk]
        rows = np.arange(block.size)
        first = np.ceil((block[:, None] + regions[None, :, 0]) / spacing - 1e-9).astype(int)
        index = first[:, region_of] + step[None, :]
        position = index * spacing
        u = position - block[:, None]
        inside = (index >= 0) & (index <= last) & (u <= upper[None, :] + 1e-9)
        offsets = tip.support_offset(u, preload_depth)
        supports = np.where(inside & np.isfinite(offsets),
                            heights[np.clip(index, 0, last)] + offsets, -np.inf)

        best = np.argmax(supports, axis=1)
        top = supports[rows, best]
        if not np.all(np.isfinite(top)):
            raise DataError("Ninguna muestra de la superficie queda bajo la punta; "
                            "aumentar la resolución")
        distance = np.abs(position - position[rows, best][:, None])
        masked = np.where(distance >= separation, supports, -np.inf)
        second = np.argmax(masked, axis=1)
        runner_up = masked[rows, second]

        valid = np.isfinite(runner_up)
        run = np.where(valid, position[rows, second] - position[rows, best], 1.0)
        slope = np.where(valid, (runner_up - top) / run, 0.0)  # µm/mm == mrad

        shared = _bearing_mean(heights, cumulative, spacing, block, bearing)
        z_base[start:start + chunk] = top - preload_depth + load_sharing * (shared - top)
        tilt[start:start + chunk] = np.clip(slope, -Config.MAX_TILT, Config.MAX_TILT)

    return z_base, tilt


def _cumulative_heights(heights: np.ndarray, spacing: float) -> np.ndarray:
    """Integral (µm·mm) desde x=0 hasta cada muestra, regla del trapecio"""
    return np.concatenate([[0.0], np.cumsum((heights[:-1] + heights[1:]) * (spacing / 2.0))])


def _integral_to(x: np.ndarray, heights: np.ndarray, cumulative: np.ndarray,
                 spacing: float) -> np.ndarray:
    """Integral exacta del perfil lineal a trozos sobre [0, x]"""
    x = np.clip(x, 0.0, (heights.size - 1) * spacing)
    cell = np.clip(np.floor(x / spacing).astype(int), 0, heights.size - 2)
    t = x - cell * spacing
    slope = (heights[cell + 1] - heights[cell]) / spacing
    return cumulative[cell] + heights[cell] * t + 0.5 * slope * t * t


def _bearing_mean(heights: np.ndarray, cumulative: np.ndarray, spacing: float,
                  centers: np.ndarray, regions: np.ndarray) -> np.ndarray:
    """Altura media de la superficie bajo las zonas que reparten la carga"""
    lower = centers[:, None] + regions[None, :, 0]
    upper = centers[:, None] + regions[None, :, 1]
    area = (_integral_to(upper, heights, cumulative, spacing)
            - _integral_to(lower, heights, cumulative, spacing))
    return np.sum(area, axis=1) / float(np.sum(regions[:, 1] - regions[:, 0]))


def suspension_params(
    stack: ElastomerStack,
    tip: Optional[TipGeometry],
    magnet_size: float,
    model: SuspensionModel = SuspensionModel(),
) -> SuspensionParams:
    """
    Rigideces, masa efectiva y amortiguamiento del modelo concentrado.

    La geometría de la punta no cambia la rigidez del apoyo en este modelo;
    se recibe para validar el conjunto.
    magnet_size: arista del imán en mm
    """
    stack.validate()
    model.validate()
    if tip is not None:
        tip.validate()

    t1 = stack.epidermis_thickness * 1e-3
    t2 = stack.dermis_thickness * 1e-3
    total = stack.total_thickness * 1e-3
    e1 = stack.epidermis_modulus * PSI_TO_PA
    e2 = stack.dermis_modulus * PSI_TO_PA
    e_series = total / (t1 / e1 + t2 / e2)

    edge = magnet_size * 1e-3
    bearing_area = edge ** 2 * model.shape_factor
    k_z = e_series * bearing_area / total
    magnet_mass = model.magnet_density * edge ** 3

    return SuspensionParams(
        k_x=k_z * model.k_x_ratio,
        k_z=k_z,
        k_theta=k_z * (edge / 2.0) ** 2,
        m_eff=magnet_mass * (1.0 + model.mass_participation),
        zeta=model.damping_ratio,
    )


def simulate_scan(
    tip: TipGeometry,
    stack: ElastomerStack,
    surface: SurfaceProfile,
    scan: ScanConfig,
    magnet: MagnetModel = MagnetModel(),
    model: SuspensionModel = SuspensionModel(),
) -> MagnetTrajectory:
    """
    Integra los tres grados de libertad con RK4 de paso fijo a sim_rate y
    diezma a output_rate. Determinista.
    """
    scan.validate()
    magnet.validate()
    params = suspension_params(stack, tip, magnet.edge, model)

    width = tip.patch_width(scan.preload_depth)
    available = surface.length - width - scan.start_offset
    if scan.travel > available + 1e-9:
        raise DataError(
            f"El barrido recorre {scan.travel:.3f} mm pero solo hay {available:.3f} mm disponibles"
        )

    step = 1.0 / scan.sim_rate
    n_steps = int(round(scan.duration * scan.sim_rate))
    if scan.direction == '+x':
        x0 = width / 2.0 + scan.start_offset
    else:
        x0 = surface.length - width / 2.0 - scan.start_offset

    # Excitación evaluada en pasos enteros y medios pasos (etapas de RK4)
    half_times = np.arange(2 * n_steps + 1) * (step / 2.0)
    centers = x0 + scan.sign * scan.velocity * half_times
    z_base, tilt = envelope_series(tip, surface, centers, scan.preload_depth,
                                   model.load_sharing)
    z_mean = float(np.mean(z_base[::2]))

    omega_z = np.sqrt(params.k_z / params.m_eff)
    omega_x = np.sqrt(params.k_x / params.m_eff)
    omega_theta = np.sqrt(params.k_theta / (params.m_eff * (magnet.edge * 1e-3 / 2.0) ** 2))
    tangential = model.friction_coefficient * params.k_z / params.k_x

    z_path = _integrate_dof(z_base, omega_z, params.zeta, step)
    x_path = _integrate_dof(tangential * (z_base - z_mean), omega_x, params.zeta, step)
    theta_path = _integrate_dof(tilt, omega_theta, params.zeta, step)

    for path in (z_path, x_path, theta_path):
        bad = np.flatnonzero(~np.isfinite(path))
        if bad.size:
            raise IntegrationDivergedError(bad[0] * step)

    decimation = int(round(scan.sim_rate / scan.output_rate))
    keep = slice(0, n_steps + 1, decimation)
    count = len(range(0, n_steps + 1, decimation))
    times = np.arange(count) / scan.output_rate

    logger.debug("Barrido %s a %.1f mm/s: %d pasos, %d muestras", tip.kind,
                 scan.velocity, n_steps, count)
    return MagnetTrajectory(times=times, x_disp=x_path[keep], z_disp=z_path[keep],
                            rotation=theta_path[keep])


def _integrate_dof(target: Sequence[float], omega: float, zeta: float,
                   step: float) -> np.ndarray:
    """
    q'' = ω²(u - q) - 2ζω q'  con u muestreada en medios pasos.

    Parte del reposo sobre el primer valor de u.
    """
    drive = np.asarray(target, dtype=float).tolist()
    n_steps = (len(drive) - 1) // 2
    stiffness = omega * omega
    damping = 2.0 * zeta * omega
    half = step / 2.0
    sixth = step / 6.0

    q = drive[0]
    p = 0.0
    out = [q]
    for i in range(n_steps):
        u0 = drive[2 * i]
        um = drive[2 * i + 1]
        u1 = drive[2 * i + 2]

        a1 = stiffness * (u0 - q) - damping * p
        q2 = q + half * p
        p2 = p + half * a1
        a2 = stiffness * (um - q2) - damping * p2
        q3 = q + half * p2
        p3 = p + half * a2
        a3 = stiffness * (um - q3) - damping * p3
        q4 = q + step * p3
        p4 = p + step * a3
        a4 = stiffness * (u1 - q4) - damping * p4

        q = q + sixth * (p + 2.0 * p2 + 2.0 * p3 + p4)
        p = p + sixth * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        out.append(q)
    return np.array(out)


def save_trajectory_csv(trajectory: MagnetTrajectory, path, comments=None):
    rows = zip(trajectory.times.tolist(), trajectory.x_disp.tolist(),
               trajectory.z_disp.tolist(), trajectory.rotation.tolist())
    write_csv(path, TRAJECTORY_HEADER, rows, comments)


def load_trajectory_csv(path) -> MagnetTrajectory:
    table = read_csv(path)
    if tuple(table.header) != TRAJECTORY_HEADER:
        raise DataError(f"{path}: cabecera inesperada {table.header}")
    columns = [np.array(table.column(name), dtype=float) for name in TRAJECTORY_HEADER]
    return MagnetTrajectory(*columns)
