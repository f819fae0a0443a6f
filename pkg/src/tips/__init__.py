from typing import Dict, Type

from .base import TipGeometry
from .flat_tip import FlatTip
from .ridged_tip import RidgedTip
from .spherical_ridged_tip import SphericalRidgedTip
from ..errors import ConfigError

TIP_KINDS: Dict[str, Type[TipGeometry]] = {
    FlatTip.kind: FlatTip,
    RidgedTip.kind: RidgedTip,
    SphericalRidgedTip.kind: SphericalRidgedTip,
}


def make_tip(kind: str, **params) -> TipGeometry:
    """Crea y valida una punta a partir de su tipo y parámetros"""
    try:
        tip_class = TIP_KINDS[kind]
    except KeyError:
        raise ConfigError(f"tipo de punta desconocido {kind!r}", 'tip.kind') from None
    try:
        tip = tip_class(**params)
    except TypeError as exc:
        raise ConfigError(f"parámetros inválidos para {kind!r}: {exc}", 'tip') from None
    tip.validate()
    return tip


__all__ = [
    'TipGeometry',
    'FlatTip',
    'RidgedTip',
    'SphericalRidgedTip',
    'TIP_KINDS',
    'make_tip',
]
