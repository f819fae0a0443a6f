"""
Jerarquía de excepciones del sistema

Todas derivan de ValueError para que el código que ya captura ValueError
(validación de configuración) siga funcionando.
"""
from typing import Optional, Sequence


class TactilError(Exception):
    """Error base del paquete"""


class ConfigError(TactilError, ValueError):
    """Configuración inválida (código de salida 2)"""

    def __init__(self, message: str, key_path: Optional[str] = None):
        self.key_path = key_path
        self.detail = message
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)


class DataError(TactilError, ValueError):
    """Datos de entrada inválidos o inconsistentes (código de salida 3)"""


class InvalidSpecError(ConfigError):
    """Especificación de superficie inválida (λ o longitud no positivas)"""


class PatchOutsideSurfaceError(DataError):
    """La zona de contacto de la punta sale de la superficie"""


class IntegrationDivergedError(DataError):
    """La integración produjo un estado no finito"""

    def __init__(self, time_s: float):
        self.time_s = time_s
        super().__init__(f"La integración divergió en t={time_s:.6f} s")


class SingularPositionError(DataError):
    """El sensor quedaría dentro (o demasiado cerca) del imán"""


class LogFormatError(DataError):
    """Registro con demasiadas líneas mal formadas"""

    def __init__(self, message: str, line_numbers: Sequence[int] = ()):
        self.line_numbers = list(line_numbers)
        if self.line_numbers:
            shown = ", ".join(str(n) for n in self.line_numbers[:20])
            message = f"{message} (líneas: {shown})"
        super().__init__(message)


class NoContactError(DataError):
    """No se detectó contacto con la superficie"""


class ClassTooSmallError(DataError):
    """Una clase tiene menos miembros que pliegues"""


class SchemaVersionError(DataError):
    """Versiones de esquema incompatibles"""
