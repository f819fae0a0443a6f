"""
Lectura/escritura de CSV con comentarios de procedencia

Formato: líneas '# clave=valor' al inicio, una línea de cabecera y filas.
Las escrituras son atómicas (archivo temporal + rename).
"""
import csv
import io
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

from .errors import DataError


@dataclass
class CsvTable:
    """Contenido de un CSV: comentarios, cabecera y filas de texto"""
    header: List[str]
    rows: List[List[str]]
    comments: Dict[str, str] = field(default_factory=dict)

    def column(self, name: str) -> List[str]:
        try:
            index = self.header.index(name)
        except ValueError:
            raise DataError(f"Falta la columna {name!r}") from None
        return [row[index] for row in self.rows]


def atomic_write_text(path, text: str):
    """Escribe text en path de forma atómica"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_csv(
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    comments: Optional[Mapping[str, Any]] = None,
) -> str:
    buffer = io.StringIO()
    for key, value in (comments or {}).items():
        buffer.write(f"# {key}={value}\n")
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_csv(
    path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    comments: Optional[Mapping[str, Any]] = None,
):
    atomic_write_text(path, format_csv(header, rows, comments))


def parse_csv(text: str) -> CsvTable:
    comments: Dict[str, str] = {}
    lines = text.splitlines()
    body = []
    for line in lines:
        if line.startswith('#'):
            key, sep, value = line[1:].strip().partition('=')
            if sep:
                comments[key.strip()] = value.strip()
            continue
        if line.strip():
            body.append(line)
    if not body:
        raise DataError("CSV sin cabecera")
    reader = csv.reader(body)
    header = next(reader)
    rows = [row for row in reader]
    for number, row in enumerate(rows, 2):
        if len(row) != len(header):
            raise DataError(f"Fila {number} con {len(row)} columnas, se esperaban {len(header)}")
    return CsvTable(header=header, rows=rows, comments=comments)


def read_comments(path) -> Dict[str, str]:
    """Solo los comentarios '# clave=valor' de la cabecera"""
    comments: Dict[str, str] = {}
    try:
        with open(path, encoding='utf-8') as handle:
            for line in handle:
                if not line.startswith('#'):
                    break
                key, sep, value = line[1:].strip().partition('=')
                if sep:
                    comments[key.strip()] = value.strip()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"No se pudo leer {path}: {exc}") from exc
    return comments


def read_csv(path) -> CsvTable:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"No se pudo leer {path}: {exc}") from exc
    try:
        return parse_csv(text)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc
