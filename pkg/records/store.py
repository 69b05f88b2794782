import csv
import io
import json
import os
import tempfile
import threading
from contextlib import contextmanager
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import structlog

from core.errors import DataIOError, RecordFormatError, RingthermError
from core.stats import EnsembleRecord

logger = structlog.get_logger()

RUN_KIND = "ringtherm-run"
FORMAT_VERSION = 1
RECORD_KEYS = ("realization_seed", "n_sites", "excited_site", "couplings", "normalized_intensities")


def format_float(x: float) -> str:
    """Decimal text at 17 significant digits."""
    return format(float(x), ".17g")


def _float_list(values: Iterable[float]) -> str:
    return "[" + ", ".join(format_float(v) for v in values) + "]"


def record_to_line(record: EnsembleRecord) -> str:
    """One JSON object with fixed key order and 17-digit floats."""
    parts = [
        f'"realization_seed": {int(record.realization_seed)}',
        f'"n_sites": {int(record.n_sites)}',
        f'"excited_site": {int(record.excited_site)}',
        f'"couplings": {_float_list(record.couplings)}',
        f'"normalized_intensities": {_float_list(record.normalized_intensities)}',
    ]
    if record.amplitudes is not None:
        pairs = ", ".join(f"[{format_float(a.real)}, {format_float(a.imag)}]" for a in record.amplitudes)
        parts.append(f'"amplitudes": [{pairs}]')
    return "{" + ", ".join(parts) + "}"


def record_from_dict(data: Dict[str, Any]) -> EnsembleRecord:
    missing = [k for k in RECORD_KEYS if k not in data]
    if missing:
        raise RecordFormatError(f"record is missing {', '.join(missing)}")
    amplitudes = data.get("amplitudes")
    try:
        return EnsembleRecord(
            realization_seed=int(data["realization_seed"]),
            couplings=tuple(float(c) for c in data["couplings"]),
            normalized_intensities=tuple(float(i) for i in data["normalized_intensities"]),
            excited_site=int(data["excited_site"]),
            n_sites=int(data["n_sites"]),
            amplitudes=None if amplitudes is None else tuple(complex(re, im) for re, im in amplitudes),
        )
    except RingthermError as e:
        raise RecordFormatError(f"invalid record: {e}")
    except (TypeError, ValueError) as e:
        raise RecordFormatError(f"malformed record: {e}")


@contextmanager
def atomic_write(path: str, mode: str = "w") -> Iterator[io.IOBase]:
    """
    Write to a temp file beside `path`, then rename over it.
    On any error the temp file is removed and `path` is left untouched.
    """
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    except OSError as e:
        raise DataIOError(f"cannot write {path}: {e}")
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None) as f:
            yield f
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise


def write_text(path: str, text: str) -> str:
    try:
        with atomic_write(path) as f:
            f.write(text)
    except OSError as e:
        raise DataIOError(f"cannot write {path}: {e}")
    return path


def _csv_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    return write_text(path, render_csv(header, rows))


def write_json(path: str, obj: Any) -> str:
    return write_text(path, json.dumps(obj, indent=2) + "\n")


class RunRecordStore:
    """
    Line-delimited JSON run records.

    First line: a header object {"kind": "ringtherm-run", ...} with the run
    metadata. Every other line: one EnsembleRecord. Files without a header
    are accepted on read.
    """

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.RLock()

    def write(self, records: Sequence[EnsembleRecord], metadata: Optional[Dict[str, Any]] = None) -> int:
        header = {"kind": RUN_KIND, "version": FORMAT_VERSION, **(metadata or {})}
        with self._lock:
            try:
                with atomic_write(self.path) as f:
                    f.write(json.dumps(header) + "\n")
                    for record in records:
                        f.write(record_to_line(record) + "\n")
            except OSError as e:
                raise DataIOError(f"cannot write run file {self.path}: {e}")
        logger.info("records_written", path=self.path, records=len(records))
        return len(records)

    def read(self) -> Tuple[Dict[str, Any], List[EnsembleRecord]]:
        header: Dict[str, Any] = {}
        records: List[EnsembleRecord] = []
        with self._lock:
            try:
                with open(self.path, "r") as f:
                    lines = f.readlines()
            except OSError as e:
                raise DataIOError(f"cannot read run file {self.path}: {e}")
        for lineno, line in enumerate(lines, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise RecordFormatError(f"{self.path}:{lineno}: corrupt record ({e.msg})")
            if not isinstance(data, dict):
                raise RecordFormatError(f"{self.path}:{lineno}: expected a JSON object")
            if data.get("kind") == RUN_KIND:
                header = data
                continue
            try:
                records.append(record_from_dict(data))
            except RecordFormatError as e:
                raise RecordFormatError(f"{self.path}:{lineno}: {e}")
        if not records:
            raise RecordFormatError(f"{self.path}: no records")
        logger.info("records_read", path=self.path, records=len(records))
        return header, records
