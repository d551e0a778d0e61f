"""CSV and JSON readers and writers for the package's records.

Files use SI units (Hz, ohm, F) except where a column name says otherwise
(``c_tuning_pf``, ``r_kohm``). Floats are written in shortest round-trip
form, so a write followed by a read reproduces values exactly. All writes are
atomic: data go to a temporary file in the target directory, then renamed.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .circuit import ImpedanceTrace
from .errors import ConfigError
from .inference import ScanResult, SwitchMeasurement
from .quantum import Lineshape
from .spectra import Spectrum, TransmissionTrace

IMPEDANCE_HEADER = ("freq_hz", "re_ohm", "im_ohm")
SPECTRUM_HEADER = ("freq_hz", "psd")
TRANSMISSION_HEADER = ("freq_hz", "s21_re", "s21_im")
CAL_COLUMNS = ("cal_re", "cal_im")
LINESHAPE_HEADER = ("offset_hz", "density_per_hz")
MEASUREMENT_HEADER = ("c_tuning_pf", "r_kohm", "eta")
SCAN_HEADER = ("c_tuning_pf", "r_kohm", "eta", "meets_constraints")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return repr(float(x))


def atomic_write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return atomic_write_bytes(path, buf.getvalue().encode("ascii"))


def read_table(path, required: Sequence[str]) -> dict[str, np.ndarray]:
    """Columns of a CSV file as float arrays, keyed by header name."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except FileNotFoundError:
        raise ConfigError(f"input file not found: {path}") from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ConfigError(f"{path}: empty file") from None
    missing = [c for c in required if c not in header]
    if missing:
        raise ConfigError(f"{path}: missing columns {missing}; found {header}")
    rows = [r for r in reader if r]
    cols = {}
    for j, name in enumerate(header):
        values = []
        for i, row in enumerate(rows):
            cell = row[j].strip().lower() if j < len(row) else ""
            if cell in ("true", "false"):
                values.append(1.0 if cell == "true" else 0.0)
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise ConfigError(f"{path}: row {i + 2}, column {name!r}: bad number {cell!r}") from None
        cols[name] = np.array(values, dtype=float)
    return cols


def write_json(path, obj) -> Path:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    return atomic_write_bytes(path, text.encode("utf-8"))


# records -------------------------------------------------------------------


def write_impedance(path, trace: ImpedanceTrace) -> Path:
    return write_table(path, IMPEDANCE_HEADER, zip(trace.freq, trace.re, trace.im))


def read_impedance(path) -> ImpedanceTrace:
    c = read_table(path, IMPEDANCE_HEADER)
    return ImpedanceTrace(c["freq_hz"], c["re_ohm"] + 1j * c["im_ohm"])


def write_spectrum(path, spec: Spectrum) -> Path:
    return write_table(path, SPECTRUM_HEADER, zip(spec.freq, spec.value))


def read_spectrum(path) -> Spectrum:
    c = read_table(path, SPECTRUM_HEADER)
    return Spectrum(c["freq_hz"], c["psd"])


def write_transmission(path, trace: TransmissionTrace) -> Path:
    return write_table(path, TRANSMISSION_HEADER, zip(trace.freq, trace.s21.real, trace.s21.imag))


def read_transmission(path) -> TransmissionTrace:
    """Transmission trace; optional ``cal_re,cal_im`` gain columns are divided out."""
    c = read_table(path, TRANSMISSION_HEADER)
    s21 = c["s21_re"] + 1j * c["s21_im"]
    if all(k in c for k in CAL_COLUMNS):
        cal = c["cal_re"] + 1j * c["cal_im"]
        if np.any(cal == 0):
            raise ConfigError(f"{path}: calibration gain has zeros")
        s21 = s21 / cal
    return TransmissionTrace(c["freq_hz"], s21)


def write_lineshape(path, shape: Lineshape) -> Path:
    return write_table(path, LINESHAPE_HEADER, zip(shape.offset, shape.density))


def read_lineshape(path) -> Lineshape:
    c = read_table(path, LINESHAPE_HEADER)
    return Lineshape(c["offset_hz"], c["density_per_hz"])


def write_measurements(path, data: Sequence[SwitchMeasurement]) -> Path:
    rows = ((m.c_tuning * 1e12, m.r_off_state * 1e-3, m.eta) for m in data)
    return write_table(path, MEASUREMENT_HEADER, rows)


def read_measurements(path) -> list[SwitchMeasurement]:
    c = read_table(path, MEASUREMENT_HEADER)
    return [
        SwitchMeasurement(ct * 1e-12, r * 1e3, eta)
        for ct, r, eta in zip(c["c_tuning_pf"], c["r_kohm"], c["eta"])
    ]


def write_scan(path, scan: ScanResult) -> Path:
    rows = zip(scan.c_tuning * 1e12, scan.r_off_state * 1e-3, scan.eta, scan.meets)
    return write_table(path, SCAN_HEADER, rows)
