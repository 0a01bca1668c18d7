"""Field snapshots and diagnostics time series.

Snapshot layout (version 1, all little-endian)::

    offset  size  field
    0       8     magic b"ZKSNAP\\x00\\x01"
    8       4     uint32 format version
    12      4     uint32 d
    16      4     uint32 Nx
    20      4     uint32 Nt1
    24      4     uint32 Nt2 (0 when d = 1)
    28      4     uint32 transverse bc (0 dirichlet, 1 periodic)
    32      8     float64 time stamp
    40      8     uint64 number of float64 payload values
    48      4     uint32 CRC-32 of the payload bytes
    52      ...   payload: float64 pairs (re, im) of the coefficient array in
                  C order over (k, n[, m]); k and periodic indices in FFT order
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
import struct
import zlib

import numpy as np

from .domain import DIRICHLET, EXP, PERIODIC, SIN, Basis, DomainSpec, SpectralField, build_domain
from .timestepper import DiagnosticsRecord

MAGIC = b"ZKSNAP\x00\x01"
VERSION = 1
_HEADER = struct.Struct("<8sIIIIIIdQI")
_BC_CODES = {DIRICHLET: 0, PERIODIC: 1}


class SnapshotError(ValueError):
    """Unreadable or corrupt snapshot file."""


class DimensionMismatchError(SnapshotError):
    """Snapshot resolution differs from the requested domain."""


class DiagnosticsError(RuntimeError):
    """Diagnostics file could not be appended to."""


def write_snapshot(u: SpectralField, path: str | Path, t: float = 0.0) -> None:
    if any(k not in (SIN, EXP) for k in u.kinds):
        raise ValueError("only fields in the admissible basis can be stored")
    spec = u.basis.spec
    payload = np.ascontiguousarray(u.coeffs, dtype="<c16").view("<f8").tobytes()
    header = _HEADER.pack(MAGIC, VERSION, spec.d, spec.Nx, spec.Nt1,
                          spec.Nt2 if spec.d == 2 else 0, _BC_CODES[spec.transverse_bc],
                          float(t), len(payload) // 8, zlib.crc32(payload))
    Path(path).write_bytes(header + payload)


def read_snapshot_header(path: str | Path) -> tuple[DomainSpec, float, bytes]:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise SnapshotError(f"{path}: {exc.strerror}") from None
    if len(blob) < _HEADER.size:
        raise SnapshotError(f"{path}: corrupt snapshot (truncated header)")
    magic, version, d, Nx, Nt1, Nt2, bc, t, count, crc = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: corrupt snapshot (bad magic)")
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {version}")
    codes = {v: k for k, v in _BC_CODES.items()}
    if bc not in codes or d not in (1, 2):
        raise SnapshotError(f"{path}: corrupt snapshot (bad header fields)")
    payload = blob[_HEADER.size:]
    if len(payload) != 8 * count:
        raise SnapshotError(f"{path}: corrupt snapshot (payload has {len(payload)} bytes, "
                            f"header announces {8 * count})")
    if zlib.crc32(payload) != crc:
        raise SnapshotError(f"{path}: corrupt snapshot (checksum mismatch)")
    try:
        spec = DomainSpec(d=d, Nx=Nx, Nt1=Nt1, Nt2=Nt2 if d == 2 else DomainSpec.Nt2,
                          transverse_bc=codes[bc])
    except ValueError as exc:
        raise SnapshotError(f"{path}: corrupt snapshot ({exc})") from None
    expected = 2 * math.prod(spec.shape)
    if count != expected:
        raise SnapshotError(f"{path}: corrupt snapshot (payload size does not match header)")
    return spec, t, payload


def _signed_positions(N: int) -> np.ndarray:
    return np.where(np.arange(N) <= N // 2, np.arange(N), np.arange(N) - N)


def _resample_axis(c: np.ndarray, axis: int, n_new: int, signed: bool) -> np.ndarray:
    """Zero-pad or truncate one axis; Nyquist entries are dropped."""
    n_old = c.shape[axis]
    shape = list(c.shape)
    shape[axis] = n_new
    out = np.zeros(shape, dtype=c.dtype)
    if not signed:
        m = min(n_old, n_new)
        src = [slice(None)] * c.ndim
        src[axis] = slice(0, m)
        out[tuple(src)] = c[tuple(src)]
        return out
    old = _signed_positions(n_old)
    limit = min(n_old, n_new) // 2
    for j in range(n_old):
        q = old[j]
        if abs(q) >= limit:
            continue
        src = [slice(None)] * c.ndim
        dst = [slice(None)] * c.ndim
        src[axis] = j
        dst[axis] = q % n_new
        out[tuple(dst)] = c[tuple(src)]
    return out


def read_snapshot(path: str | Path, basis: Basis | None = None,
                  resample: bool = False) -> tuple[SpectralField, float]:
    """Read a field and its time stamp.

    With ``basis`` the stored resolution must match unless ``resample``
    is set, in which case coefficients are zero-padded or truncated.
    """
    spec, t, payload = read_snapshot_header(path)
    coeffs = np.frombuffer(payload, dtype="<f8").view("<c16").reshape(spec.shape)
    coeffs = coeffs.astype(complex)
    if basis is None:
        return SpectralField(coeffs, build_domain(spec)), t
    target = basis.spec
    if target.d != spec.d or target.transverse_bc != spec.transverse_bc:
        raise DimensionMismatchError(
            f"{path}: snapshot is d={spec.d} {spec.transverse_bc}, "
            f"domain is d={target.d} {target.transverse_bc}")
    if target.shape != spec.shape:
        if not resample:
            raise DimensionMismatchError(f"{path}: snapshot shape {spec.shape} does not match "
                                         f"domain shape {target.shape}")
        coeffs = _resample_axis(coeffs, 0, target.Nx, signed=True)
        for i, n in enumerate(target.transverse_sizes):
            coeffs = _resample_axis(coeffs, i + 1, n, signed=target.transverse_bc == PERIODIC)
    return SpectralField(coeffs, basis), t


# -- diagnostics ---------------------------------------------------------------

COLUMNS = DiagnosticsRecord.COLUMNS


def _last_row(path: Path) -> list[str] | None:
    with path.open("rb") as fh:
        fh.seek(0, 2)
        size = fh.tell()
        chunk = min(size, 8192)
        fh.seek(size - chunk)
        tail = fh.read().decode().strip().splitlines()
    return tail[-1].split(",") if tail else None


def format_value(v: float) -> str:
    return repr(float(v))


def append_diagnostics(record: DiagnosticsRecord, path: str | Path) -> None:
    """Append one CSV row, writing the header when the file is new.

    Rows must have strictly increasing t, also across reopenings.
    """
    path = Path(path)
    try:
        fresh = not path.exists() or path.stat().st_size == 0
        if not fresh:
            with path.open() as fh:
                header = fh.readline().strip().split(",")
            if tuple(header) != COLUMNS:
                raise DiagnosticsError(f"{path}: existing header does not match the column order")
            last = _last_row(path)
            if last and last[0] != "t" and float(last[0]) >= record.t:
                raise DiagnosticsError(f"{path}: t={record.t!r} does not increase past {last[0]}")
        with path.open("a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if fresh:
                w.writerow(COLUMNS)
            w.writerow([format_value(v) for v in record.row()])
    except OSError as exc:
        raise DiagnosticsError(f"{path}: {exc.strerror or exc}") from None


def read_diagnostics(path: str | Path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}
