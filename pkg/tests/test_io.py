import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zksolver.domain import DomainSpec, build_domain, mode_field, random_field
from zksolver.io import (COLUMNS, DiagnosticsError, DimensionMismatchError, SnapshotError,
                         append_diagnostics, read_diagnostics, read_snapshot,
                         read_snapshot_header, write_snapshot)
from zksolver.operators import SolverParams, diff
from zksolver.timestepper import run

from conftest import CONFIGS


class TestSnapshot:
    def test_round_trip_bitwise(self, basis, rng, tmp_path):
        u = random_field(basis, rng)
        p = tmp_path / "u.zks"
        write_snapshot(u, p, t=0.75)
        v, t = read_snapshot(p)
        assert t == 0.75
        assert v.basis.spec == basis.spec
        assert v.coeffs.tobytes() == u.coeffs.tobytes()

    def test_read_into_domain(self, basis, rng, tmp_path):
        u = random_field(basis, rng)
        write_snapshot(u, tmp_path / "u.zks")
        v, _ = read_snapshot(tmp_path / "u.zks", basis)
        assert np.array_equal(v.coeffs, u.coeffs)

    def test_header(self, tmp_path):
        b = build_domain(DomainSpec(d=2, Nx=16, Nt1=8, Nt2=10))
        write_snapshot(mode_field(b, 1, 1, 1), tmp_path / "u.zks", t=2.0)
        spec, t, payload = read_snapshot_header(tmp_path / "u.zks")
        assert spec == b.spec and t == 2.0 and len(payload) == 16 * 8 * 10 * 16

    def test_little_endian_layout(self, tmp_path):
        b = build_domain(DomainSpec(d=1, Nx=8, Nt1=8))
        u = mode_field(b, 1, 2, amplitude=2.0, phase=np.pi / 2)
        write_snapshot(u, tmp_path / "u.zks")
        blob = (tmp_path / "u.zks").read_bytes()
        assert blob[:8] == b"ZKSNAP\x00\x01"
        vals = struct.unpack_from("<%dd" % (2 * 64), blob, 52)
        # index (k=1, n=2) -> flat 1*8 + 1, stored as (re, im)
        assert vals[2 * 9] == pytest.approx(u.coeffs[1, 1].real, abs=1e-16)
        assert vals[2 * 9 + 1] == u.coeffs[1, 1].imag

    def test_dimension_mismatch(self, tmp_path, rng):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        write_snapshot(random_field(b, rng), tmp_path / "u.zks")
        other = build_domain(DomainSpec(d=1, Nx=32, Nt1=8))
        with pytest.raises(DimensionMismatchError, match="does not match"):
            read_snapshot(tmp_path / "u.zks", other)
        with pytest.raises(DimensionMismatchError, match="d=1 dirichlet"):
            read_snapshot(tmp_path / "u.zks", build_domain(CONFIGS[1]))

    def test_resample_round_trip(self, tmp_path, rng):
        small = build_domain(DomainSpec(d=1, Nx=16, Nt1=8, transverse_bc="periodic"))
        big = build_domain(DomainSpec(d=1, Nx=32, Nt1=16, transverse_bc="periodic"))
        u = random_field(small, rng)
        write_snapshot(u, tmp_path / "s.zks")
        up, _ = read_snapshot(tmp_path / "s.zks", big, resample=True)
        write_snapshot(up, tmp_path / "b.zks")
        down, _ = read_snapshot(tmp_path / "b.zks", small, resample=True)
        np.testing.assert_array_equal(down.coeffs, u.coeffs)

    def test_resample_preserves_function(self, tmp_path, rng):
        from zksolver.functionals import l2_norm

        small = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        big = build_domain(DomainSpec(d=1, Nx=32, Nt1=16))
        u = random_field(small, rng)
        write_snapshot(u, tmp_path / "s.zks")
        up, _ = read_snapshot(tmp_path / "s.zks", big, resample=True)
        assert l2_norm(up) == pytest.approx(l2_norm(u), rel=1e-14)

    def test_truncated(self, tmp_path, rng):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        p = tmp_path / "u.zks"
        write_snapshot(random_field(b, rng), p)
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(SnapshotError, match="corrupt"):
            read_snapshot(p)
        p.write_bytes(p.read_bytes()[:20])
        with pytest.raises(SnapshotError, match="truncated header"):
            read_snapshot(p)

    def test_flipped_byte(self, tmp_path, rng):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        p = tmp_path / "u.zks"
        write_snapshot(random_field(b, rng), p)
        blob = bytearray(p.read_bytes())
        blob[100] ^= 0xFF
        p.write_bytes(bytes(blob))
        with pytest.raises(SnapshotError, match="checksum"):
            read_snapshot(p)

    def test_bad_magic_and_version(self, tmp_path, rng):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        p = tmp_path / "u.zks"
        write_snapshot(random_field(b, rng), p)
        blob = bytearray(p.read_bytes())
        p.write_bytes(b"NOTASNAP" + bytes(blob[8:]))
        with pytest.raises(SnapshotError, match="bad magic"):
            read_snapshot(p)
        blob[8:12] = struct.pack("<I", 99)
        p.write_bytes(bytes(blob))
        with pytest.raises(SnapshotError, match="unsupported snapshot version 99"):
            read_snapshot(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SnapshotError, match="No such file"):
            read_snapshot(tmp_path / "missing.zks")

    def test_companion_basis_rejected(self, tmp_path):
        b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
        with pytest.raises(ValueError, match="admissible"):
            write_snapshot(diff(mode_field(b, 1, 1), "y", 1), tmp_path / "u.zks")


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), cfg=st.sampled_from(range(4)),
       t=st.floats(0, 1e6, allow_nan=False))
def test_snapshot_round_trip_property(tmp_path_factory, seed, cfg, t):
    b = build_domain(CONFIGS[cfg])
    u = random_field(b, np.random.default_rng(seed))
    p = tmp_path_factory.mktemp("snap") / "u.zks"
    write_snapshot(u, p, t)
    v, t2 = read_snapshot(p, b)
    assert t2 == t and v.coeffs.tobytes() == u.coeffs.tobytes()


@pytest.fixture
def records():
    b = build_domain(DomainSpec(d=1, Nx=16, Nt1=8))
    return run(mode_field(b, 1, 1, amplitude=0.2), SolverParams(dt=0.1, T=0.3)).records


class TestDiagnostics:
    def test_header_then_row(self, records, tmp_path):
        p = tmp_path / "d.csv"
        append_diagnostics(records[0], p)
        lines = p.read_text().splitlines()
        assert lines[0] == ",".join(COLUMNS)
        assert len(lines) == 2

    def test_reopen_no_duplicate_header(self, records, tmp_path):
        p = tmp_path / "d.csv"
        append_diagnostics(records[0], p)
        append_diagnostics(records[1], p)
        append_diagnostics(records[2], p)
        lines = p.read_text().splitlines()
        assert len(lines) == 4 and lines.count(",".join(COLUMNS)) == 1

    def test_time_must_increase(self, records, tmp_path):
        p = tmp_path / "d.csv"
        append_diagnostics(records[1], p)
        with pytest.raises(DiagnosticsError, match="does not increase"):
            append_diagnostics(records[1], p)
        with pytest.raises(DiagnosticsError, match="does not increase"):
            append_diagnostics(records[0], p)

    def test_lossless_values(self, records, tmp_path):
        p = tmp_path / "d.csv"
        for r in records:
            append_diagnostics(r, p)
        data = read_diagnostics(p)
        assert list(data) == list(COLUMNS)
        np.testing.assert_array_equal(data["l2"], [r.l2 for r in records])
        np.testing.assert_array_equal(data["E1"], [r.E1 for r in records])

    def test_io_error_names_path(self, records, tmp_path):
        p = tmp_path / "no-such-dir" / "d.csv"
        with pytest.raises(DiagnosticsError, match="no-such-dir"):
            append_diagnostics(records[0], p)

    def test_foreign_header(self, records, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(DiagnosticsError, match="header"):
            append_diagnostics(records[0], p)
