import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgflow.dynamics import SolverConfig, simulate
from qgflow.errors import StructuralError
from qgflow.fields import random_annulus, two_mode
from qgflow.gevrey import SERIES_COLUMNS, NormReport
from qgflow.io import (
    decode_snapshot,
    diagnostics_csv,
    emit_report,
    encode_snapshot,
    parse_report,
    read_diagnostics_csv,
    read_snapshot,
    read_trajectory,
    write_snapshot,
    write_trajectory,
)
from qgflow.spectral import Grid2D, PhysicalParams


def sample_report():
    t = np.array([0.0, 0.5, 1.0])
    return NormReport(
        k_norm=1.25, k_time=1.0, g_norm=0.1 + 0.2, g_time=0.5, e1_norm=None,
        decay_slopes={"k1_linf": -1.0000000000000002},
        meta={"gamma": 1.5, "p": 2.0},
        series={"time": t, "radius": np.array([0.0, 0.3, 0.61]), "fit_quality": np.array([0.0, 0.99, 1.0]),
                "k_norm": np.array([1.0, 1.1, 1.25]), "g_norm": np.array([0.2, 0.3, 0.25]),
                "e1_norm": np.full(3, np.nan)},
    )


class TestSnapshot:
    @given(seed=st.integers(0, 10**6), t=st.floats(0, 1e3), gamma=st.floats(1, 2))
    @settings(max_examples=20, deadline=None)
    def test_bit_exact_round_trip(self, seed, t, gamma):
        g = Grid2D(16, 3.7)
        f = random_annulus(g, 1, 5, seed=seed)
        back, t2, g2, end = decode_snapshot(encode_snapshot(f, t, gamma))
        assert back.coeffs.tobytes() == f.coeffs.tobytes()
        assert (t2, g2, back.grid) == (t, gamma, g)
        assert end == 4 + 4 + 4 + 24 + 16 * 256

    def test_file_round_trip(self, tmp_path, grid32):
        f = random_annulus(grid32, 1, 8, seed=1)
        write_snapshot(tmp_path / "s.qgsf", f, 0.25, 1.5)
        back, t, gamma = read_snapshot(tmp_path / "s.qgsf")
        np.testing.assert_array_equal(back.coeffs, f.coeffs)
        assert (t, gamma) == (0.25, 1.5)

    def test_little_endian_header(self, grid16):
        buf = encode_snapshot(random_annulus(grid16, 1, 5), 1.0, 1.5)
        assert buf[:4] == b"QGSF"
        assert int.from_bytes(buf[8:12], "little") == 16

    @pytest.mark.parametrize("mangle", [lambda b: b"XXXX" + b[4:], lambda b: b[:30], lambda b: b[:-8]])
    def test_corrupt(self, grid16, mangle):
        with pytest.raises(StructuralError):
            decode_snapshot(mangle(encode_snapshot(random_annulus(grid16, 1, 5))))


class TestTrajectory:
    def test_round_trip(self, tmp_path, grid32):
        cfg = SolverConfig(PhysicalParams(1.5), n=32, dt=0.05, T=0.2)
        traj = simulate(two_mode(grid32), cfg)
        write_trajectory(tmp_path / "r.qgt", traj)
        back = read_trajectory(tmp_path / "r.qgt")
        np.testing.assert_array_equal(back.times, traj.times)
        assert all(a.coeffs.tobytes() == b.coeffs.tobytes() for a, b in zip(back.snapshots, traj.snapshots))
        assert back.params.gamma == 1.5

    def test_bad_magic(self, tmp_path):
        (tmp_path / "bad.qgt").write_bytes(b"NOPE" + bytes(8))
        with pytest.raises(StructuralError):
            read_trajectory(tmp_path / "bad.qgt")


class TestDiagnosticsCsv:
    def test_deterministic(self, grid32):
        cfg = SolverConfig(PhysicalParams(1.5), n=32, dt=0.02, T=0.2)
        a = diagnostics_csv(simulate(random_annulus(grid32, 1, 8, 0.1, seed=3), cfg).diagnostics)
        b = diagnostics_csv(simulate(random_annulus(grid32, 1, 8, 0.1, seed=3), cfg).diagnostics)
        assert a == b

    def test_round_trip_values(self, grid32):
        cfg = SolverConfig(PhysicalParams(1.5), n=32, dt=0.02, T=0.2)
        d = simulate(two_mode(grid32), cfg).diagnostics
        back = read_diagnostics_csv(diagnostics_csv(d))
        for k, v in d.items():
            np.testing.assert_array_equal(back[k], v)

    def test_column_subset_order(self):
        text = diagnostics_csv({"time": [0.0], "l2": [1.0], "mean": [0.0]}, ["l2", "time"])
        assert text.splitlines()[0] == "l2,time"


class TestReport:
    def test_json_round_trip(self):
        rep = sample_report()
        back = parse_report(emit_report(rep, "json"))
        for k in ("k_norm", "k_time", "g_norm", "g_time", "e1_norm"):
            assert getattr(back, k) == getattr(rep, k)
        assert back.decay_slopes == rep.decay_slopes
        for c in SERIES_COLUMNS:
            np.testing.assert_array_equal(back.series[c], rep.series[c])

    def test_csv_round_trip(self):
        rep = sample_report()
        back = parse_report(emit_report(rep, "csv"), "csv")
        for c in SERIES_COLUMNS:
            np.testing.assert_array_equal(back.series[c], rep.series[c])

    def test_csv_header_frozen(self):
        head = emit_report(sample_report(), "csv").decode().splitlines()[0]
        assert head == "time,radius,fit_quality,k_norm,g_norm,e1_norm"

    def test_empty_report(self):
        doc = json.loads(emit_report(NormReport(), "json"))
        assert doc["schema_version"] == 1
        assert all(doc["series"][c] == [] for c in SERIES_COLUMNS)
        assert emit_report(NormReport(), "csv").decode() == ",".join(SERIES_COLUMNS) + "\n"

    def test_field_order_stable(self):
        keys = list(json.loads(emit_report(sample_report(), "json")))
        assert keys == ["schema_version", "k_norm", "k_time", "g_norm", "g_time", "e1_norm",
                        "decay_slopes", "meta", "series"]

    def test_seventeen_digits(self):
        assert b"0.30000000000000004" in emit_report(sample_report(), "json")

    def test_nan_becomes_null(self):
        doc = json.loads(emit_report(sample_report(), "json"))
        assert doc["series"]["e1_norm"] == [None, None, None]

    def test_schema_mismatch(self):
        with pytest.raises(StructuralError):
            parse_report(b'{"schema_version": 99}')

    def test_bad_format(self):
        with pytest.raises(ValueError):
            emit_report(NormReport(), "xml")
