"""CSV/VTK serialization: bit-exact round trips and deterministic bytes."""

import numpy as np
import pytest

from peripore.discretization import build_lattice
from peripore.errors import ConfigurationError
from peripore.output import (CSV_HEADER, make_frame, read_csv, tag_bitmask,
                             write_csv, write_results, write_vtk)


def random_frame(seed=0, n_side=3, tags=("left", "right")):
    parts = build_lattice([[0.0, 1.0]] * 3, 1.0 / n_side)
    x = parts.positions
    parts.add_tag(tags[0], x[:, 0] == x[:, 0].min())
    if len(tags) > 1:
        parts.add_tag(tags[1], x[:, 0] == x[:, 0].max())
    rng = np.random.default_rng(seed)
    n = parts.n
    return parts, make_frame(
        parts, time=0.25,
        displacement=rng.standard_normal((n, 3)) * 10.0 ** rng.integers(-12, 12, (n, 3)),
        theta=rng.standard_normal(n),
        pressure=rng.standard_normal(n) * 1e6,
        pore_pressure=rng.standard_normal(n) * 1e4)


class TestCsv:
    def test_round_trip_is_bit_exact(self, tmp_path):
        _, frame = random_frame()
        path = str(tmp_path / "frame.csv")
        write_csv(frame, path)
        back = read_csv(path)
        assert np.array_equal(back.positions, frame.positions)
        assert np.array_equal(back.displacement, frame.displacement)
        assert np.array_equal(back.theta, frame.theta)
        assert np.array_equal(back.pressure, frame.pressure)
        assert np.array_equal(back.pore_pressure, frame.pore_pressure)
        assert np.array_equal(back.tag_bits, frame.tag_bits)

    def test_header_and_zero_row(self, tmp_path):
        parts = build_lattice([[0.0, 1.0]] * 3, 1.0)
        frame = make_frame(parts, 0.0, np.zeros((1, 3)), np.zeros(1), np.zeros(1))
        frame.positions = np.zeros((1, 3))
        path = str(tmp_path / "zero.csv")
        write_csv(frame, path)
        lines = open(path).read().splitlines()
        assert lines[0] == CSV_HEADER
        assert lines[1] == "0,0,0,0,0,0,0,0,0,0,0"

    def test_header_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,x,y,z\n0,1,2,3\n")
        with pytest.raises(ConfigurationError, match="header"):
            read_csv(str(path))

    def test_short_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(CSV_HEADER + "\n0,1,2\n")
        with pytest.raises(ConfigurationError, match="fields"):
            read_csv(str(path))

    def test_identical_runs_identical_bytes(self, tmp_path):
        _, f1 = random_frame(seed=7)
        _, f2 = random_frame(seed=7)
        p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        write_csv(f1, p1)
        write_csv(f2, p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_missing_directory_is_io_error(self, tmp_path):
        _, frame = random_frame()
        with pytest.raises(IOError, match="does not exist"):
            write_csv(frame, str(tmp_path / "nope" / "frame.csv"))


class TestTags:
    def test_bitmask_order_is_declaration_order(self):
        parts = build_lattice([[0.0, 1.0]] * 3, 0.5)
        parts.add_tag("b_tag", np.array([1, 0, 0, 0, 0, 0, 0, 0], dtype=bool))
        parts.add_tag("a_tag", np.array([1, 1, 0, 0, 0, 0, 0, 0], dtype=bool))
        bits, names = tag_bitmask(parts)
        assert names == ["b_tag", "a_tag"]
        assert bits[0] == 0b11
        assert bits[1] == 0b10
        assert bits[2] == 0

    def test_too_many_tags_rejected(self):
        parts = build_lattice([[0.0, 1.0]] * 3, 0.5)
        for k in range(64):
            parts.add_tag(f"t{k}", np.ones(parts.n, dtype=bool))
        with pytest.raises(ConfigurationError, match="64-bit"):
            tag_bitmask(parts)


class TestVtk:
    def test_structure(self, tmp_path):
        parts, frame = random_frame()
        path = str(tmp_path / "frame.vtk")
        write_vtk(frame, path, title="demo")
        lines = open(path).read().splitlines()
        assert lines[0] == "# vtk DataFile Version 3.0"
        assert lines[1] == "demo"
        assert lines[2] == "ASCII"
        assert lines[3] == "DATASET POLYDATA"
        n = parts.n
        assert lines[4] == f"POINTS {n} double"
        assert lines[4 + n + 1] == f"VERTICES {n} {2 * n}"
        assert f"POINT_DATA {n}" in lines
        assert "VECTORS displacement double" in lines
        for scalar in ("theta", "p", "pf"):
            assert f"SCALARS {scalar} double 1" in lines
        assert "SCALARS tags long 1" in lines
        # every particle appears as a single vertex
        vstart = lines.index(f"VERTICES {n} {2 * n}") + 1
        assert lines[vstart:vstart + n] == [f"1 {i}" for i in range(n)]

    def test_points_round_trip_through_text(self, tmp_path):
        parts, frame = random_frame(seed=3)
        path = str(tmp_path / "frame.vtk")
        write_vtk(frame, path)
        lines = open(path).read().splitlines()
        pts = np.array([[float(v) for v in line.split()]
                        for line in lines[5:5 + parts.n]])
        assert np.array_equal(pts, frame.positions)


class TestWriteResults:
    def test_frame_files_zero_padded(self, tmp_path):
        parts, frame = random_frame()
        paths = write_results([frame] * 3, str(tmp_path), "run", formats=("csv", "vtk"))
        names = [p.rsplit("/", 1)[1] for p in paths]
        assert names == ["run_0000.csv", "run_0000.vtk", "run_0001.csv",
                         "run_0001.vtk", "run_0002.csv", "run_0002.vtk"]

    def test_creates_output_directory(self, tmp_path):
        _, frame = random_frame()
        out = str(tmp_path / "deep" / "dir")
        paths = write_results([frame], out, "x")
        assert paths and open(paths[0]).readline().strip() == CSV_HEADER
