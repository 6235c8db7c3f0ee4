"""Tests for config parsing and artifact files."""

import json

import numpy as np
import pytest

from gridwarp.core import io
from gridwarp.core.grid_match import match_grid
from gridwarp.core.synth_scene import emit_ground_truth
from gridwarp.errors import ConfigError, InvalidInputError
from gridwarp.models.geometry import HeightMap
from gridwarp.models.report import RunReport
from gridwarp.models.warp import ColumnGrid

GRID = '"grid": {"n_rows": 3, "n_cols": 3, "spacing": 0.004, "origin": [-0.004, -0.004, 0.03], "h": 0.03}'
INTRINSICS = '"intrinsics": {"fx": 4500.0, "fy": 4500.0, "cx": 159.5, "cy": 159.5}'
CAMERA = '"camera": {}'


class TestSceneConfig:
    def test_minimal_document(self):
        cfg = io.parse_scene_config("{" + ", ".join([GRID, INTRINSICS, CAMERA]) + "}")
        assert cfg.grid.shape == (3, 3)
        assert cfg.seed == 0
        assert cfg.camera.center == (0.0, -0.05, 0.5)

    def test_missing_field_is_named(self):
        with pytest.raises(ConfigError) as excinfo:
            io.parse_scene_config("{" + ", ".join([GRID, CAMERA]) + "}")
        assert excinfo.value.field == "intrinsics"
        assert "intrinsics" in str(excinfo.value)

    def test_nested_field_is_named(self):
        bad = INTRINSICS.replace('"fx": 4500.0', '"fx": -1.0')
        with pytest.raises(ConfigError) as excinfo:
            io.parse_scene_config("{" + ", ".join([GRID, bad, CAMERA]) + "}")
        assert excinfo.value.field == "intrinsics.fx"

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError) as excinfo:
            io.parse_scene_config("{" + ", ".join([GRID, INTRINSICS, CAMERA, '"colour": 1']) + "}")
        assert excinfo.value.field == "colour"

    def test_grid_origin_must_sit_on_display(self):
        bad = GRID.replace("0.03]", "0.02]")
        with pytest.raises(ConfigError):
            io.parse_scene_config("{" + ", ".join([bad, INTRINSICS, CAMERA]) + "}")

    def test_malformed_json(self):
        with pytest.raises(ConfigError):
            io.parse_scene_config("{not json")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            io.load_scene_config(tmp_path / "absent.json")

    @pytest.mark.parametrize("name", ["flat.json", "blocks.json", "parallax_shift.json"])
    def test_shipped_configs_load(self, configs_dir, name):
        cfg = io.load_scene_config(configs_dir / name)
        assert cfg.grid.shape == (7, 7)


class TestImages:
    def test_pgm_readback(self, tmp_path, rng):
        img = rng.random((20, 30))
        io.write_pgm(tmp_path / "img.pgm", img)
        assert (tmp_path / "img.pgm").read_bytes().startswith(b"P5")
        back = io.read_pgm(tmp_path / "img.pgm")
        assert back.shape == (20, 30)
        assert np.abs(back - img).max() <= 0.5 / 255.0 + 1e-12

    def test_not_an_image(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_text("hello", encoding="utf-8")
        with pytest.raises(InvalidInputError):
            io.read_pgm(path)

    def test_heightmap_image(self):
        hm = HeightMap.empty(2, 2)
        hm.points[0, 0] = (0.0, 0.0, 0.0)
        hm.points[0, 1] = (0.0, 0.0, 0.01)
        hm.valid[0, :] = True
        img = io.heightmap_image(hm, scale=4)
        assert img.shape == (8, 8)
        assert img[0, 0] == 0.0 and img[0, 4] == 1.0
        assert not img[4:].any()


class TestTables:
    def test_heightmap_csv_readback(self, tmp_path, rng):
        hm = HeightMap.empty(3, 4)
        hm.points[:2] = rng.random((2, 4, 3))
        hm.residual[:2] = rng.random((2, 4))
        hm.valid[:2] = True
        path = tmp_path / "heightmap.csv"
        io.write_heightmap_csv(path, hm)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "row,col,X,Y,Z,valid,residual"
        back = io.read_heightmap_csv(path)
        assert np.array_equal(back.points, hm.points, equal_nan=True)
        assert np.array_equal(back.valid, hm.valid)

    def test_ground_truth_csv(self, tmp_path, blocks_cfg):
        gt = emit_ground_truth(blocks_cfg)
        path = tmp_path / "ground_truth.csv"
        io.write_ground_truth_csv(path, gt)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "row,col,X,Y,Z,u,v,visible"
        assert len(lines) == 50
        assert lines[1].startswith("1,1,")
        truth = io.read_ground_truth_heightmap(path)
        assert np.array_equal(truth.points, gt.points)
        assert truth.valid.all()

    def test_truncated_table(self, tmp_path):
        path = tmp_path / "heightmap.csv"
        path.write_text("row,col,X,Y,Z,valid,residual\n2,2,0,0,0,1,0\n", encoding="utf-8")
        with pytest.raises(InvalidInputError):
            io.read_heightmap_csv(path)

    def test_points_csv(self, tmp_path):
        points = np.array([[1.5, 2.25], [3.0, 4.0]])
        io.write_points_csv(tmp_path / "points.csv", points)
        assert np.array_equal(io.read_points_csv(tmp_path / "points.csv"), points)

    def test_match_artifacts(self, tmp_path, rng):
        A = ColumnGrid(data=rng.random((3, 4)))
        result = match_grid(A, A)
        io.write_mappings_csv(tmp_path / "mappings.csv", result.column_mapping, result.row_mapping)
        io.write_path_csv(tmp_path / "path_cols.csv", result.column_path)
        io.write_landscape_csv(tmp_path / "d_cols.csv", result.d_cols)
        assert (tmp_path / "mappings.csv").read_text(encoding="utf-8") == "1,2,3,4\n1,2,3\n"
        assert (tmp_path / "path_cols.csv").read_text(encoding="utf-8").split() == ["1,1", "2,2", "3,3", "4,4"]
        D = np.loadtxt(tmp_path / "d_cols.csv", delimiter=",")
        assert np.array_equal(D, result.d_cols.values)

    def test_matches_csv(self, tmp_path):
        io.write_matches_csv(tmp_path / "matches.csv", [((1, 2), (10.5, 20.25))])
        assert (tmp_path / "matches.csv").read_text(encoding="utf-8").splitlines() == [
            "row,col,u,v",
            "1,2,10.5,20.25",
        ]

    def test_report_json(self, tmp_path):
        report = RunReport(success_rate=1.0, inlier_rate=1.0, height_tolerance=1e-3, n_nodes=4, n_valid=4)
        io.write_json(tmp_path / "report.json", report)
        data = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert sorted(data) == [
            "config_digest",
            "height_tolerance",
            "inlier_rate",
            "median_abs_error",
            "n_nodes",
            "n_valid",
            "rmse",
            "schema_version",
            "seconds_per_frame",
            "success_rate",
            "timings",
        ]
        assert data["schema_version"] == 1
        assert data["rmse"] is None
        assert data["n_nodes"] == 4
