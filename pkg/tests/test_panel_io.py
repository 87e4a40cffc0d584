"""
Panel CSV parsing and writing.
"""

import numpy as np
import pytest

from panel_sphericity.core.simulation import gen_disturbances, gen_panel
from panel_sphericity.errors import PanelParseError
from panel_sphericity.models import ErrorDistribution, IdentityCovariance
from panel_sphericity.panel_io import read_panel_csv, write_panel_csv
from tests.config import SEED

HEADER = "unit,time,y,x1\n"


def write_text(tmp_path, text):
    path = tmp_path / "panel.csv"
    path.write_text(text, encoding="utf-8")
    return path


class TestPanelCsv:
    def test_written_panel_reads_back_exactly(self, tmp_path):
        v = gen_disturbances(IdentityCovariance(n=4), ErrorDistribution(), 4, 6, SEED)
        panel = gen_panel([1.0, -0.5], v, SEED)
        loaded = read_panel_csv(write_panel_csv(panel, tmp_path / "sub" / "panel.csv"))
        assert np.array_equal(loaded.y, panel.y)
        assert np.array_equal(loaded.x, panel.x)
        assert loaded.truth is None

    def test_rows_in_any_order(self, tmp_path):
        text = HEADER + "b,2,4,40\na,1,1,10\nb,1,3,30\na,2,2,20\n"
        panel = read_panel_csv(write_text(tmp_path, text))
        assert np.array_equal(panel.y, [[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(panel.x[:, :, 0], [[10.0, 20.0], [30.0, 40.0]])

    def test_missing_cell(self, tmp_path):
        text = HEADER + "1,1,1,1\n1,2,1,2\n2,1,1,3\n"
        with pytest.raises(PanelParseError, match="missing unit=2, time=2"):
            read_panel_csv(write_text(tmp_path, text))

    def test_duplicate_cell(self, tmp_path):
        text = HEADER + "1,1,1,1\n1,1,2,2\n1,2,1,3\n"
        with pytest.raises(PanelParseError, match="duplicate observation for unit=1, time=1"):
            read_panel_csv(write_text(tmp_path, text))

    @pytest.mark.parametrize("header", ["unit,time,y\n", "id,time,y,x1\n", "unit,time,y,x2\n"])
    def test_bad_header(self, tmp_path, header):
        with pytest.raises(PanelParseError):
            read_panel_csv(write_text(tmp_path, header + "1,1,1,1\n"))

    @pytest.mark.parametrize("row", ["1,2,abc,1\n", "1,2,,1\n", "1,2,inf,1\n"])
    def test_bad_values(self, tmp_path, row):
        with pytest.raises(PanelParseError):
            read_panel_csv(write_text(tmp_path, HEADER + "1,1,1,1\n" + row))

    def test_missing_file(self, tmp_path):
        with pytest.raises(PanelParseError):
            read_panel_csv(tmp_path / "absent.csv")
