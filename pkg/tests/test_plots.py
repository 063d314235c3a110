import json

import numpy as np
import pytest

from src.errors import PlotError
from src.plots import PlotKind, emit_plots

CURVE = {"gold": {400: 0.21, 800: 0.30}, "variation": {400: 0.25, 800: 0.33}}
DISTRIBUTION = {"SCI": {"Used-for/Usage": 3, "Compare/Comparison": 1}, "SEM": {"Used-for/Usage": 2, "Compare/Comparison": 0}}
HEATMAP = {"SCI Used-for": (["Method", "Task"], np.array([[0.0, 0.5], [0.1, 0.0]]))}


class TestEmitPlots:
    def test_quantity_curve_data(self, tmp_path):
        written = emit_plots(CURVE, PlotKind.QUANTITY_CURVE, tmp_path, render=False)
        assert [p.name for p in written] == ["quantity_curve.csv", "quantity_curve.json"]
        rows = json.loads((tmp_path / "quantity_curve.json").read_text())
        assert rows[0] == {"series": "gold", "cap": 400, "f1": 0.21}
        assert len(rows) == 4

    def test_quantity_curve_from_rows(self, tmp_path):
        rows = [{"series": "gold", "cap": 400, "f1": 0.2, "seed": 1}]
        assert len(emit_plots(rows, "QUANTITY_CURVE", tmp_path, render=False)) == 2

    def test_distribution(self, tmp_path):
        emit_plots(DISTRIBUTION, PlotKind.RELATION_DISTRIBUTION, tmp_path, render=False)
        rows = json.loads((tmp_path / "relation_distribution.json").read_text())
        assert {"perspective": "SEM", "label": "Compare/Comparison", "count": 0} in rows

    def test_heatmap(self, tmp_path):
        written = emit_plots(HEATMAP, PlotKind.COOCCURRENCE_HEATMAP, tmp_path, render=False)
        assert [p.name for p in written] == ["cooccurrence_sci_used_for.csv", "cooccurrence_sci_used_for.json"]

    @pytest.mark.parametrize(
        "artifact,kind",
        [(CURVE, PlotKind.QUANTITY_CURVE), (DISTRIBUTION, PlotKind.RELATION_DISTRIBUTION), (HEATMAP, PlotKind.COOCCURRENCE_HEATMAP)],
    )
    def test_rendered_images(self, tmp_path, artifact, kind):
        written = emit_plots(artifact, kind, tmp_path)
        images = [p for p in written if p.suffix == ".png"]
        assert images and all(p.stat().st_size > 0 for p in images)

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(PlotError):
            emit_plots(CURVE, "PIE", tmp_path / "out")
        assert not (tmp_path / "out").exists()

    @pytest.mark.parametrize("kind", list(PlotKind))
    def test_empty_input_writes_nothing(self, tmp_path, kind):
        with pytest.raises(PlotError):
            emit_plots({}, kind, tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_mismatched_matrix(self, tmp_path):
        with pytest.raises(PlotError):
            emit_plots({"bad": (["A"], np.zeros((2, 2)))}, PlotKind.COOCCURRENCE_HEATMAP, tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_missing_columns(self, tmp_path):
        with pytest.raises(PlotError):
            emit_plots([{"cap": 400, "f1": 0.1}], PlotKind.QUANTITY_CURVE, tmp_path / "out")
