import re

import numpy as np

from rgdist.plotting import Curve, histogram_figure, line_figure, polyline_svg, survival_figure


def _curves():
    t = np.arange(6)
    return [Curve("N=100", t, np.linspace(1, 0, 6), np.full(6, 0.01)),
            Curve("N=500", t + 2, np.linspace(1, 0, 6))]


def test_png_figures_written(tmp_path):
    for p in (survival_figure(_curves(), tmp_path / "s.png", title="x"),
              line_figure([1, 2, 3], {"a": [1, 2, 3], "b": [3, 2, 1]}, tmp_path / "l.png", "x", "y", logx=True),
              histogram_figure(np.random.default_rng(0).exponential(size=500), tmp_path / "h.png", "w")):
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_svg_has_one_polyline_per_curve_plus_axes(tmp_path):
    text = polyline_svg(_curves(), tmp_path / "s.svg").read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<polyline") == 3
    assert "N=500" in text


def test_svg_is_deterministic(tmp_path):
    a = polyline_svg(_curves(), tmp_path / "a.svg").read_bytes()
    b = polyline_svg(_curves(), tmp_path / "b.svg").read_bytes()
    assert a == b


def test_svg_step_points(tmp_path):
    # a step curve through n points has 2n - 1 vertices
    text = polyline_svg([Curve("c", np.arange(4), np.array([1, .5, .25, 0]))], tmp_path / "c.svg").read_text()
    pts = re.findall(r'<polyline points="([^"]*)" fill="none" stroke="#', text)[0].split()
    assert len(pts) == 7
