import csv
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from levis.export import union_svg, write_alpha_trace, write_beta_radii
from levis.fixtures import min_net
from levis.network import Ball, Box, Specification
from levis.search import BallUnion, levis_alpha

NS = "{http://www.w3.org/2000/svg}"
BOX = Box([-2.0, -2.0], [2.0, 2.0])


def _balls(svg):
    root = ET.fromstring(svg.split("\n", 1)[1])
    return [e for e in root if e.get("class") == "ball"]


@pytest.mark.parametrize("p, tag", [(np.inf, "rect"), (1, "polygon"), (2, "circle")])
def test_primitive_per_norm(p, tag):
    (el,) = _balls(union_svg(BallUnion([Ball([0.0, 0.0], 1.0, p)]), BOX))
    assert el.tag == NS + tag


def test_geometry_scale():
    (el,) = _balls(union_svg(BallUnion([Ball([0.0, 0.0], 1.0, 2)]), BOX))
    # 460 px across 4 units
    assert float(el.get("r")) == pytest.approx(115.0)
    assert float(el.get("cx")) == pytest.approx(240.0)


def test_slice_of_higher_dimension():
    box = Box([-2.0] * 3, [2.0] * 3)
    U = BallUnion([Ball([0.0, 0.0, 0.0], 1.0, 2), Ball([0.0, 0.0, 1.5], 1.0, 2), Ball([0.0, 0.0, 0.6], 1.0, 1)])
    els = _balls(union_svg(U, box, fixed=[0.0, 0.0, 0.0]))
    assert [e.tag for e in els] == [NS + "circle", NS + "polygon"]
    with pytest.raises(ValueError):
        union_svg(U, box, axes=(0, 0))


def test_alpha_trace_csv(tmp_path):
    _, trace = levis_alpha(min_net(), Specification.positive(1), [2.0, 1.0], np.inf, Box([0.0, 0.0], [4.0, 4.0]))
    path = tmp_path / "t.csv"
    write_alpha_trace(trace, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["iteration", "radius", "c_0", "c_1"]
    assert len(rows) == len(trace) + 1
    assert float(rows[-1][1]) == trace[-1].radius


def test_beta_radii_csv(tmp_path):
    U = BallUnion([Ball([1.0, 0.0], 0.5, 2), Ball([0.0, 3.0], 1.0, np.inf)])
    path = tmp_path / "r.csv"
    write_beta_radii(U, [0.0, 0.0], path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["ball_index", "radius", "dist_to_x0"]
    assert [float(r[2]) for r in rows[1:]] == [1.0, 3.0]
