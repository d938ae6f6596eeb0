import csv
import json
import math
import xml.etree.ElementTree as ET

import numpy as np

from multisle.burgers import Hull
from multisle.export import dumps, fmt, hull_csv, hull_svg, write_hashed, write_hull, write_json


def toy_hull(t=1.0):
    x = np.linspace(-2, 2, 9) * math.sqrt(t)
    y = np.sqrt(np.maximum(4 * t - x * x, 0.0)) * 0.5
    return Hull(t=t, x=x, y=y, footprint=(float(x[0]), float(x[-1])))


def test_fmt_roundtrips_17_digits():
    for v in (math.pi, 1 / 3, -2.5e-300, 1e22):
        assert float(fmt(v)) == v
    assert fmt(0.1) == "0.10000000000000001"


def test_dumps_is_deterministic_and_handles_complex():
    obj = {"b": 1 + 2j, "a": np.array([1.0, 2.0]), "c": np.float64(0.5), "d": math.inf,
           "e": (np.int64(3), -math.inf)}
    s = dumps(obj)
    back = json.loads(s)
    assert list(back) == ["a", "b", "c", "d", "e"]
    assert back["b"] == [1.0, 2.0] and back["a"] == [1.0, 2.0]
    assert back["d"] == "inf" and back["e"] == [3, "-inf"]
    assert dumps(obj) == s


def test_write_json(tmp_path):
    p = write_json(tmp_path / "x.json", {"z": 1j})
    assert json.loads(p.read_text()) == {"z": [0.0, 1.0]}


def test_write_hashed_names_by_content(tmp_path):
    a = write_hashed(tmp_path / "sub", "r", ".txt", "hello")
    b = write_hashed(tmp_path / "sub", "r", ".txt", "hello")
    c = write_hashed(tmp_path / "sub", "r", ".txt", "world")
    assert a == b and a != c
    assert a.read_text() == "hello" and a.name.startswith("r-") and len(a.stem) == 18


def test_hull_csv_roundtrip():
    h = toy_hull()
    rows = list(csv.reader(hull_csv(h).splitlines()))
    assert rows[0] == ["x", "y"]
    data = np.array(rows[1:], dtype=float)
    assert np.array_equal(data[:, 0], h.x) and np.array_equal(data[:, 1], h.y)


def test_hull_svg_is_scale_invariant():
    small, big = toy_hull(1.0), toy_hull(4.0)
    root = ET.fromstring(hull_svg(small, support=(-1, 1)))
    ns = "{http://www.w3.org/2000/svg}"
    poly_small = root.find(f"{ns}polyline").get("points")
    poly_big = ET.fromstring(hull_svg(big)).find(f"{ns}polyline").get("points")
    assert poly_small == poly_big
    # support band, axis, two footprint ticks
    assert len(root.findall(f"{ns}line")) == 4


def test_write_hull(tmp_path):
    h = toy_hull()
    paths = write_hull(h, tmp_path / "o", config={"run": {"t": 1.0}}, support=(-4.0, 4.0))
    side = json.loads(paths["json"].read_text())
    assert side["footprint"] == [-2.0, 2.0] and side["support"] == [-4.0, 4.0]
    assert side["config"] == {"run": {"t": 1.0}} and side["flags"] == []
    assert paths["svg"].read_text().startswith("<svg")
