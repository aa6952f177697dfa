import re

import numpy as np
import pytest

from untangle.datasets import gen_hopf_link, gen_toy_abc
from untangle.errors import DimensionMismatch, DocumentError
from untangle.geometry import LabeledDataset, PointCloud
from untangle.io import read_points_csv, write_points_csv
from untangle.svg import PALETTE, export_svg, render_svg


def test_csv_round_trip_bit_exact(tmp_path):
    d = gen_toy_abc(30, seed=2)
    write_points_csv(tmp_path / "p.csv", d)
    back = read_points_csv(tmp_path / "p.csv")
    assert back.labels == d.labels
    for a, b in zip(d.clouds, back.clouds):
        assert np.array_equal(a.points, b.points)


def test_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    with pytest.raises(DocumentError):
        read_points_csv(bad)
    bad.write_text("label,x1,x2\n0,1\n")
    with pytest.raises(DocumentError):
        read_points_csv(bad)
    bad.write_text("label,x1\n0,abc\n")
    with pytest.raises(DocumentError):
        read_points_csv(bad)


def test_svg_empty_dataset():
    text = render_svg(LabeledDataset(()))
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert "<circle" not in text


def test_svg_deterministic(tmp_path):
    d = gen_hopf_link(40)
    export_svg(d, tmp_path / "a.svg", "x")
    export_svg(d, tmp_path / "b.svg", "x")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_svg_toy_counts():
    text = render_svg(gen_toy_abc(200, seed=7))
    assert text.count("<circle") == 600
    fills = re.findall(r'<g fill="(#[0-9a-f]{6})"', text)
    assert fills == list(PALETTE[:3])


def test_svg_circles_inside_viewport():
    text = render_svg(gen_hopf_link(50))
    xy = np.array(re.findall(r'cx="([\d.]+)" cy="([\d.]+)"', text), float)
    assert len(xy) == 100
    assert np.all((xy >= 0) & (xy <= 480))


def test_svg_rejects_high_dimension():
    d = LabeledDataset(((0, PointCloud(np.zeros((3, 4)))),))
    with pytest.raises(DimensionMismatch):
        render_svg(d)
