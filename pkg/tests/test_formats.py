import json

import numpy as np
import pytest

from normclust.formats import (InputError, dumps, read_explicit, read_graph, read_points_csv,
                               read_requests_csv)
from normclust.metrics import EuclideanMetric


def test_dumps_floats_round_trip():
    values = [0.0, 1.0, -2.0, 0.1, 1 / 3, 1e300, 1e-7]
    text = dumps({"v": values, "n": 3, "flag": True, "none": None})
    back = json.loads(text)
    assert back["v"] == values
    assert all(isinstance(v, float) for v in back["v"])
    assert back["n"] == 3 and back["flag"] is True and back["none"] is None


def test_dumps_non_finite_and_numpy():
    assert dumps([float("inf"), np.float64(2.5), np.int64(4), np.array([1.0])]) == \
        "[null, 2.5, 4, [1.0]]"
    with pytest.raises(TypeError):
        dumps(object())


def test_points_header_optional(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("x,y\n1,2\n3,4\n")
    b.write_text("1,2\n3,4\n")
    np.testing.assert_array_equal(read_points_csv(a), read_points_csv(b))


def test_graph_comments_and_errors(tmp_path):
    g = tmp_path / "g.txt"
    g.write_text("# header\na b 1.5  # trailing\n\nb c 2\n")
    assert read_graph(g).vertex_distance("a", "c") == 3.5
    g.write_text("a b x\n")
    with pytest.raises(InputError, match=":1:"):
        read_graph(g)


def test_explicit_errors(tmp_path):
    f = tmp_path / "m.json"
    f.write_text("{not json")
    with pytest.raises(InputError, match="invalid JSON"):
        read_explicit(f)
    f.write_text(json.dumps({"ids": ["a"]}))
    with pytest.raises(InputError, match="matrix"):
        read_explicit(f)


def test_requests_by_label(tmp_path):
    space = EuclideanMetric(np.array([[0.0], [1.0]]))
    f = tmp_path / "q.csv"
    f.write_text("point_id,radius\n1,0.5\n")
    assert read_requests_csv(f, space)[0].point == 1
    f.write_text("7,0.5\n")
    with pytest.raises(InputError, match="unknown point"):
        read_requests_csv(f, space)
    f.write_text("0,-1\n")
    with pytest.raises(InputError):
        read_requests_csv(f, space)
