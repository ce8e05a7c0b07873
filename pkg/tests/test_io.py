import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binexperts.compose import Rule, RuleKind
from binexperts.io import (FormatError, dataset_text, diverging_rgb, dumps, load_dataset, load_model,
                           load_reps, model_from_dict, model_to_dict, parse_dataset, pgm_bytes,
                           ppm_bytes, read_netpbm, save_dataset, save_model, save_reps)
from binexperts.model import ExpertModel, GeometricModel, Representation
from binexperts.transform import TransformGrid


def sample_model(seed=0):
    rng = np.random.default_rng(seed)
    grid = TransformGrid((-2, 0, 2), (0, 2), (0.0, 10.0))
    a = rng.normal(size=(6, 6))
    return ExpertModel(Rule(RuleKind.MAX_MINUS_MIN, 0.25), rng.uniform(size=(2, 12)), epsilon=0.5,
                       shape=(3, 4), grid=grid, counts=np.array([[3.0] * 12, [2.5] * 12]),
                       geometry=GeometricModel(rng.normal(size=6), a @ a.T, 7))


def test_model_round_trip_is_byte_identical(tmp_path):
    path = tmp_path / "m.json"
    save_model(path, sample_model())
    first = path.read_bytes()
    save_model(path, load_model(path))
    assert path.read_bytes() == first
    m = load_model(path)
    np.testing.assert_array_equal(m.templates, sample_model().templates)
    np.testing.assert_array_equal(m.geometry.cov, sample_model().geometry.cov)
    assert m.rule == sample_model().rule and m.grid == sample_model().grid


def test_model_file_keys_and_integer_counts():
    d = model_to_dict(sample_model())
    assert list(d)[:9] == ["version", "rule", "q", "epsilon", "shape", "experts", "counts",
                           "transform_grid", "geometry"]
    assert d["counts"][0][0] == 3 and isinstance(d["counts"][0][0], int)
    assert d["counts"][1][0] == 2.5
    assert "one_transform_per_expert" not in d
    flagged = model_to_dict(sample_model().replace(one_transform_per_expert=False, fill=0.05))
    assert flagged["one_transform_per_expert"] is False and flagged["fill"] == 0.05
    back = model_from_dict(flagged)
    assert not back.one_transform_per_expert and back.fill == 0.05


def test_model_format_errors(tmp_path):
    d = model_to_dict(sample_model())
    with pytest.raises(FormatError):
        model_from_dict({**d, "version": 2})
    with pytest.raises(FormatError):
        model_from_dict({k: v for k, v in d.items() if k != "experts"})
    with pytest.raises(FormatError):
        model_from_dict({**d, "shape": [5, 5]})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(FormatError):
        load_model(bad)


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_text_round_trips(v):
    import json
    assert json.loads(dumps([v]))[0] == v


def test_dumps_rejects_nan():
    with pytest.raises(ValueError):
        dumps([float("nan")])


def test_reps_round_trip(tmp_path):
    reps = [Representation([(0, 3), (1, 0)], -12.5, [-20.0, -12.5]),
            Representation([(1, 1)], -3.0, [-3.0])]
    path = tmp_path / "r.json"
    save_reps(path, reps)
    first = path.read_bytes()
    again = load_reps(path)
    assert [r.picks for r in again] == [r.picks for r in reps]
    save_reps(path, again)
    assert path.read_bytes() == first


def test_dataset_round_trip(tmp_path):
    data = np.random.default_rng(1).integers(0, 2, (7, 12)).astype(np.uint8)
    path = tmp_path / "d.bed"
    save_dataset(path, data, (3, 4))
    text = path.read_text()
    assert text.startswith("BED1 7 3 4\n") and text.endswith("\n")
    back, shape = load_dataset(path)
    np.testing.assert_array_equal(back, data)
    assert shape == (3, 4)
    save_dataset(path, back, shape)
    assert path.read_text() == text


@pytest.mark.parametrize("text", [
    "",
    "BED2 1 1 2\n01\n",
    "BED1 2 1 2\n01\n",
    "BED1 1 1 2\n012\n",
    "BED1 1 1 2\n0a\n",
    "BED1 1 1 2\r\n01\r\n",
    "BED1 x 1 2\n01\n",
])
def test_dataset_format_errors(text):
    with pytest.raises(FormatError):
        parse_dataset(text)


def test_dataset_writer_validation():
    with pytest.raises(ValueError):
        dataset_text(np.array([[0, 2]]), (1, 2))
    with pytest.raises(ValueError):
        dataset_text(np.array([[0, 1, 1]]), (1, 2))


def test_pgm_layout(tmp_path):
    values = np.linspace(0, 1, 56 * 56)
    raw = pgm_bytes(values, (56, 56))
    assert raw.startswith(b"P5\n56 56\n255\n")
    assert len(raw) == len(b"P5\n56 56\n255\n") + 56 * 56
    path = tmp_path / "a.pgm"
    path.write_bytes(raw)
    pix = read_netpbm(path)
    assert pix.shape == (56, 56) and pix[0, 0] == 0 and pix[-1, -1] == 255


def test_ppm_colours(tmp_path):
    rgb = diverging_rgb(np.array([0.0, 0.5, 1.0]))
    assert rgb.tolist() == [[0, 0, 255], [128, 128, 128], [255, 255, 0]]
    raw = ppm_bytes(np.array([0.0, 0.5, 1.0, 0.25]), (2, 2))
    assert raw.startswith(b"P6\n2 2\n255\n")
    path = tmp_path / "a.ppm"
    path.write_bytes(raw)
    assert read_netpbm(path).shape == (2, 2, 3)
    path.write_bytes(raw[:-1])
    with pytest.raises(FormatError):
        read_netpbm(path)
