"""File formats: BED1 datasets, JSON model and representation files, PGM/PPM images.

All writers go through a temporary file in the destination directory and
an atomic rename, so a crashed run never leaves a half-written file behind.
Floats in JSON are written with 17 significant digits, which makes
write -> read -> write byte-identical.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .compose import Rule
from .model import ExpertModel, GeometricModel, Representation
from .transform import TransformGrid

MODEL_VERSION = 1
DATASET_MAGIC = "BED1"


class FormatError(ValueError):
    """A file parsed but violates its format contract."""


# ------------------------------------------------------------ atomic writes

def write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_text(path, text: str) -> None:
    write_bytes(path, text.encode("utf-8"))


# --------------------------------------------------------------------- JSON

def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError("cannot serialise a non-finite number")
        text = format(v, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    return _encode(obj, 2, 0) + "\n"


def _count_value(v: float):
    return int(v) if float(v).is_integer() else float(v)


def model_to_dict(model: ExpertModel) -> dict:
    if model.shape is None:
        raise ValueError("model files need an image shape")
    g = model.geometry
    d = {
        "version": MODEL_VERSION,
        "rule": model.rule.name,
        "q": float(model.rule.q),
        "epsilon": float(model.epsilon),
        "shape": [int(model.shape[0]), int(model.shape[1])],
        "experts": [[float(v) for v in row] for row in model.templates],
        "counts": [[_count_value(v) for v in row] for row in model.counts],
        "transform_grid": model.grid.to_dict(),
        "geometry": None if g is None else {
            "mean": [float(v) for v in g.mean],
            "cov": [[float(v) for v in row] for row in g.cov],
            "n": int(g.n),
        },
    }
    if model.fill is not None:
        d["fill"] = float(model.fill)
    if not model.one_transform_per_expert:
        d["one_transform_per_expert"] = False
    return d


def model_from_dict(d: dict) -> ExpertModel:
    try:
        if d.get("version") != MODEL_VERSION:
            raise FormatError(f"unsupported model version {d.get('version')!r}")
        rule = Rule.parse(d["rule"], float(d["q"]))
        shape = tuple(int(v) for v in d["shape"])
        templates = np.asarray(d["experts"], dtype=float)
        counts = np.asarray(d["counts"], dtype=float)
        if templates.ndim != 2 or templates.shape[1] != shape[0] * shape[1]:
            raise FormatError("experts do not match the declared shape")
        geometry = None
        if d.get("geometry") is not None:
            g = d["geometry"]
            geometry = GeometricModel(mean=g["mean"], cov=g["cov"], n=int(g["n"]))
        return ExpertModel(rule=rule, templates=templates, epsilon=float(d["epsilon"]),
                           shape=shape, grid=TransformGrid.from_dict(d["transform_grid"]),
                           counts=counts, geometry=geometry,
                           one_transform_per_expert=bool(d.get("one_transform_per_expert", True)),
                           fill=d.get("fill"))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed model file: {exc}") from exc


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from exc


def save_model(path, model: ExpertModel) -> None:
    write_text(path, dumps(model_to_dict(model)))


def load_model(path) -> ExpertModel:
    return model_from_dict(read_json(path))


def save_reps(path, reps) -> None:
    write_text(path, dumps([r.to_dict() for r in reps]))


def load_reps(path) -> list[Representation]:
    try:
        return [Representation.from_dict(d) for d in read_json(path)]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed representations file: {exc}") from exc


# ------------------------------------------------------------------ dataset

def dataset_text(data, shape) -> str:
    data = np.asarray(data)
    h, w = int(shape[0]), int(shape[1])
    if data.ndim != 2 or data.shape[1] != h * w:
        raise ValueError(f"data of shape {data.shape} does not match {h}x{w} images")
    if data.size and not np.isin(data, (0, 1)).all():
        raise ValueError("dataset entries must be 0 or 1")
    lines = [f"{DATASET_MAGIC} {data.shape[0]} {h} {w}"]
    digits = np.array(["0", "1"])
    lines += ["".join(digits[row.astype(np.int64)]) for row in data]
    return "\n".join(lines) + "\n"


def save_dataset(path, data, shape) -> None:
    write_text(path, dataset_text(data, shape))


def parse_dataset(text: str) -> tuple[np.ndarray, tuple[int, int]]:
    if "\r" in text:
        raise FormatError("dataset must use LF line endings")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("empty dataset file")
    head = lines[0].split(" ")
    if len(head) != 4 or head[0] != DATASET_MAGIC or not all(h.isdigit() for h in head[1:]):
        raise FormatError(f"bad header {lines[0]!r}")
    n, h, w = (int(v) for v in head[1:])
    if len(lines) - 1 != n:
        raise FormatError(f"header declares {n} records, found {len(lines) - 1}")
    out = np.zeros((n, h * w), dtype=np.uint8)
    for i, line in enumerate(lines[1:]):
        if len(line) != h * w or line.strip("01"):
            raise FormatError(f"record {i + 1}: expected {h * w} characters from {{0,1}}")
        out[i] = np.frombuffer(line.encode("ascii"), dtype=np.uint8) - ord("0")
    return out, (h, w)


def load_dataset(path) -> tuple[np.ndarray, tuple[int, int]]:
    with open(path, encoding="ascii", newline="") as fh:
        try:
            text = fh.read()
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: not an ASCII dataset") from exc
    return parse_dataset(text)


# ------------------------------------------------------------------- images

def _to_byte(v) -> np.ndarray:
    return np.rint(np.clip(np.asarray(v, dtype=float), 0.0, 1.0) * 255.0).astype(np.uint8)


def pgm_bytes(values, shape) -> bytes:
    """Binary greyscale image, [0, 1] mapped linearly to [0, 255]."""
    h, w = shape
    pix = _to_byte(values).reshape(h, w)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pix.tobytes()


def diverging_rgb(values) -> np.ndarray:
    """Blue at 0, grey (128,128,128) at 1/2, yellow at 1, linear in between."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    blue = np.array([0.0, 0.0, 255.0])
    grey = np.array([128.0, 128.0, 128.0])
    yellow = np.array([255.0, 255.0, 0.0])
    lo = np.clip(2.0 * v, 0.0, 1.0)[..., None]
    hi = np.clip(2.0 * v - 1.0, 0.0, 1.0)[..., None]
    rgb = np.where(v[..., None] <= 0.5, blue + lo * (grey - blue), grey + hi * (yellow - grey))
    return np.rint(rgb).astype(np.uint8)


def ppm_bytes(values, shape) -> bytes:
    h, w = shape
    rgb = diverging_rgb(np.asarray(values).reshape(h, w))
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def read_netpbm(path) -> np.ndarray:
    """Pixel array of a P5 (h, w) or P6 (h, w, 3) file written by this module."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) != 4 or parts[0] not in (b"P5", b"P6") or parts[2] != b"255":
        raise FormatError(f"{path}: unsupported netpbm header")
    w, h = (int(v) for v in parts[1].split())
    channels = 3 if parts[0] == b"P6" else 1
    pix = np.frombuffer(parts[3], dtype=np.uint8)
    if pix.size != w * h * channels:
        raise FormatError(f"{path}: truncated pixel data")
    return pix.reshape((h, w, 3) if channels == 3 else (h, w))
