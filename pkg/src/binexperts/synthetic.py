"""Synthetic data and analytic evaluators.

* a 6x6 quadrant model with eight ground-truth experts (four quadrants,
  two polarities);
* write-black glyph scenes for testing greedy scene analysis;
* a two-bar letter ("T") generator with jittered bars;
* the expected log-likelihood landscape of a two-expert model on
  black/white/noise images in the large-resolution limit.

All randomness comes from :class:`binexperts.rng.Stream`; each generator
uses a single stream (stream id 0) seeded by ``cfg.seed`` and consumes it in
sample order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .compose import DELTA, Rule, RuleKind, compose_template
from .inference import lmp_infer
from .likelihood import log_likelihood
from .model import ExpertModel
from .rng import Stream
from .transform import TransformGrid


# ---------------------------------------------------------------- quadrants

@dataclass
class QuadrantModelCfg:
    side: int = 6
    activation_prob: float = 0.5
    polarity_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.side < 2 or self.side % 2:
            raise ValueError(f"side must be even and at least 2, got {self.side}")
        for name in ("activation_prob", "polarity_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")


def quadrant_masks(side: int) -> np.ndarray:
    """Boolean masks of the four quadrants (TL, TR, BL, BR), shape ``(4, side*side)``."""
    h = side // 2
    masks = np.zeros((4, side, side), dtype=bool)
    masks[0, :h, :h] = True
    masks[1, :h, h:] = True
    masks[2, h:, :h] = True
    masks[3, h:, h:] = True
    return masks.reshape(4, -1)


def quadrant_ground_truth(side: int = 6) -> np.ndarray:
    """Eight templates: for each quadrant a black (all 1) then a white (all 0) expert."""
    masks = quadrant_masks(side)
    out = np.full((8, side * side), 0.5)
    for q, m in enumerate(masks):
        out[2 * q, m] = 1.0
        out[2 * q + 1, m] = 0.0
    return out


def gen_quadrant(cfg: QuadrantModelCfg, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` quadrant images (shape ``(n, side*side)``) and the ground-truth experts."""
    if n < 1:
        raise ValueError("n must be at least 1")
    masks = quadrant_masks(cfg.side)
    d = cfg.side * cfg.side
    u = Stream(cfg.seed).uniform((n, 8 + d))
    active = u[:, :4] < cfg.activation_prob
    black = u[:, 4:8] < cfg.polarity_prob
    data = (u[:, 8:] < 0.5).astype(np.uint8)
    for q, m in enumerate(masks):
        rows = active[:, q]
        data[np.ix_(rows, m)] = black[rows, q][:, None].astype(np.uint8)
    return data, quadrant_ground_truth(cfg.side)


def quadrant_compositions(side: int = 6, rule: Rule | None = None) -> np.ndarray:
    """All 3^4 ground-truth compositions (each quadrant: black, white or none)."""
    rule = rule or Rule(RuleKind.MAX_MINUS_MIN)
    truth = quadrant_ground_truth(side)
    out = []
    for choice in itertools.product((None, 0, 1), repeat=4):
        picked = [truth[2 * q + c] for q, c in enumerate(choice) if c is not None]
        arr = np.asarray(picked, dtype=float).reshape(len(picked), side * side)
        out.append(compose_template(rule, arr))
    return np.stack(out)


def best_composition_loglik(data, compositions) -> np.ndarray:
    c = np.clip(compositions, DELTA, 1.0 - DELTA)
    x = np.asarray(data, dtype=float)
    ll = x @ np.log(c).T + (1.0 - x) @ np.log1p(-c).T
    return ll.max(axis=1)


def ground_truth_cross_entropy(cfg: QuadrantModelCfg, n_mc: int = 10_000,
                               seed: int | None = None) -> tuple[float, float]:
    """Monte Carlo cross-entropy (nats/image) of the best ground-truth composition.

    Returns ``(estimate, standard_error)``.
    """
    if n_mc < 1000:
        raise ValueError("n_mc must be at least 1000")
    if seed is not None:
        cfg = QuadrantModelCfg(cfg.side, cfg.activation_prob, cfg.polarity_prob, seed)
    data, _ = gen_quadrant(cfg, n_mc)
    nll = -best_composition_loglik(data, quadrant_compositions(cfg.side))
    return float(nll.mean()), float(nll.std(ddof=1) / math.sqrt(n_mc))


# ------------------------------------------------------------------- scenes

GLYPH_SIZE = 8
GLYPH_ON = 0.9
GLYPH_OFF = 0.05


def _glyph_masks() -> dict[str, np.ndarray]:
    g = GLYPH_SIZE
    bar = np.zeros((g, g), bool)
    bar[2:5, :] = True
    ell = np.zeros((g, g), bool)
    ell[:, :3] = True
    ell[-3:, :] = True
    cross = np.zeros((g, g), bool)
    cross[3:5, :] = True
    cross[:, 3:5] = True
    box = np.ones((g, g), bool)
    box[2:-2, 2:-2] = False
    diag = np.zeros((g, g), bool)
    for i in range(g):
        diag[i, max(0, i - 1):i + 1] = True
    return {"bar": bar, "ell": ell, "cross": cross, "box": box, "diagonal": diag}


GLYPH_NAMES = tuple(_glyph_masks())


def glyph_masks() -> np.ndarray:
    """The built-in glyphs as boolean arrays, shape ``(5, 8, 8)``."""
    return np.stack(list(_glyph_masks().values()))


@dataclass
class SceneCfg:
    canvas: tuple[int, int] = (32, 32)
    count: int = 5
    flip_noise: float = 0.1
    seed: int = 0
    glyphs: np.ndarray | None = None
    allow_overlap: bool = False

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if not 0.0 <= self.flip_noise < 0.5:
            raise ValueError("flip_noise must lie in [0, 0.5)")
        if self.glyphs is None:
            self.glyphs = glyph_masks()
        self.glyphs = np.asarray(self.glyphs, dtype=bool)
        if self.glyphs.ndim != 3 or len(self.glyphs) == 0:
            raise ValueError("glyph bank must be a nonempty (G, h, w) array")
        gh, gw = self.glyphs.shape[1:]
        if gh > self.canvas[0] or gw > self.canvas[1]:
            raise ValueError("glyphs are larger than the canvas")


def scene_grid(canvas, glyph_shape) -> TransformGrid:
    h, w = canvas
    gh, gw = glyph_shape
    return TransformGrid(tuple(range(0, w - gw + 1)), tuple(range(0, h - gh + 1)), (0.0,))


def glyph_model(cfg: SceneCfg) -> ExpertModel:
    """Max-rule model whose experts are the glyphs drawn at the canvas origin."""
    h, w = cfg.canvas
    gh, gw = cfg.glyphs.shape[1:]
    templates = np.full((len(cfg.glyphs), h, w), GLYPH_OFF)
    templates[:, :gh, :gw] = np.where(cfg.glyphs, GLYPH_ON, GLYPH_OFF)
    return ExpertModel(rule=Rule(RuleKind.MAX), templates=templates.reshape(len(cfg.glyphs), -1),
                       shape=(h, w), grid=scene_grid(cfg.canvas, (gh, gw)),
                       one_transform_per_expert=False, fill=GLYPH_OFF)


def render_scene(cfg: SceneCfg, placements) -> np.ndarray:
    """Clean write-black scene (union of glyph supports) for ``(glyph, shift_x, shift_y)``."""
    h, w = cfg.canvas
    gh, gw = cfg.glyphs.shape[1:]
    img = np.zeros((h, w), dtype=bool)
    for g, sx, sy in placements:
        img[sy:sy + gh, sx:sx + gw] |= cfg.glyphs[g]
    return img.reshape(-1).astype(np.uint8)


def gen_scene(cfg: SceneCfg):
    """Return ``(clean, noisy, truth)``; truth lists ``(glyph, transform)`` pairs."""
    h, w = cfg.canvas
    gh, gw = cfg.glyphs.shape[1:]
    s = Stream(cfg.seed)
    placements = []
    for _ in range(cfg.count):
        for _attempt in range(1000):
            g = s.integers(0, len(cfg.glyphs) - 1)
            sx = s.integers(0, w - gw)
            sy = s.integers(0, h - gh)
            clash = any(abs(sx - ox) < gw and abs(sy - oy) < gh for _, ox, oy in placements)
            if cfg.allow_overlap or not clash:
                break
        placements.append((g, sx, sy))
    clean = render_scene(cfg, placements)
    flips = s.bernoulli(cfg.flip_noise, h * w)
    noisy = clean ^ flips
    grid = scene_grid(cfg.canvas, (gh, gw))
    truth = [(g, grid.index(sx, sy)) for g, sx, sy in placements]
    return clean, noisy, truth


@dataclass
class SceneResult:
    truth: list[tuple[int, int]]
    picks: list[tuple[int, int]]
    first_correct: bool

    @property
    def recovered(self) -> int:
        return len(set(self.truth) & set(self.picks))

    @property
    def spurious(self) -> list[tuple[int, int]]:
        return [p for p in self.picks if p not in set(self.truth)]

    @property
    def success(self) -> bool:
        return set(self.truth) <= set(self.picks)


def analyze_scene(cfg: SceneCfg, robustify: bool = True) -> SceneResult:
    """Generate a scene and explain its noisy version with the glyph bank."""
    _, noisy, truth = gen_scene(cfg)
    model = glyph_model(cfg)
    rep = lmp_infer(model, noisy, robustify_first=robustify)
    return SceneResult(truth=truth, picks=rep.picks, first_correct=rep.picks[0] in set(truth))


# --------------------------------------------------------------------- bars

@dataclass
class BarLetterCfg:
    canvas: tuple[int, int] = (56, 56)
    length: int = 34
    thickness: int = 4
    shift_jitter: int = 6
    rotation_jitter: float = 10.0
    ink_prob: float = 0.95
    background_prob: float = 0.02
    seed: int = 0
    horizontal_center: tuple[float, float] = (13.0, 28.0)
    vertical_center: tuple[float, float] = (31.0, 28.0)

    def __post_init__(self):
        h, w = self.canvas
        half_len = self.length / 2.0
        half_th = self.thickness / 2.0
        a = math.radians(self.rotation_jitter)
        along = half_len * math.cos(a) + half_th * math.sin(a)
        across = half_len * math.sin(a) + half_th * math.cos(a)
        for (cy, cx), (ey, ex) in ((self.horizontal_center, (across, along)),
                                   (self.vertical_center, (along, across))):
            ey += self.shift_jitter
            ex += self.shift_jitter
            if cy - ey < -0.5 or cy + ey > h - 0.5 or cx - ex < -0.5 or cx + ex > w - 0.5:
                raise ValueError("bars do not fit the canvas under maximal jitter")
        for name in ("ink_prob", "background_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")


def bar_mask(canvas, center, length, thickness, angle) -> np.ndarray:
    """Pixels whose centre lies inside a rotated rectangle; ``angle`` 0 is horizontal."""
    h, w = canvas
    rows, cols = np.mgrid[0:h, 0:w]
    y = rows - center[0]
    x = cols - center[1]
    a = math.radians(angle)
    # Round so that right angles put pixel centres exactly on the edges.
    along = np.round(math.cos(a) * x - math.sin(a) * y, 9)
    across = np.round(math.sin(a) * x + math.cos(a) * y, 9)
    inside = ((along >= -length / 2.0) & (along < length / 2.0)
              & (across >= -thickness / 2.0) & (across < thickness / 2.0))
    return inside.reshape(-1)


def bars_ground_truth(cfg: BarLetterCfg) -> np.ndarray:
    horiz = bar_mask(cfg.canvas, cfg.horizontal_center, cfg.length, cfg.thickness, 0.0)
    vert = bar_mask(cfg.canvas, cfg.vertical_center, cfg.length, cfg.thickness, 90.0)
    return np.stack([horiz, vert]).astype(float)


def gen_bars(cfg: BarLetterCfg, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` noisy T-like images, each a jittered horizontal plus vertical bar."""
    if n < 2:
        raise ValueError("n must be at least 2")
    s = Stream(cfg.seed)
    d = cfg.canvas[0] * cfg.canvas[1]
    out = np.zeros((n, d), dtype=np.uint8)
    for i in range(n):
        support = np.zeros(d, dtype=bool)
        for center, base in ((cfg.horizontal_center, 0.0), (cfg.vertical_center, 90.0)):
            dx = s.integers(-cfg.shift_jitter, cfg.shift_jitter)
            dy = s.integers(-cfg.shift_jitter, cfg.shift_jitter)
            rot = (2.0 * s.uniform() - 1.0) * cfg.rotation_jitter
            support |= bar_mask(cfg.canvas, (center[0] + dy, center[1] + dx),
                                cfg.length, cfg.thickness, base + rot)
        u = s.uniform(d)
        out[i] = np.where(support, u < cfg.ink_prob, u < cfg.background_prob)
    return out, bars_ground_truth(cfg)


# ---------------------------------------------------------------- landscape

def landscape_axis(step: float) -> np.ndarray:
    """Grid coordinates ``step, 2*step, ..., 1 - step`` clipped to [DELTA, 1 - DELTA]."""
    if not 0.0 < step <= 0.1:
        raise ValueError("grid step must lie in (0, 0.1]")
    n = int(round(1.0 / step))
    return np.clip(np.arange(1, n) / n, DELTA, 1.0 - DELTA)


def _expected_pixel_logliks(c):
    c = np.clip(c, DELTA, 1.0 - DELTA)
    lo, l0 = np.log(c), np.log1p(-c)
    return lo, l0, 0.5 * (lo + l0)


def landscape_values(rule: Rule, p1, p2) -> np.ndarray:
    """Expected per-pixel log-likelihood of a two-expert model at ``(p1, p2)``.

    Data are all-black (1/4), all-white (1/4) or Bernoulli(1/2) noise (1/2).
    In the large-resolution limit each image type is explained by its best
    expert subset, and per-pixel log-likelihoods are deterministic.
    """
    p1, p2 = np.broadcast_arrays(np.asarray(p1, dtype=float), np.asarray(p2, dtype=float))
    candidates = [compose_template(rule, p[None]) for p in (p1, p2)]
    candidates.append(compose_template(rule, np.stack([p1, p2])))
    if rule.abstention is not None:
        candidates.append(np.full(p1.shape, rule.abstention))
    black, white, noise = zip(*(_expected_pixel_logliks(c) for c in candidates))
    return (0.25 * np.max(black, axis=0) + 0.25 * np.max(white, axis=0)
            + 0.5 * np.max(noise, axis=0))


def landscape(rule: Rule, grid_step: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    """Landscape on the square grid; returns ``(axis, values)`` with ``values[i, j]`` at ``(p1=axis[i], p2=axis[j])``."""
    axis = landscape_axis(grid_step)
    p1, p2 = np.meshgrid(axis, axis, indexing="ij")
    return axis, landscape_values(rule, p1, p2)


def landscape_argmax(axis, values, atol: float = 1e-12) -> list[tuple[float, float]]:
    best = values.max()
    idx = np.argwhere(values >= best - atol)
    return [(float(axis[i]), float(axis[j])) for i, j in idx]


def landscape_gradient(rule: Rule, p1: float, p2: float, h: float = 1e-6) -> tuple[float, float]:
    """Central finite-difference gradient of :func:`landscape_values`."""
    f = lambda a, b: float(landscape_values(rule, a, b))
    g1 = (f(p1 + h, p2) - f(p1 - h, p2)) / (2 * h)
    g2 = (f(p1, p2 + h) - f(p1, p2 - h)) / (2 * h)
    return g1, g2
