"""Command-line interface: ``binexperts <command> ...``.

Metrics go to standard output as TSV, diagnostics to standard error.
Exit codes: 0 success, 2 usage or validation error, 3 I/O error,
4 numeric degeneration (NaN during training).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .compose import Rule, RuleKind
from .learning import (TrainConfig, e_step, fit_geometry, sample_configurations,
                       train_batch, train_online)
from .model import ExpertModel
from .synthetic import (GLYPH_NAMES, BarLetterCfg, QuadrantModelCfg, SceneCfg, analyze_scene,
                        gen_bars, gen_quadrant, gen_scene, glyph_model, landscape,
                        landscape_argmax)
from .transform import TransformGrid

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

log = logging.getLogger("binexperts")


class NumericError(RuntimeError):
    pass


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def _tsv(out, *fields) -> None:
    out.write("\t".join(_fmt(f) for f in fields) + "\n")


def _figures(args):
    """The plotting module when ``--figures`` was given, else None."""
    if not getattr(args, "figures", None):
        return None
    from . import plotting
    Path(args.figures).mkdir(parents=True, exist_ok=True)
    return plotting


def _sidecar(out: str, suffix: str) -> Path:
    p = Path(out)
    return p.with_name(p.name + suffix)


def _grid(name: str) -> TransformGrid:
    return TransformGrid.letters_default() if name == "letters" else TransformGrid.identity_grid()


def _image_writer(rule: Rule):
    """(extension, encoder) for probability images of a model with this rule."""
    if rule.symmetric:
        return ".ppm", io.ppm_bytes
    return ".pgm", io.pgm_bytes


# --------------------------------------------------------------------- gen

def cmd_gen(args, out) -> int:
    if args.kind == "quadrant":
        cfg = QuadrantModelCfg(side=args.side, seed=args.seed)
        data, truth = gen_quadrant(cfg, args.n)
        shape = (cfg.side, cfg.side)
        io.save_dataset(args.out, data, shape)
        gt = ExpertModel(rule=Rule(RuleKind.MAX_MINUS_MIN), templates=truth, shape=shape)
        io.save_model(args.truth or _sidecar(args.out, ".truth.json"), gt)
    elif args.kind == "bars":
        cfg = BarLetterCfg(seed=args.seed)
        data, truth = gen_bars(cfg, args.n)
        io.save_dataset(args.out, data, cfg.canvas)
        gt = ExpertModel(rule=Rule(RuleKind.MAX), templates=truth, shape=cfg.canvas,
                         grid=TransformGrid.letters_default())
        io.save_model(args.truth or _sidecar(args.out, ".truth.json"), gt)
    else:
        cfg = SceneCfg(canvas=(args.canvas, args.canvas), count=args.count,
                       flip_noise=args.noise, seed=args.seed)
        clean, noisy, truth = gen_scene(cfg)
        io.save_dataset(args.out, np.stack([clean, noisy]), cfg.canvas)
        grid = glyph_model(cfg).grid
        placements = []
        for g, t in truth:
            sx, sy, _ = grid.params(t)
            placements.append({"glyph": int(g), "name": GLYPH_NAMES[g], "transform": int(t),
                               "shift_x": int(sx), "shift_y": int(sy)})
        doc = {"records": ["clean", "noisy"], "canvas": list(cfg.canvas),
               "flip_noise": float(cfg.flip_noise), "seed": int(cfg.seed),
               "placements": placements}
        io.write_text(args.truth or _sidecar(args.out, ".truth.json"), io.dumps(doc))
    return 0


# ------------------------------------------------------------------- train

def _check_finite(model: ExpertModel) -> None:
    if not np.isfinite(model.templates).all():
        raise NumericError("training produced non-finite template values")


def _attach_geometry(model: ExpertModel, data) -> ExpertModel:
    if len(model.grid) == 1:
        return model
    try:
        g = fit_geometry(e_step(model, data), model.grid, model.n_experts)
    except ValueError as exc:
        log.warning("geometry not fitted: %s", exc)
        return model
    return model.replace(geometry=g)


def cmd_train(args, out) -> int:
    data, shape = io.load_dataset(args.data)
    rule = Rule.parse(args.rule, args.q)
    cfg = TrainConfig(rule=rule, epsilon=args.epsilon, k_max=args.k_max, epochs=args.epochs,
                      theta_add=args.theta_add, seed=args.seed, init=args.init, shape=shape,
                      grid=_grid(args.grid), workers=args.workers)
    if args.mode == "online":
        history = []
        model = train_online(data, cfg, history=history)
        _tsv(out, "example", "experts", "loglik_per_pixel", "added")
        for i, k, per_dim, added in history:
            _tsv(out, i + 1, k, per_dim, int(added))
            if i > 0 and math.isnan(per_dim):
                raise NumericError(f"log-likelihood became NaN at example {i + 1}")
    else:
        init = io.load_model(args.init_from) if args.init_from else None
        if init is not None and (init.shape != shape):
            raise ValueError(f"initial model shape {init.shape} does not match data {shape}")
        history = []
        model = train_batch(data, cfg, init=init, history=history)
        _tsv(out, "epoch", "mean_loglik")
        for epoch, value in history:
            if math.isnan(value):
                raise NumericError(f"mean log-likelihood became NaN at epoch {epoch}")
            _tsv(out, epoch, value)
    _check_finite(model)
    model = _attach_geometry(model, data)
    io.save_model(args.out, model)
    plots = _figures(args)
    if plots:
        plots.template_grid(Path(args.figures) / "experts.png", model.templates, shape,
                            symmetric=rule.symmetric,
                            titles=[f"expert {k + 1}" for k in range(model.n_experts)])
        if args.mode == "batch" and history:
            plots.history_figure(Path(args.figures) / "history.png", *zip(*history),
                                 xlabel="epoch", ylabel="mean log-likelihood (nats)")
        elif args.mode == "online" and len(history) > 1:
            rows = history[1:]
            plots.history_figure(Path(args.figures) / "history.png", [r[0] + 1 for r in rows],
                                 [r[2] for r in rows], xlabel="example",
                                 ylabel="log-likelihood per pixel (nats)")
    return 0


# ----------------------------------------------------------- infer / eval

def _load_pair(args):
    model = io.load_model(args.model)
    data, shape = io.load_dataset(args.data)
    if shape != model.shape:
        raise ValueError(f"data images are {shape[0]}x{shape[1]}, model expects "
                         f"{model.shape[0]}x{model.shape[1]}")
    return model, data


def _robustify(flag: str):
    return {"auto": None, "on": True, "off": False}[flag]


def cmd_infer(args, out) -> int:
    model, data = _load_pair(args)
    reps = e_step(model, data, workers=args.workers, robustify_first=_robustify(args.robustify))
    io.save_reps(args.out, reps)
    return 0


def cmd_eval(args, out) -> int:
    model, data = _load_pair(args)
    reps = e_step(model, data, workers=args.workers)
    nll = -np.array([r.loglik for r in reps])
    # Sorting makes the mean independent of record order down to the last bit.
    per_image = math.fsum(np.sort(nll)) / len(nll)
    _tsv(out, "n", "nats_per_image", "nats_per_pixel")
    _tsv(out, len(nll), per_image, per_image / model.dim)
    return 0


# ---------------------------------------------------------- sample / render

def cmd_sample(args, out) -> int:
    model = io.load_model(args.model)
    if model.geometry is None:
        raise ValueError("model has no geometry; train it with a transform grid first")
    samples = sample_configurations(model.geometry, model, args.n, args.seed)
    ext, encode = _image_writer(model.rule)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(samples):
        io.write_bytes(outdir / f"sample_{i:03d}{ext}", encode(s, model.shape))
    plots = _figures(args)
    if plots:
        plots.template_grid(Path(args.figures) / "samples.png", samples, model.shape,
                            symmetric=model.rule.symmetric, ncols=min(args.n, 3))
    return 0


def cmd_render(args, out) -> int:
    model = io.load_model(args.model)
    ext, encode = _image_writer(model.rule)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for k, t in enumerate(model.templates):
        io.write_bytes(outdir / f"expert_{k:03d}{ext}", encode(t, model.shape))
    plots = _figures(args)
    if plots:
        plots.template_grid(Path(args.figures) / "experts.png", model.templates, model.shape,
                            symmetric=model.rule.symmetric,
                            titles=[f"expert {k + 1}" for k in range(model.n_experts)])
    return 0


# --------------------------------------------------------------- landscape

def cmd_landscape(args, out) -> int:
    rule = Rule.parse(args.rule, args.q)
    axis, values = landscape(rule, args.step)
    lo, hi = values.min(), values.max()
    scaled = np.zeros_like(values) if hi == lo else (values - lo) / (hi - lo)
    io.write_bytes(args.out, io.pgm_bytes(scaled, values.shape))
    rows = ["\t".join(format(float(v), ".17g") for v in row) for row in values]
    io.write_text(args.tsv or _sidecar(args.out, ".tsv"), "\n".join(rows) + "\n")
    maxima = landscape_argmax(axis, values)
    _tsv(out, "p1", "p2", "loglik_per_pixel")
    for p1, p2 in maxima:
        _tsv(out, p1, p2, float(values.max()))
    plots = _figures(args)
    if plots:
        plots.landscape_figure(Path(args.figures) / "landscape.png", axis, values, maxima,
                               title=rule.name)
    return 0


# -------------------------------------------------------------- scene demo

def cmd_scene_demo(args, out) -> int:
    cfg = SceneCfg(canvas=(args.canvas, args.canvas), count=args.count,
                   flip_noise=args.noise, seed=args.seed)
    result = analyze_scene(cfg, robustify=args.robustify == "on")
    grid = glyph_model(cfg).grid
    truth = set(result.truth)
    _tsv(out, "glyph", "shift_x", "shift_y", "status")
    for g, t in result.picks:
        sx, sy, _ = grid.params(t)
        _tsv(out, GLYPH_NAMES[g], sx, sy, "match" if (g, t) in truth else "spurious")
    for g, t in result.truth:
        if (g, t) not in set(result.picks):
            sx, sy, _ = grid.params(t)
            _tsv(out, GLYPH_NAMES[g], sx, sy, "missed")
    _tsv(out, "recovered", f"{result.recovered}/{len(result.truth)}", "spurious",
         len(result.spurious))
    plots = _figures(args)
    if plots:
        _, noisy, _ = gen_scene(cfg)
        plots.scene_figure(Path(args.figures) / "scene.png", noisy, cfg.canvas, result.picks,
                           result.truth, cfg.glyphs.shape[1:], grid)
    return 0


# ------------------------------------------------------------------ parser

def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not a probability")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="binexperts", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def figures(p):
        p.add_argument("--figures", metavar="DIR",
                       help="also write PNG figures here (needs matplotlib)")

    def workers(p):
        p.add_argument("--workers", type=_positive_int, default=None,
                       help="inference threads (default: BE_THREADS or all cores)")

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("kind", choices=("quadrant", "scene", "bars"))
    p.add_argument("--n", type=_positive_int, default=100, help="number of images")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", type=int, default=6, help="quadrant image side")
    p.add_argument("--count", type=_positive_int, default=5, help="glyphs per scene")
    p.add_argument("--noise", type=_probability, default=0.1, help="scene flip noise")
    p.add_argument("--canvas", type=_positive_int, default=32, help="scene canvas side")
    p.add_argument("--out", required=True, help="dataset file (BED1)")
    p.add_argument("--truth", help="ground-truth sidecar (default: OUT.truth.json)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="learn experts from a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--rule", default="maxminusmin", choices=[k.value for k in RuleKind])
    p.add_argument("--q", type=float, default=0.5, help="max-minus-min pivot")
    p.add_argument("--mode", choices=("batch", "online"), default="batch")
    p.add_argument("--k-max", type=_positive_int, default=8)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--theta-add", type=float, default=math.log(0.6),
                   help="spawn threshold on per-pixel log-likelihood (online mode)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("random", "online"), default="random")
    p.add_argument("--init-from", help="model file to start batch EM from")
    p.add_argument("--grid", choices=("identity", "letters"), default="identity")
    p.add_argument("--out", required=True, help="model file (JSON)")
    workers(p)
    figures(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="explain each record with likelihood matching pursuit")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--robustify", choices=("auto", "on", "off"), default="auto")
    p.add_argument("--out", required=True, help="representations file (JSON)")
    workers(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="mean cross-entropy of a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    workers(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample", help="composed templates from the geometric model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=_positive_int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    figures(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("render", help="one image per expert template")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="output directory")
    figures(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("landscape", help="two-expert log-likelihood landscape")
    p.add_argument("--rule", default="maxminusmin", choices=[k.value for k in RuleKind])
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--out", required=True, help="heatmap (PGM)")
    p.add_argument("--tsv", help="raw grid (default: OUT.tsv)")
    figures(p)
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("scene-demo", help="resolve a noisy glyph scene")
    p.add_argument("--noise", type=_probability, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--robustify", choices=("on", "off"), default="on")
    p.add_argument("--count", type=_positive_int, default=5)
    p.add_argument("--canvas", type=_positive_int, default=32)
    figures(p)
    p.set_defaults(func=cmd_scene_demo)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except NumericError as exc:
        print(f"binexperts: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, IndexError) as exc:
        print(f"binexperts: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"binexperts: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
