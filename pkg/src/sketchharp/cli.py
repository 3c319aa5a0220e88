"""Command-line interface: corpus conversion, training, generation,
reconstruction, scripted manipulation, evaluation, serving, and SVG export."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch

from .checkpoint import load_checkpoint
from .config import ModelConfig, TrainConfig
from .corpus import (
    convert_quickdraw_npz,
    load_corpus,
    normalize_corpus,
    parse_stroke5,
    save_corpus,
)
from .distributions import SampleStream
from .generator import generate_sketch
from .manipulation import DrawingSession, replay_events
from .svg import record_to_svg


def _load_configs(path: str | None) -> tuple[ModelConfig, TrainConfig]:
    if path is None:
        return ModelConfig(), TrainConfig()
    with open(path) as fh:
        obj = json.load(fh)
    return ModelConfig.from_dict(obj.get("model", {})), TrainConfig.from_dict(obj.get("train", {}))


def _random_code(dim: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal(dim)


def cmd_convert(args) -> int:
    if args.synthetic:
        from .synthetic import CATEGORIES, make_raw_corpus

        cats = tuple(args.categories.split(",")) if args.categories else CATEGORIES
        raws = make_raw_corpus(args.synthetic, categories=cats, seed=args.seed)
        records = [parse_stroke5(raw, category=c) for raw, c in raws]
        dropped = 0
    else:
        if not args.npz:
            print("convert: need --npz PATH or --synthetic N", file=sys.stderr)
            return 2
        records, dropped = convert_quickdraw_npz(
            args.npz, split=args.split, limit=args.limit, category=args.category
        )
    if args.normalize:
        records, sigma = normalize_corpus(records)
        print(f"normalized with sigma={sigma:.6f}")
    save_corpus(records, args.out)
    print(f"wrote {len(records)} records to {args.out} (dropped {dropped} over-limit)")
    return 0


def cmd_train(args) -> int:
    from .training import train

    model_cfg, train_cfg = _load_configs(args.config)
    if args.seed is not None:
        train_cfg.seed = args.seed
    if args.steps is not None:
        train_cfg.steps = args.steps
    records = load_corpus(args.corpus)
    result = train(records, model_cfg, train_cfg, out_dir=args.out, resume_from=args.resume)
    print(f"trained {result.steps} steps; final total loss {result.last_loss.total:.4f}")
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"loss log: {result.log_path}")
    return 0


def _source_code(args, model):
    if args.corpus and args.index is not None:
        records = load_corpus(args.corpus)
        rec = records[args.index]
        with torch.no_grad():
            return model.encode_record(rec), rec
    return torch.as_tensor(
        _random_code(model.cfg.embed_dim, args.seed), dtype=model.dtype
    ), None


def _write_record(rec, out: str | None) -> None:
    if out is None:
        print(json.dumps({"strokes": len(rec.strokes)}))
        return
    path = Path(out)
    if path.suffix == ".svg":
        path.write_text(record_to_svg(rec))
    else:
        save_corpus([rec], path)
    print(f"wrote {path}")


def cmd_generate(args) -> int:
    model = load_checkpoint(args.checkpoint).model
    code, _ = _source_code(args, model)
    records = []
    for i in range(args.count):
        records.append(generate_sketch(model, code, SampleStream(args.seed + i)))
    if args.out and args.count == 1:
        _write_record(records[0], args.out)
    elif args.out:
        save_corpus(records, args.out)
        print(f"wrote {len(records)} sketches to {args.out}")
    else:
        for rec in records:
            print(f"{rec.num_strokes} strokes")
    return 0


def cmd_reconstruct(args) -> int:
    model = load_checkpoint(args.checkpoint).model
    records = load_corpus(args.corpus)
    if args.limit:
        records = records[: args.limit]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    recons = []
    for i, rec in enumerate(records):
        with torch.no_grad():
            code = model.encode_record(rec)
        recon = generate_sketch(model, code, SampleStream(args.seed + i), category=rec.category)
        recons.append(recon)
    save_corpus(recons, out_dir / "reconstructions.ndjson")
    print(f"reconstructed {len(recons)} sketches into {out_dir}")
    return 0


def cmd_manipulate(args) -> int:
    model = load_checkpoint(args.checkpoint).model
    events = []
    with open(args.script) as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    if args.corpus and args.index is not None:
        source = load_corpus(args.corpus)[args.index]
    else:
        source = _random_code(model.cfg.embed_dim, args.seed)
    session = replay_events(
        model, source, args.seed, events,
        redecode_inserted=args.redecode_inserted,
        erase_keeps_context=args.erase_keeps_context,
    )
    rec = session.render()
    _write_record(rec, args.out)
    if args.transcript:
        Path(args.transcript).write_text(
            "\n".join(json.dumps(e) for e in session.event_log) + "\n"
        )
    return 0


def cmd_eval(args) -> int:
    from .evaluation import evaluate, train_classifier

    model = load_checkpoint(args.checkpoint).model
    records = load_corpus(args.corpus)
    if args.limit:
        records = records[: args.limit]
    classes = sorted({r.category for r in records})
    clf = train_classifier(records, classes, epochs=args.clf_epochs, lr=3e-3, seed=args.seed)
    recons = []
    for i, rec in enumerate(records):
        with torch.no_grad():
            code = model.encode_record(rec)
        recons.append(generate_sketch(model, code, SampleStream(args.seed + i), category=rec.category))
    empty = [i for i, r in enumerate(recons) if r.is_empty]
    if empty:
        keep = [i for i in range(len(recons)) if i not in set(empty)]
        records = [records[i] for i in keep]
        recons = [recons[i] for i in keep]
        print(f"skipped {len(empty)} empty generations")
    report = evaluate(model, records, recons, clf)
    Path(args.out).write_text(report.to_json())
    print(report.to_json())
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    model = load_checkpoint(args.checkpoint).model
    corpus = load_corpus(args.corpus) if args.corpus else None
    app = create_app(model, corpus=corpus, model_ref=str(args.checkpoint))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_export_svg(args) -> int:
    records = load_corpus(args.corpus)
    rec = records[args.index]
    Path(args.out).write_text(record_to_svg(rec))
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="build a corpus file from QuickDraw npz or the synthetic generator")
    p.add_argument("--npz", help="packed QuickDraw .npz archive")
    p.add_argument("--split", default="train")
    p.add_argument("--category", default=None)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--synthetic", type=int, default=0, help="generate N synthetic sketches instead")
    p.add_argument("--categories", default=None, help="comma-separated synthetic categories")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("train", help="train a model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", default=None, help="JSON file with model/train sections")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--resume", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample sketches from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--corpus", default=None)
    p.add_argument("--index", type=int, default=None, help="encode this corpus sketch as the code")
    p.add_argument("--out", default=None, help=".ndjson or .svg")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("reconstruct", help="encode and regenerate a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("manipulate", help="replay an event script against a session")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--script", required=True, help="JSON-lines event log")
    p.add_argument("--corpus", default=None)
    p.add_argument("--index", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--redecode-inserted", action="store_true")
    p.add_argument(
        "--erase-keeps-context", action="store_true",
        help="erased embeddings still condition the next prediction",
    )
    p.add_argument("--out", default=None)
    p.add_argument("--transcript", default=None, help="write the applied event log here")
    p.set_defaults(func=cmd_manipulate)

    p = sub.add_parser("eval", help="desk-scale metrics on a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--clf-epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the drawing-session service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", default=None, help="library corpus for the stroke picker")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export-svg", help="render a corpus sketch to SVG")
    p.add_argument("--corpus", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_svg)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
