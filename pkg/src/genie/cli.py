"""Command line interface: data ingest/stats, train, eval, serve, bench, play."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


def _cmd_data_ingest(args) -> int:
    from .dataset import split_corpus, windows_from_corpus, write_manifest, write_shard
    from .midi import MidiParseError, parse_midi

    root = Path(args.dir)
    paths = sorted(p for p in root.rglob("*") if p.suffix.lower() in (".mid", ".midi"))
    if not paths:
        print(f"no MIDI files under {root}", file=sys.stderr)
        return 1
    sequences = []
    for p in paths:
        try:
            seq = parse_midi(p.read_bytes(), source_id=str(p.relative_to(root)))
        except MidiParseError as e:
            logger.warning("skipping %s: %s", p, e)
            continue
        if len(seq) >= args.window:
            sequences.append(seq)
        else:
            logger.info("skipping %s: only %d notes (< window %d)", p, len(seq), args.window)
    if not sequences:
        print("no usable sequences (all too short or unparseable)", file=sys.stderr)
        return 1

    split = split_corpus(sequences, seed=args.seed)
    by_id = {s.source_id: s for s in sequences}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out / "manifest.txt", split)
    for offset, (name, ids) in enumerate((("train", split.train),
                                          ("validation", split.validation),
                                          ("test", split.test))):
        seqs = [by_id[i] for i in ids]
        if not seqs:
            print(f"{name}: empty split, no shard written")
            continue
        examples = windows_from_corpus(seqs, args.window, seed=args.seed + offset + 1)
        if not examples:
            print(f"{name}: no windows, no shard written")
            continue
        write_shard(out / f"{name}.pgsd", examples)
        print(f"{name}: {len(seqs)} sequences -> {len(examples)} windows")
    return 0


def _cmd_data_stats(args) -> int:
    from .dataset import read_shard

    for path in sorted(Path(args.dir).glob("*.pgsd")):
        examples = read_shard(path)
        keys = np.concatenate([e.keys for e in examples])
        dts = np.concatenate([e.dt_buckets for e in examples])
        print(f"{path.name}: {len(examples)} examples, window {len(examples[0].keys)}")
        print(f"  keys: min {keys.min()} max {keys.max()} mean {keys.mean():.1f}")
        print(f"  dt buckets: min {dts.min()} max {dts.max()} "
              f"mean {dts.mean():.1f} (31 = long rest/window start)")
    return 0


def _load_split_examples(data_dir: str, name: str):
    from .dataset import read_shard
    path = Path(data_dir) / f"{name}.pgsd"
    if not path.exists():
        raise FileNotFoundError(f"missing shard {path}")
    return read_shard(path)


def _cmd_train(args) -> int:
    from .checkpoint import save_checkpoint
    from .training import TrainRunConfig, train

    config = TrainRunConfig.from_json(Path(args.config).read_text())
    train_examples = _load_split_examples(args.data, "train")
    val_examples = _load_split_examples(args.data, "validation")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = train(config, train_examples, val_examples,
                   log_path=out / "train_log.jsonl")
    ckpt_path = out / f"{config.model.quantizer}.ckpt"
    checksum = save_checkpoint(result.model, ckpt_path)
    print(f"best val recons {result.best_val_recons:.4f} "
          f"(ppl {np.exp(result.best_val_recons):.3f}) at step {result.best_step}; "
          f"ran {result.steps_run} steps")
    print(f"saved {ckpt_path} ({checksum[:12]})")
    return 0


def _cmd_eval(args) -> int:
    from .checkpoint import load_checkpoint
    from .evaluate import evaluate_model, load_gold_melodies, report

    model = load_checkpoint(args.ckpt)
    examples = _load_split_examples(args.data, args.split)
    melodies = load_gold_melodies(args.gold)
    rep = evaluate_model(model, examples, melodies, name=Path(args.ckpt).stem)
    text, records = report([rep])
    print(text)
    if args.json:
        print(json.dumps(records[0]))
    return 0


def _cmd_serve(args) -> int:
    from .service import serve
    serve(args.bind, args.ckpt, temperature=args.temperature,
          static_dir=args.static_dir)
    return 0


def _cmd_bench(args) -> int:
    from .checkpoint import load_checkpoint
    from .session import bench_press_latency

    model = load_checkpoint(args.ckpt)
    stats = bench_press_latency(model, presses=args.presses, seed=args.seed)
    print(json.dumps(stats, indent=2))
    return 0


def _cmd_play(args) -> int:
    """Terminal demo: keys 1-8 press buttons, x releases all, r resets, q quits."""
    from .checkpoint import load_checkpoint
    from .session import session_init

    model = load_checkpoint(args.ckpt)
    session = session_init(model, temperature=args.temperature, seed=args.seed)
    print("buttons: 1-8  release all: x  reset: r  quit: q")
    while True:
        try:
            line = input("> ")
        except EOFError:
            break
        now = time.monotonic()
        for ch in line.strip():
            if ch == "q":
                return 0
            if ch == "r":
                for e in session.reset(now):
                    print(f"  off key {e.key}")
                print("  (reset)")
            elif ch == "x":
                for b in list(session.held):
                    e = session.release(b, now)
                    print(f"  off key {e.key} (button {b})")
            elif ch in "12345678":
                for e in session.press(int(ch) - 1, now):
                    print(f"  {e.kind:3s} key {e.key} (button {e.button})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genie",
                                     description="8-button piano improvisation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    data = sub.add_parser("data", help="corpus ingestion and inspection")
    data_sub = data.add_subparsers(dest="data_command", required=True)
    ingest = data_sub.add_parser("ingest", help="MIDI directory -> training shards")
    ingest.add_argument("dir")
    ingest.add_argument("--out", required=True)
    ingest.add_argument("--window", type=int, default=128)
    ingest.add_argument("--seed", type=int, default=0)
    ingest.set_defaults(fn=_cmd_data_ingest)
    stats = data_sub.add_parser("stats", help="summarize shard files")
    stats.add_argument("dir")
    stats.set_defaults(fn=_cmd_data_stats)

    tr = sub.add_parser("train", help="train a model from shards")
    tr.add_argument("--config", required=True, help="TrainRunConfig JSON file")
    tr.add_argument("--data", required=True, help="shard directory")
    tr.add_argument("--out", required=True, help="checkpoint output directory")
    tr.set_defaults(fn=_cmd_train)

    ev = sub.add_parser("eval", help="evaluate a checkpoint")
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--split", default="test", choices=["train", "validation", "test"])
    ev.add_argument("--gold", default=None, help="gold fixture JSON (default: bundled set)")
    ev.add_argument("--json", action="store_true", help="also print a JSON record")
    ev.set_defaults(fn=_cmd_eval)

    sv = sub.add_parser("serve", help="run the realtime decoder service")
    sv.add_argument("--ckpt", required=True)
    sv.add_argument("--bind", default="127.0.0.1:8765")
    sv.add_argument("--temperature", type=float, default=0.25)
    sv.add_argument("--static-dir", default=None, help="UI assets to serve at /")
    sv.set_defaults(fn=_cmd_serve)

    be = sub.add_parser("bench", help="press-latency benchmark")
    be.add_argument("--ckpt", required=True)
    be.add_argument("--presses", type=int, default=1000)
    be.add_argument("--seed", type=int, default=0)
    be.set_defaults(fn=_cmd_bench)

    pl = sub.add_parser("play", help="terminal keyboard demo")
    pl.add_argument("--ckpt", required=True)
    pl.add_argument("--temperature", type=float, default=0.25)
    pl.add_argument("--seed", type=int, default=0)
    pl.set_defaults(fn=_cmd_play)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
