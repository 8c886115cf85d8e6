#!/usr/bin/env python3
"""Write a synthetic zigzag corpus as Standard MIDI Files so the full CLI
pipeline (ingest -> train -> eval -> serve) can run without external data.

Usage: python scripts/make_demo_corpus.py out_dir [--sequences 40] [--notes 256]
"""

import argparse
import struct
from pathlib import Path

from genie.dataset import zigzag_corpus
from genie.sequences import NoteSequence

TICKS_PER_QN = 96
US_PER_QN = 500_000  # 120 BPM


def vlq(n: int) -> bytes:
    out = [n & 0x7F]
    n >>= 7
    while n:
        out.append((n & 0x7F) | 0x80)
        n >>= 7
    return bytes(reversed(out))


def smf0_bytes(seq: NoteSequence) -> bytes:
    """One-track SMF with note-on/note-off pairs; onsets in seconds."""
    ticks_per_second = TICKS_PER_QN * 1e6 / US_PER_QN
    body = bytearray()
    cursor = 0
    events = []  # (tick, on/off, pitch)
    for key, onset in seq.events:
        tick = round(onset * ticks_per_second)
        events.append((tick, 1, key + 21))
        events.append((tick + TICKS_PER_QN // 4, 0, key + 21))
    events.sort()
    for tick, on, pitch in events:
        body += vlq(tick - cursor)
        body += bytes([0x90 if on else 0x80, pitch, 0x60 if on else 0x00])
        cursor = tick
    body += b"\x00\xff\x2f\x00"
    return (b"MThd" + struct.pack(">IHHH", 6, 0, 1, TICKS_PER_QN) +
            b"MTrk" + struct.pack(">I", len(body)) + bytes(body))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--sequences", type=int, default=40)
    parser.add_argument("--notes", type=int, default=256)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for seq in zigzag_corpus(args.sequences, args.notes, seed=args.seed):
        (out / f"{seq.source_id}.mid").write_bytes(smf0_bytes(seq))
    print(f"wrote {args.sequences} MIDI files to {out}")


if __name__ == "__main__":
    main()
