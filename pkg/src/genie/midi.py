"""Standard MIDI File (format 0/1) ingestion.

Only note onsets survive: note-on events with velocity > 0 become
(key, onset_seconds) pairs with key = MIDI pitch - 21, anything outside
the 88-key range dropped. Note-offs, sustain, and velocities are
discarded; timing comes from the tempo map (120 BPM when absent).
"""

from __future__ import annotations

import bisect

from .sequences import NUM_KEYS, NoteSequence, flatten_order

DEFAULT_US_PER_QN = 500_000  # 120 BPM
_PITCH_OFFSET = 21  # MIDI pitch of the lowest piano key


class MidiParseError(ValueError):
    """Malformed SMF input: bad magic, truncated chunk, unsupported format."""


class _Reader:
    def __init__(self, data: bytes, pos: int = 0, end: int | None = None):
        self.data = data
        self.pos = pos
        self.end = len(data) if end is None else end

    def remaining(self) -> int:
        return self.end - self.pos

    def bytes(self, n: int) -> bytes:
        if self.pos + n > self.end:
            raise MidiParseError(f"truncated chunk: wanted {n} bytes at offset {self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.bytes(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.bytes(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.bytes(4), "big")

    def varlen(self) -> int:
        value = 0
        for _ in range(4):
            b = self.u8()
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        raise MidiParseError("variable-length quantity longer than 4 bytes")


_CHANNEL_DATA_LEN = {0x8: 2, 0x9: 2, 0xA: 2, 0xB: 2, 0xC: 1, 0xD: 1, 0xE: 2}


def _parse_track(rd: _Reader) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """One MTrk body -> (note-ons [(tick, pitch)], tempo changes [(tick, us_per_qn)])."""
    notes: list[tuple[int, int]] = []
    tempos: list[tuple[int, int]] = []
    tick = 0
    running_status: int | None = None
    while rd.remaining() > 0:
        tick += rd.varlen()
        status = rd.u8()
        if status < 0x80:
            # running status: first data byte already consumed
            if running_status is None:
                raise MidiParseError("data byte with no running status")
            data0 = status
            status = running_status
            kind = status >> 4
            need = _CHANNEL_DATA_LEN[kind] - 1
            data = bytes([data0]) + rd.bytes(need)
        elif status == 0xFF:
            meta_type = rd.u8()
            length = rd.varlen()
            payload = rd.bytes(length)
            if meta_type == 0x51 and length == 3:
                tempos.append((tick, int.from_bytes(payload, "big")))
            elif meta_type == 0x2F:
                break  # end of track
            continue
        elif status in (0xF0, 0xF7):
            rd.bytes(rd.varlen())
            continue
        elif status >= 0xF1:
            raise MidiParseError(f"unsupported system event 0x{status:02x}")
        else:
            running_status = status
            kind = status >> 4
            data = rd.bytes(_CHANNEL_DATA_LEN[kind])
        kind = status >> 4
        if kind == 0x9 and data[1] > 0:
            notes.append((tick, data[0]))
    return notes, tempos


class _TempoMap:
    """Piecewise-linear tick -> seconds conversion from set-tempo events."""

    def __init__(self, tempos: list[tuple[int, int]], ticks_per_qn: int):
        changes = sorted(tempos)
        if not changes or changes[0][0] > 0:
            changes.insert(0, (0, DEFAULT_US_PER_QN))
        self.ticks = []
        self.seconds = []
        self.us_per_tick = []
        t_seconds = 0.0
        prev_tick = 0
        prev_us = changes[0][1]
        for tick, us in changes:
            t_seconds += (tick - prev_tick) * prev_us / (1e6 * ticks_per_qn)
            self.ticks.append(tick)
            self.seconds.append(t_seconds)
            self.us_per_tick.append(us / (1e6 * ticks_per_qn))
            prev_tick, prev_us = tick, us

    def to_seconds(self, tick: int) -> float:
        i = bisect.bisect_right(self.ticks, tick) - 1
        return self.seconds[i] + (tick - self.ticks[i]) * self.us_per_tick[i]


def parse_midi(data: bytes, source_id: str = "") -> NoteSequence:
    """Parse SMF format 0/1 bytes into a flattened monophonic NoteSequence."""
    rd = _Reader(data)
    if rd.bytes(4) != b"MThd":
        raise MidiParseError("bad header magic, expected MThd")
    header_len = rd.u32()
    if header_len < 6:
        raise MidiParseError(f"header chunk too short: {header_len}")
    fmt = rd.u16()
    ntrks = rd.u16()
    division = rd.u16()
    rd.bytes(header_len - 6)
    if fmt not in (0, 1):
        raise MidiParseError(f"unsupported SMF format {fmt}")

    all_notes: list[tuple[int, int]] = []
    all_tempos: list[tuple[int, int]] = []
    for _ in range(ntrks):
        magic = rd.bytes(4)
        length = rd.u32()
        if rd.pos + length > len(data):
            raise MidiParseError("truncated track chunk")
        if magic != b"MTrk":
            rd.bytes(length)  # alien chunk, skip per SMF spec
            continue
        track_rd = _Reader(data, rd.pos, rd.pos + length)
        notes, tempos = _parse_track(track_rd)
        all_notes.extend(notes)
        all_tempos.extend(tempos)
        rd.pos += length

    if division & 0x8000:
        # SMPTE division: frames/sec (two's complement) * ticks/frame
        fps = 256 - (division >> 8)
        ticks_per_second = fps * (division & 0xFF)
        events = [(pitch - _PITCH_OFFSET, tick / ticks_per_second)
                  for tick, pitch in all_notes]
    else:
        tempo_map = _TempoMap(all_tempos, division)
        events = [(pitch - _PITCH_OFFSET, tempo_map.to_seconds(tick))
                  for tick, pitch in all_notes]

    events = [(k, t) for k, t in events if 0 <= k < NUM_KEYS]
    return NoteSequence(events=flatten_order(events), source_id=source_id)
