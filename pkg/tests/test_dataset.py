"""Splits, window sampling, shard roundtrip, synthetic corpora."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genie.dataset import (
    read_manifest,
    read_shard,
    sample_window,
    split_corpus,
    two_melody_corpus,
    valid_transposes,
    windows_from_corpus,
    write_manifest,
    write_shard,
    zigzag_corpus,
)
from genie.sequences import NoteSequence


def make_seq(i, n=20, key=40):
    return NoteSequence(events=[(key, 0.1 * t) for t in range(n)], source_id=f"s{i:04d}")


class TestSplit:
    def test_ten_sequences_8_1_1(self):
        split = split_corpus([make_seq(i) for i in range(10)], seed=0)
        assert (len(split.train), len(split.validation), len(split.test)) == (8, 1, 1)

    def test_1400_sequences(self):
        split = split_corpus([make_seq(i) for i in range(1400)], seed=0)
        assert (len(split.train), len(split.validation), len(split.test)) == (1120, 140, 140)

    def test_deterministic_and_disjoint(self):
        seqs = [make_seq(i) for i in range(30)]
        a = split_corpus(seqs, seed=5)
        b = split_corpus(seqs, seed=5)
        assert (a.train, a.validation, a.test) == (b.train, b.validation, b.test)
        ids = a.train + a.validation + a.test
        assert sorted(ids) == sorted(s.source_id for s in seqs)
        assert len(set(ids)) == len(ids)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            split_corpus([], seed=0)

    def test_manifest_roundtrip(self, tmp_path):
        split = split_corpus([make_seq(i) for i in range(12)], seed=1)
        path = tmp_path / "manifest.txt"
        write_manifest(path, split)
        back = read_manifest(path)
        assert (back.train, back.validation, back.test) == \
            (split.train, split.validation, split.test)


class TestSampleWindow:
    def test_low_keys_restrict_shifts(self):
        keys_at_zero = NoteSequence(events=[(0, 0.1 * t) for t in range(8)], source_id="lo")
        shifts = valid_transposes(np.zeros(8, dtype=np.int64))
        assert shifts == [0, 1, 2, 3, 4, 5]
        rng = np.random.default_rng(0)
        for _ in range(50):
            ex = sample_window(keys_at_zero, 8, rng)
            assert ex.keys.min() >= 0 and ex.keys.max() < 88
            assert 0 <= ex.transpose_applied < 6

    def test_zero_shift_identity(self):
        seq = make_seq(0, n=8, key=40)
        # draw until the sampler picks shift 0, then check identity
        rng = np.random.default_rng(3)
        while True:
            ex = sample_window(seq, 8, rng)
            if ex.transpose_applied == 0:
                break
        np.testing.assert_array_equal(ex.keys, np.full(8, 40))

    def test_dt_buckets_from_onsets(self):
        seq = NoteSequence(events=[(50, 0.0), (51, 0.1), (52, 0.8)], source_id="dt")
        ex = sample_window(seq, 3, np.random.default_rng(0))
        assert list(ex.dt_buckets) == [31, 3, 22]

    def test_short_sequence_rejected(self):
        with pytest.raises(ValueError):
            sample_window(make_seq(0, n=4), 8, np.random.default_rng(0))

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_transposition_never_escapes_keyboard(self, seed):
        rng = np.random.default_rng(seed)
        lo = int(rng.integers(0, 80))
        span = int(rng.integers(1, 88 - lo))
        seq = NoteSequence(
            events=[(int(lo + rng.integers(0, span + 1)), 0.1 * t) for t in range(16)],
            source_id="prop")
        ex = sample_window(seq, 8, rng)
        assert ex.keys.min() >= 0 and ex.keys.max() < 88
        assert (ex.dt_buckets >= 0).all() and (ex.dt_buckets < 32).all()
        assert -6 <= ex.transpose_applied < 6


class TestShards:
    def test_roundtrip(self, tmp_path):
        corpus = zigzag_corpus(4, 64, seed=0)
        examples = windows_from_corpus(corpus, 16, seed=1)
        path = tmp_path / "train.pgsd"
        write_shard(path, examples)
        back = read_shard(path)
        assert len(back) == len(examples)
        for a, b in zip(examples, back):
            np.testing.assert_array_equal(a.keys, b.keys)
            np.testing.assert_array_equal(a.dt_buckets, b.dt_buckets)

    def test_header_layout(self, tmp_path):
        examples = windows_from_corpus(zigzag_corpus(1, 40, seed=0), 10, seed=0)
        path = tmp_path / "x.pgsd"
        write_shard(path, examples)
        raw = path.read_bytes()
        assert raw[:4] == b"PGSD"
        version, n, count = np.frombuffer(raw[4:16], dtype="<u4")
        assert (version, n, count) == (1, 10, len(examples))
        assert len(raw) == 16 + count * 2 * n

    def test_bad_magic_and_truncation(self, tmp_path):
        p = tmp_path / "bad.pgsd"
        p.write_bytes(b"NOPE" + bytes(12))
        with pytest.raises(ValueError):
            read_shard(p)
        examples = windows_from_corpus(zigzag_corpus(1, 40, seed=0), 10, seed=0)
        good = tmp_path / "good.pgsd"
        write_shard(good, examples)
        (tmp_path / "trunc.pgsd").write_bytes(good.read_bytes()[:-5])
        with pytest.raises(ValueError):
            read_shard(tmp_path / "trunc.pgsd")


class TestSyntheticCorpora:
    def test_zigzag_alternates_and_stays_in_range(self):
        for seq in zigzag_corpus(5, 100, seed=2):
            keys = np.array(seq.keys())
            assert keys.min() >= 0 and keys.max() < 88
            runs = np.sign(np.diff(keys))
            assert (runs != 0).all()          # scale steps never repeat a pitch
            flips = np.sum(runs[1:] != runs[:-1])
            assert flips >= 4                 # direction alternates over 100 notes

    def test_two_melody_corpus_fixed(self):
        a = two_melody_corpus(64)
        b = two_melody_corpus(64)
        assert [s.events for s in a] == [s.events for s in b]
        assert all(len(s) == 64 for s in a)
