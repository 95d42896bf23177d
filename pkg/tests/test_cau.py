import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dancesynth.cau import (EOD, NIL, SOD, CauCatalog, CauSequence, SongRecord, bleu4, corpus_bleu,
                            load_catalog, read_corpus, save_catalog, sequence_duration_beats, write_corpus)
from dancesynth.errors import ValidationError
from dancesynth.motion import default_skeleton, hold_clip, rest_frame

from helpers import bleu_oracle


def _clip(n=80):
    skel = default_skeleton()
    return hold_clip(skel, 80.0, rest_frame(skel), n)


@pytest.fixture
def catalog():
    return CauCatalog([("spin", 2, _clip(80)), ("hop", 4, _clip(160)), ("sway", 3, _clip(120))])


def test_special_tokens_and_ids(catalog):
    assert (SOD, EOD, NIL) == (0, 1, 2)
    assert catalog.vocab_size == 6
    assert catalog.cau_ids() == [3, 4, 5]
    assert catalog.id_of("hop") == 4
    assert catalog.beats(NIL) == 1
    assert catalog.beats(SOD) == 0 and catalog.beats(EOD) == 0
    assert catalog.token(5).kind == "CAU"
    assert catalog.fps == 80.0


@pytest.mark.parametrize("entries, match", [
    ([("NIL", 2, _clip())], "name"),
    ([("a", 2, _clip()), ("a", 3, _clip())], "name"),
    ([("a b", 2, _clip())], "name"),
    ([("a", 0, _clip())], "beat length"),
    ([("a", 2, None)], "clip"),
])
def test_catalog_rejects_bad_entries(entries, match):
    with pytest.raises(ValidationError, match=match):
        CauCatalog(entries)


def test_unknown_token_raises(catalog):
    with pytest.raises(ValidationError):
        catalog.beats(17)
    with pytest.raises(ValidationError):
        catalog.id_of("moonwalk")


def test_catalog_round_trip(tmp_path, catalog):
    path = tmp_path / "cat" / "catalog.txt"
    save_catalog(str(path), catalog)
    loaded = load_catalog(str(path))
    assert loaded == catalog
    save_catalog(str(tmp_path / "again" / "catalog.txt"), loaded)
    assert load_catalog(str(tmp_path / "again" / "catalog.txt")) == catalog


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@pytest.fixture
def clip_dir(tmp_path, catalog):
    save_catalog(str(tmp_path / "catalog.txt"), catalog)
    return tmp_path


@pytest.mark.parametrize("lines, match", [
    (["cau 3 spin 2 clips/spin"], "header"),
    (["caucatalog 1", "cau 2 spin 2 clips/spin"], "reserved id 2"),
    (["caucatalog 1", "cau 3 spin 2 clips/spin", "cau 3 hop 4 clips/hop"], "'spin' and 'hop'"),
    (["caucatalog 1", "cau 3 spin 0 clips/spin"], "beat length 0"),
    (["caucatalog 1", "cau 3 spin 2 clips/spin", "cau 5 hop 4 clips/hop"], "contiguous"),
    (["caucatalog 1", "cau 3 spin 2 clips/nothing"], "'spin' references missing clip"),
    (["caucatalog 1", "cau 3 spin 2"], "malformed"),
])
def test_load_catalog_errors(clip_dir, lines, match):
    path = clip_dir / "bad.txt"
    _write(path, lines)
    with pytest.raises(ValidationError, match=match):
        load_catalog(str(path))


def test_load_catalog_missing_file(tmp_path):
    with pytest.raises(ValidationError, match="does not exist"):
        load_catalog(str(tmp_path / "none.txt"))


def test_sequence_from_tokens_and_duration(catalog):
    seq = CauSequence.from_tokens([3, NIL, 4, 5], catalog, start=2)
    assert seq.spans == ((2, 4), (4, 5), (5, 9), (9, 12))
    assert seq.end_beat == 12
    # independent sum of catalog beat lengths
    assert sequence_duration_beats(seq, catalog) == 2 + 1 + 4 + 3
    assert sequence_duration_beats([], catalog) == 0
    assert not seq.ended
    ended = CauSequence(seq.tokens + (EOD,), seq.spans + ((12, 12),))
    assert ended.ended and ended.content() == [3, NIL, 4, 5]


@pytest.mark.parametrize("tokens, spans, match", [
    ((3,), (), "spans"),
    ((SOD, 3), ((0, 0), (0, 2)), "start-of-dance"),
    ((EOD, 3), ((0, 0), (0, 2)), "terminal"),
    ((3, 4), ((0, 2), (1, 5)), "overlaps"),
    ((3,), ((2, 1),), "backwards"),
    ((3,), ((1, 1),), "empty"),
])
def test_sequence_validation(tokens, spans, match):
    with pytest.raises(ValidationError, match=match):
        CauSequence(tokens, spans)


def test_corpus_round_trip(tmp_path, catalog):
    records = [SongRecord("a", "packs/a", CauSequence.from_tokens([3, 4], catalog)),
               SongRecord("b", "packs/b", CauSequence((3, EOD), ((0, 2), (2, 2))))]
    path = str(tmp_path / "corpus.txt")
    write_corpus(path, records)
    assert read_corpus(path) == records
    write_corpus(str(tmp_path / "again.txt"), read_corpus(path))
    assert (tmp_path / "again.txt").read_bytes() == (tmp_path / "corpus.txt").read_bytes()


@pytest.mark.parametrize("lines, match", [
    (["song a p"], "header"),
    (["caucorpus 1", "span 0 2 3"], "unexpected"),
    (["caucorpus 1", "song a p", "span 0 2 3"], "missing its 'end'"),
])
def test_read_corpus_errors(tmp_path, lines, match):
    path = tmp_path / "c.txt"
    _write(path, lines)
    with pytest.raises(ValidationError, match=match):
        read_corpus(str(path))


def test_write_corpus_rejects_whitespace(tmp_path):
    with pytest.raises(ValidationError):
        write_corpus(str(tmp_path / "c.txt"), [SongRecord("a b", "p", CauSequence())])


# BLEU ---------------------------------------------------------------------

def test_bleu_examples():
    assert bleu4([3, 4, 5, 6], [3, 4, 5, 6]) == pytest.approx(1.0, abs=1e-12)
    assert bleu4([3], [3]) == pytest.approx(1.0, abs=1e-12)
    assert bleu4([], [3, 4]) == 0.0
    # start/end tokens are ignored, wait tokens count
    assert bleu4([SOD, 3, 4, EOD], [3, 4]) == pytest.approx(1.0, abs=1e-12)
    assert bleu4([3, NIL], [3, 4]) < 1.0
    # no overlap at all: every order smoothed to eps over 4, 3, 2, 1 n-grams
    assert bleu4([3, 3, 3, 3], [4, 4, 4, 4]) == pytest.approx(1e-9 * (1 / 24) ** 0.25, rel=1e-9)
    # brevity penalty, all n-grams of a 2-token prefix match
    assert bleu4([3, 4], [3, 4, 5, 6]) == pytest.approx(math.exp(1 - 4 / 2), rel=1e-12)


def test_bleu_matches_bruteforce_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        cand = list(rng.integers(2, 7, size=rng.integers(1, 15)))
        ref = list(rng.integers(2, 7, size=rng.integers(1, 15)))
        assert abs(bleu4(cand, ref) - bleu_oracle(cand, ref)) <= 1e-9


def test_corpus_bleu_is_macro_average():
    pairs = [([3, 4, 5], [3, 4, 5]), ([3, 3], [4, 5, 6])]
    expected = (bleu4(*pairs[0]) + bleu4(*pairs[1])) / 2
    assert corpus_bleu([p[0] for p in pairs], [p[1] for p in pairs]) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(ValidationError):
        corpus_bleu([[3]], [])


seqs = st.lists(st.integers(2, 8), min_size=1, max_size=20)


@settings(max_examples=200, deadline=None)
@given(seqs, seqs)
def test_bleu_bounds_and_self_score(a, b):
    assert 0.0 <= bleu4(a, b) <= 1.0 + 1e-12
    assert bleu4(a, a) == pytest.approx(1.0, abs=1e-12)
    assert abs(bleu4(a, b) - bleu_oracle(a, b)) <= 1e-9


def test_catalog_paths_are_relative(tmp_path, catalog):
    path = tmp_path / "catalog.txt"
    save_catalog(str(path), catalog)
    text = path.read_text(encoding="utf-8")
    assert str(tmp_path) not in text
    assert os.path.isdir(tmp_path / "clips" / "spin")
