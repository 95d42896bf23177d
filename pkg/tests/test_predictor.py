from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dancesynth.cau import EOD, NIL, SOD, CauCatalog, CauSequence
from dancesynth.cli import store_hash
from dancesynth.errors import DataError, DimensionError, ParameterError, ValidationError
from dancesynth.motion import default_skeleton, hold_clip, rest_frame
from dancesynth.music import MusicFeaturePack, SyntheticConfig, generate_synthetic_corpus
from dancesynth.nncore import rmsprop
from dancesynth.predictor import (CauPredictor, PredictorConfig, PredictorHyper, evaluate_nll, generate,
                                  load_predictor, save_predictor, sequence_nll, teacher_batch, train_predictor)

from helpers import numeric_grad, rel_err

TINY = dict(channels=(14, 3, 3, 4, 4, 4), music_dim=4, embed_dim=5, hidden=6, window_seconds=0.64)


def _catalog():
    skel = default_skeleton()
    clip = hold_clip(skel, 80.0, rest_frame(skel), 40)
    return CauCatalog([("one", 1, clip), ("two", 2, clip), ("four", 4, clip)])


def _song(n_beats, period=0.5, seed=0):
    rng = np.random.default_rng(seed)
    n = int(round(n_beats * period * 100))
    beat = np.zeros(n)
    beat[(np.arange(n_beats) * period * 100).round().astype(int)] = 1.0
    return MusicFeaturePack(rng.uniform(size=(12, n // 10)), beat, rng.uniform(size=n), n / 100.0)


def test_config_geometry():
    cfg = PredictorConfig(8)
    assert cfg.window_frames == 1000
    assert cfg.conv_length() == 32
    assert CauPredictor(cfg).flat == 64 * 32
    assert PredictorConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ParameterError):
        PredictorConfig(3)
    with pytest.raises(ParameterError):
        PredictorConfig(8, channels=(12, 32, 32, 64, 64, 64))
    with pytest.raises(ParameterError):
        PredictorConfig(8, hidden=0)


def test_zero_weights_give_zero_code_and_uniform_distribution():
    model = CauPredictor(PredictorConfig(6, **TINY))
    for _, p in model.params.items():
        p.data = np.zeros_like(p.data)
    m = model.encode(np.random.default_rng(0).normal(size=(14, 64)))
    assert np.array_equal(m.data, np.zeros(4))
    dist, h = model.decode_step(3, m.data, model.initial_state())
    assert np.allclose(dist, 1.0 / 6, atol=1e-15)
    assert h.shape == (6,)


def test_encode_and_logits_validate_inputs():
    model = CauPredictor(PredictorConfig(6, **TINY))
    with pytest.raises(DimensionError):
        model.encode(np.zeros((14, 63)))
    with pytest.raises(ValidationError):
        model.logits(6, np.zeros(4), model.initial_state())


def _nll_of_params(model, batch, name, values):
    p = model.params[name]
    old = p.data
    p.data = values
    try:
        return sequence_nll(model, batch).item()
    finally:
        p.data = old


@pytest.mark.parametrize("seed", range(5))
def test_sequence_nll_gradients_match_finite_differences(seed):
    cat = _catalog()
    model = CauPredictor(PredictorConfig(cat.vocab_size, **TINY), seed=seed)
    # zero biases put ReLU inputs from zero-padded music exactly on the kink
    rng = np.random.default_rng(seed)
    for name, p in model.params.items():
        if name.endswith("bias"):
            p.data = rng.normal(scale=0.5, size=p.data.shape)
    seq = CauSequence.from_tokens([3, NIL], cat)
    batch = teacher_batch(_song(6, seed=seed), seq, cat, model.config)
    model.params.zero_grad()
    sequence_nll(model, batch).backward()
    for name, p in model.params.items():
        num = numeric_grad(lambda v: _nll_of_params(model, batch, name, v), [p.data.copy()], 0)
        assert rel_err(p.grad, num) < 1e-4, name


def test_teacher_batch_layout():
    cat = _catalog()
    cfg = PredictorConfig(cat.vocab_size, **TINY)
    seq = CauSequence.from_tokens([4, NIL, 5], cat)
    batch = teacher_batch(_song(10), seq, cat, cfg)
    assert list(batch.inputs) == [SOD, 4, NIL, 5]
    assert list(batch.targets) == [4, NIL, 5, EOD]
    assert batch.times == [0.0, 1.0, 1.5, 3.5]
    assert batch.windows.shape == (4, 14, 64)
    silent = MusicFeaturePack(np.zeros((12, 10)), np.zeros(100), np.zeros(100), 1.0)
    with pytest.raises(DataError):
        teacher_batch(silent, seq, cat, cfg)


class Stub:
    """Decoder returning a fixed or scripted distribution, ignoring the music."""

    def __init__(self, vocab, choose):
        self.config = PredictorConfig(vocab, **TINY)
        self.choose = choose
        self.calls = 0

    def initial_state(self):
        return np.zeros(1)

    def encode(self, win):
        return np.zeros(1)

    def decode_step(self, y, m, h):
        dist = np.zeros(self.config.vocab_size)
        dist[self.choose(self.calls)] = 1.0
        self.calls += 1
        return dist, h


@pytest.mark.parametrize("token, n_beats, expected", [
    (EOD, 10, [EOD]),
    (5, 10, [5, 5, 5]),
    (NIL, 8, [NIL] * 8),
    (4, 7, [4, 4, 4, 4]),
])
def test_generate_with_stub(token, n_beats, expected):
    cat = _catalog()
    seq = generate(_song(n_beats), Stub(cat.vocab_size, lambda i: token), cat)
    assert list(seq.tokens) == expected
    if token == EOD:
        assert seq.spans == ((0, 0),)
    else:
        n = cat.beats(token)
        assert seq.spans == tuple((i * n, (i + 1) * n) for i in range(len(expected)))


def test_generate_never_emits_start_token():
    cat = _catalog()
    # SOD is the argmax candidate but masked; the runner-up NIL is taken
    stub = Stub(cat.vocab_size, lambda i: SOD)
    stub.decode_step = lambda y, m, h: (np.array([0.7, 0.0, 0.3, 0.0, 0.0, 0.0]), h)
    seq = generate(_song(3), stub, cat)
    assert list(seq.tokens) == [NIL, NIL, NIL]


def test_generate_rejects_vocabulary_mismatch():
    cat = _catalog()
    with pytest.raises(ValidationError):
        generate(_song(4), Stub(9, lambda i: EOD), cat)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 40), st.floats(0.3, 0.8))
def test_generation_terminates_and_tiles(seed, n_beats, period):
    cat = _catalog()
    rng = np.random.default_rng(seed)
    choices = rng.integers(1, cat.vocab_size, size=200)
    trace = []
    pack = _song(n_beats, period=round(period, 2), seed=seed % 7)
    seq = generate(pack, Stub(cat.vocab_size, lambda i: int(choices[i])), cat, trace=trace)
    assert len(trace) == len(seq.tokens)
    assert all(b > a for a, b in zip(trace, trace[1:]))
    assert trace[0] == 0.0 and trace[-1] < pack.duration
    start = 0
    for tok, (a, b) in zip(seq.tokens, seq.spans):
        assert a == start and tok != SOD
        assert b - a == cat.beats(tok)
        start = b
    assert EOD not in seq.tokens[:-1]


def test_single_beat_song_has_no_tempo():
    cat = _catalog()
    with pytest.raises(DataError):
        generate(_song(1), Stub(cat.vocab_size, lambda i: 3), cat)


def test_generate_sampling_is_seeded():
    cat = _catalog()
    model = CauPredictor(PredictorConfig(cat.vocab_size, **TINY), seed=3)
    pack = _song(12)
    a = generate(pack, model, cat, temperature=1.0, rng=np.random.default_rng(5))
    b = generate(pack, model, cat, temperature=1.0, rng=np.random.default_rng(5))
    assert a == b


def test_checkpoint_round_trip(tmp_path):
    model = CauPredictor(PredictorConfig(6, **TINY), seed=2)
    save_predictor(str(tmp_path / "a"), model, {"seed": 2})
    back, meta, _ = load_predictor(str(tmp_path / "a"))
    assert meta["seed"] == 2 and back.config == model.config
    for name, p in model.params.items():
        assert np.array_equal(back.params[name].data, p.data)
    save_predictor(str(tmp_path / "b"), back, {"seed": 2})
    assert store_hash(str(tmp_path / "a")) == store_hash(str(tmp_path / "b"))


@pytest.fixture(scope="module")
def tiny_corpus():
    corpus = generate_synthetic_corpus(5, SyntheticConfig(n_songs=2, song_beats=(6, 8)))
    songs = [(pack, rec.sequence) for pack, rec in zip(corpus.packs, corpus.songs)]
    return songs, corpus.catalog


def test_training_lowers_loss_and_keeps_best(tiny_corpus):
    songs, cat = tiny_corpus
    cfg = PredictorConfig(cat.vocab_size, **TINY)
    res = train_predictor(songs, cat, cfg, PredictorHyper(epochs=6, lr=3e-3))
    losses = [e["loss"] for e in res.log]
    assert [e["epoch"] for e in res.log] == list(range(6))
    assert losses[-1] < losses[0]
    bests = [e["best"] for e in res.log]
    assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))
    batches = [teacher_batch(p, s, cat, cfg) for p, s in songs]
    assert evaluate_nll(res.model, batches) == pytest.approx(min(losses), rel=0.5)


def test_resumed_training_matches_uninterrupted(tiny_corpus):
    songs, cat = tiny_corpus
    cfg = PredictorConfig(cat.vocab_size, **TINY)
    hyper = PredictorHyper(epochs=4, lr=3e-3, patience=0)
    full = train_predictor(songs, cat, cfg, hyper)
    first = train_predictor(songs, cat, cfg, replace(hyper, epochs=2))
    model = first.model
    best = model.params.state()
    model.params.load_state(first.last_state)
    second = train_predictor(songs, cat, cfg, replace(hyper, epochs=2), model=model, optimizer=first.optimizer,
                             scheduler=first.scheduler, start_epoch=2, log=first.log, best_params=best)
    assert [e["loss"] for e in second.log] == [e["loss"] for e in full.log]
    for name, p in full.model.params.items():
        assert np.array_equal(second.model.params[name].data, p.data)


def test_training_validates_inputs(tiny_corpus):
    songs, cat = tiny_corpus
    with pytest.raises(DataError):
        train_predictor([], cat)
    with pytest.raises(ValidationError):
        train_predictor(songs, cat, PredictorConfig(cat.vocab_size + 1, **TINY))
    assert rmsprop().kind == "rmsprop"
