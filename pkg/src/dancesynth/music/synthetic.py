"""Seeded synthetic corpus: catalog clips, songs with learnable motifs, performances.

Every action unit starts and ends in the neutral pose and, in between, visits
one random key pose per beat. Within each beat the pose accelerates toward
the next key (``u**2`` easing) and stops dead on the beat, which gives the
kinematic beat detector a clean deceleration spike on every beat boundary.

Songs place a per-unit chroma motif over each annotated span, so the
music around time ``t`` identifies the unit danced there.
"""

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from ..cau import EOD, NIL, CauCatalog, CauSequence, SongRecord, load_catalog, read_corpus, save_catalog, write_corpus
from ..errors import ParameterError, ValidationError
from ..motion import (MotionClip, align_root_points, concatenate, default_skeleton, hold_clip, load_clip, quat,
                      rest_frame, save_clip)
from .features import FINE_RATE, MusicFeaturePack, load_feature_pack, save_feature_pack


@dataclass
class SyntheticConfig:
    n_songs: int = 8
    n_caus: int = 5
    cau_beats: tuple = (2, 4)
    tempo_range: tuple = (110.0, 135.0)
    song_beats: tuple = (24, 36)
    nil_prob: float = 0.1
    clip_bpm: float = 120.0
    fps: float = 80.0
    max_angle: float = 1.0
    motif_noise: float = 0.05
    n_performances: int = 16
    performance_tokens: tuple = (4, 7)

    def validate(self):
        def rng_pair(name, lo_min):
            lo, hi = getattr(self, name)
            if not (lo_min <= lo <= hi):
                raise ParameterError(f"{name} must satisfy {lo_min} <= low <= high, got {(lo, hi)}")
        if self.n_songs < 1:
            raise ParameterError(f"n_songs must be >= 1, got {self.n_songs}")
        if self.n_caus < 1:
            raise ParameterError(f"n_caus must be >= 1, got {self.n_caus}")
        rng_pair("cau_beats", 1)
        rng_pair("tempo_range", 1e-9)
        rng_pair("song_beats", 1)
        rng_pair("performance_tokens", 1)
        if not 0 <= self.nil_prob < 1:
            raise ParameterError(f"nil_prob must lie in [0, 1), got {self.nil_prob}")
        fpb = self.fps * 60.0 / self.clip_bpm
        if self.fps <= 0 or self.clip_bpm <= 0 or abs(fpb - round(fpb)) > 1e-9:
            raise ParameterError("fps * 60 / clip_bpm must be a whole number of frames per beat")
        lo, hi = self.tempo_frames()
        if lo > hi:
            raise ParameterError(f"tempo_range {self.tempo_range} contains no whole-centisecond beat period")
        return self

    def tempo_frames(self):
        """Beat periods, in 100 Hz frames, allowed by ``tempo_range``."""
        lo_bpm, hi_bpm = self.tempo_range
        return int(np.ceil(60.0 * FINE_RATE / hi_bpm - 1e-9)), int(np.floor(60.0 * FINE_RATE / lo_bpm + 1e-9))

    def to_json(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, data):
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


@dataclass
class SyntheticCorpus:
    catalog: CauCatalog
    songs: list          # SongRecord with in-memory packs in ``packs``
    packs: list
    performances: list  # ground-truth motion per song
    motifs: dict = field(repr=False, default_factory=dict)


def _cau_clip(rng, skeleton, n_beats, fpb, fps, max_angle):
    n_j = skeleton.n_joints
    keys = np.empty((n_beats + 1, n_j, 4))
    keys[0] = keys[-1] = quat.identity((n_j,))
    for k in range(1, n_beats):
        axes = rng.normal(size=(n_j, 3))
        keys[k] = quat.canonicalize(quat.from_axis_angle(axes, rng.uniform(0.3, max_angle, size=n_j)))
    turn = rng.uniform(-0.4, 0.4)
    step = rng.uniform(-0.15, 0.15, size=2)
    n = n_beats * fpb
    beat = np.arange(n) // fpb
    ease = ((np.arange(n) % fpb) / fpb) ** 2
    joints = quat.slerp(keys[beat], keys[beat + 1], ease[:, None])
    yaw = turn * (beat + ease)
    # per-beat step in the heading at that beat's start, eased like the joints
    k = np.arange(n_beats)
    hx = step[0] * np.cos(turn * k) + step[1] * np.sin(turn * k)
    hz = -step[0] * np.sin(turn * k) + step[1] * np.cos(turn * k)
    start_x = np.concatenate([[0.0], np.cumsum(hx)])
    start_z = np.concatenate([[0.0], np.cumsum(hz)])
    pos_x = start_x[beat] + ease * hx[beat]
    pos_z = start_z[beat] + ease * hz[beat]
    vel = np.zeros((n, 3))
    vel[1:, 0] = np.diff(pos_x)
    vel[1:, 2] = np.diff(pos_z)
    vel[:, 1] = 1.0 - 0.03 * np.sin(np.pi * ease)
    rot = quat.yaw_quat(yaw)
    return MotionClip.from_parts(skeleton, fps, vel, rot, quat.canonicalize(joints))


def make_catalog(rng, config, skeleton=None):
    skeleton = skeleton or default_skeleton()
    fpb = int(round(config.fps * 60.0 / config.clip_bpm))
    entries = []
    for c in range(config.n_caus):
        beats = int(rng.integers(config.cau_beats[0], config.cau_beats[1] + 1))
        entries.append((f"cau{c:03d}", beats, _cau_clip(rng, skeleton, beats, fpb, config.fps, config.max_angle)))
    return CauCatalog(entries)


def render_performance(tokens, catalog, hold_frames=None):
    """Ground-truth dance for ``tokens`` at the catalog tempo.

    Clips are root-aligned end to end; a wait token holds the neutral pose
    for one beat.
    """
    skeleton, fps = catalog.skeleton, catalog.fps
    if hold_frames is None:
        hold_frames = _frames_per_beat(catalog)
    parts = []
    for tok in tokens:
        if tok == EOD:
            break
        if tok == NIL:
            nxt = hold_clip(skeleton, fps, rest_frame(skeleton), hold_frames)
        else:
            nxt = catalog.clip(tok)
        parts.append(align_root_points(parts[-1], nxt) if parts else nxt.copy())
    return concatenate(parts)


def _frames_per_beat(catalog):
    tid = catalog.cau_ids()[0]
    return len(catalog.clip(tid)) // catalog.beats(tid)


def _song_tokens(rng, config, catalog):
    target = int(rng.integers(config.song_beats[0], config.song_beats[1] + 1))
    caus = catalog.cau_ids()
    tokens, beats = [], 0
    while beats < target:
        tok = NIL if rng.random() < config.nil_prob else int(rng.choice(caus))
        tokens.append(tok)
        beats += catalog.beats(tok)
    return tokens


def _song_pack(rng, seq, period_frames, motifs, noise):
    n_beats = seq.end_beat
    t_fine = n_beats * period_frames
    duration = t_fine / FINE_RATE
    beat = rng.uniform(0.0, 0.08, size=t_fine)
    onset = rng.uniform(0.0, 0.08, size=t_fine)
    for k in range(n_beats):
        i = k * period_frames
        beat[i] = 1.0
        for j in (i - 1, i + 1):
            if 0 <= j < t_fine:
                beat[j] = max(beat[j], 0.3)
        onset[i] = 1.0
        half = i + period_frames // 2
        if half < t_fine:
            onset[half] = max(onset[half], 0.5)
    n_chroma = int(round(duration * 10))
    chroma = np.empty((12, n_chroma))
    owner = np.empty(n_beats, dtype=int)
    offset = np.empty(n_beats, dtype=int)
    for tok, (a, b) in zip(seq.tokens, seq.spans):
        owner[a:b] = tok
        offset[a:b] = np.arange(b - a)
    for i in range(n_chroma):
        k = min(int(i * 10 // period_frames), n_beats - 1)
        chroma[:, i] = motifs[owner[k]][offset[k]]
    chroma = np.clip(chroma + rng.normal(scale=noise, size=chroma.shape), 0.0, 1.0)
    return MusicFeaturePack(chroma, beat, onset, duration)


def generate_synthetic_corpus(seed, config=None, skeleton=None):
    """Catalog, songs (feature pack + annotation) and one performance per song."""
    config = (config or SyntheticConfig()).validate()
    rng = np.random.default_rng(seed)
    catalog = make_catalog(rng, config, skeleton)
    motifs = {NIL: rng.uniform(0.0, 0.2, size=(1, 12))}
    for tid in catalog.cau_ids():
        motifs[tid] = rng.uniform(0.0, 1.0, size=(catalog.beats(tid), 12))
    lo, hi = config.tempo_frames()
    songs, packs, performances = [], [], []
    for s in range(config.n_songs):
        tokens = _song_tokens(rng, config, catalog)
        seq = CauSequence.from_tokens(tokens, catalog)
        seq = CauSequence(seq.tokens + (EOD,), seq.spans + ((seq.end_beat, seq.end_beat),))
        period = int(rng.integers(lo, hi + 1))
        packs.append(_song_pack(rng, seq, period, motifs, config.motif_noise))
        songs.append(SongRecord(f"song{s:03d}", f"packs/song{s:03d}", seq))
        performances.append(render_performance(tokens, catalog))
    return SyntheticCorpus(catalog, songs, packs, performances, motifs)


@dataclass
class MotionSet:
    clips: list
    tokens: list
    junctions: list  # frame index where each clip's units meet


def performance_junctions(tokens, catalog, hold_frames=None):
    hold_frames = hold_frames or _frames_per_beat(catalog)
    lengths = [hold_frames if t == NIL else len(catalog.clip(t)) for t in tokens if t != EOD]
    return [int(v) for v in np.cumsum(lengths)[:-1]]


def generate_motion_set(seed, catalog, n_clips=16, n_tokens=(4, 7), nil_prob=0.1):
    """Ground-truth performances of random unit sequences (no music)."""
    rng = np.random.default_rng(seed)
    caus = catalog.cau_ids()
    out = MotionSet([], [], [])
    for _ in range(n_clips):
        n = int(rng.integers(n_tokens[0], n_tokens[1] + 1))
        tokens = [NIL if rng.random() < nil_prob else int(rng.choice(caus)) for _ in range(n)]
        out.clips.append(render_performance(tokens, catalog))
        out.tokens.append(tokens)
        out.junctions.append(performance_junctions(tokens, catalog))
    return out


MOTION_INDEX_TAG = "motionset 1"


def save_motion_set(root, motion_set):
    """Clips under ``root/clipNNN`` plus an index of their tokens and junctions."""
    os.makedirs(root, exist_ok=True)
    lines = [MOTION_INDEX_TAG]
    for i, (clip, tokens, junctions) in enumerate(zip(motion_set.clips, motion_set.tokens, motion_set.junctions)):
        name = f"clip{i:03d}"
        save_clip(os.path.join(root, name), clip)
        lines.append(f"clip {name} {','.join(map(str, tokens))} {','.join(map(str, junctions)) or '-'}")
    with open(os.path.join(root, "index.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_motion_set(root):
    path = os.path.join(root, "index.txt")
    if not os.path.isfile(path):
        raise ValidationError(f"motion set index {path} does not exist")
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines or " ".join(lines[0]) != MOTION_INDEX_TAG:
        raise ValidationError(f"{path}: missing '{MOTION_INDEX_TAG}' header")
    out = MotionSet([], [], [])
    for parts in lines[1:]:
        if len(parts) != 4 or parts[0] != "clip":
            raise ValidationError(f"{path}: malformed line {' '.join(parts)!r}")
        out.clips.append(load_clip(os.path.join(root, parts[1])))
        out.tokens.append([int(t) for t in parts[2].split(",")])
        out.junctions.append([] if parts[3] == "-" else [int(j) for j in parts[3].split(",")])
    return out


def save_corpus(root, corpus, seed, config):
    """Write catalog, packs, performances, annotation file and a manifest."""
    os.makedirs(root, exist_ok=True)
    save_catalog(os.path.join(root, "catalog.txt"), corpus.catalog)
    for rec, pack, perf in zip(corpus.songs, corpus.packs, corpus.performances):
        save_feature_pack(os.path.join(root, rec.pack_path), pack, {"song": rec.name})
        save_clip(os.path.join(root, "performances", rec.name), perf, {"song": rec.name})
    write_corpus(os.path.join(root, "corpus.txt"), corpus.songs)
    manifest = {"seed": seed, "config": config.to_json(), "n_songs": len(corpus.songs),
                "vocab_size": corpus.catalog.vocab_size}
    with open(os.path.join(root, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_corpus(root):
    """Inverse of ``save_corpus``; chroma motifs are not stored."""
    catalog = load_catalog(os.path.join(root, "catalog.txt"))
    songs = read_corpus(os.path.join(root, "corpus.txt"))
    packs = [load_feature_pack(os.path.join(root, rec.pack_path)) for rec in songs]
    perf_dir = os.path.join(root, "performances")
    performances = [load_clip(os.path.join(perf_dir, rec.name)) if os.path.isdir(os.path.join(perf_dir, rec.name))
                    else None for rec in songs]
    return SyntheticCorpus(catalog, songs, packs, performances)
