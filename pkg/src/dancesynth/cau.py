"""Choreographic action unit vocabulary, annotated sequences, and BLEU-4.

Ids 0, 1, 2 are reserved for the start-of-dance, end-of-dance and
wait-one-beat tokens; catalog entries take ids from 3 upward.

Catalog file (UTF-8 text, one record per line, clip paths relative to the
catalog's directory)::

    caucatalog 1
    cau <id> <name> <beats> <clip-dir>

Annotation corpus file::

    caucorpus 1
    song <name> <feature-pack-dir>
    span <start-beat> <end-beat> <token-id>
    end
"""

import math
import os
from dataclasses import dataclass, field

from .errors import ValidationError
from .motion import load_clip, save_clip

SOD, EOD, NIL = 0, 1, 2
SPECIALS = ("SOD", "EOD", "NIL")
N_SPECIAL = len(SPECIALS)
CATALOG_TAG = "caucatalog 1"
CORPUS_TAG = "caucorpus 1"


@dataclass(frozen=True)
class CauToken:
    id: int
    name: str
    kind: str  # "SOD", "EOD", "NIL" or "CAU"


@dataclass(frozen=True)
class CatalogEntry:
    token: CauToken
    beats: int
    clip: object = field(default=None, compare=False, repr=False)
    clip_path: str | None = None


class CauCatalog:
    """Token id -> beat length and reference motion clip."""

    def __init__(self, entries):
        """``entries``: iterable of ``(name, beats, clip)`` for the CAU tokens, in id order."""
        self._entries = [CatalogEntry(CauToken(SOD, "SOD", "SOD"), 0),
                         CatalogEntry(CauToken(EOD, "EOD", "EOD"), 0),
                         CatalogEntry(CauToken(NIL, "NIL", "NIL"), 1)]
        names = set(SPECIALS)
        for name, beats, clip, *rest in entries:
            tid = len(self._entries)
            if name in names or any(c.isspace() for c in name) or not name:
                raise ValidationError(f"token {tid}: bad or duplicate name {name!r}")
            if int(beats) != beats or beats < 1:
                raise ValidationError(f"token {name!r}: beat length must be a positive integer, got {beats}")
            if clip is None:
                raise ValidationError(f"token {name!r}: no motion clip")
            names.add(name)
            path = rest[0] if rest else None
            self._entries.append(CatalogEntry(CauToken(tid, name, "CAU"), int(beats), clip, path))
        self._by_name = {e.token.name: e.token.id for e in self._entries}

    def __len__(self):
        return len(self._entries)

    @property
    def vocab_size(self):
        return len(self._entries)

    def __eq__(self, other):
        if not isinstance(other, CauCatalog) or len(self) != len(other):
            return False
        for a, b in zip(self._entries, other._entries):
            if a.token != b.token or a.beats != b.beats:
                return False
            if (a.clip is None) != (b.clip is None):
                return False
            if a.clip is not None and not (a.clip.fps == b.clip.fps and a.clip.skeleton == b.clip.skeleton
                                           and (a.clip.data == b.clip.data).all()):
                return False
        return True

    def entry(self, token_id):
        if not 0 <= token_id < len(self._entries):
            raise ValidationError(f"unknown token id {token_id} (vocabulary size {len(self)})")
        return self._entries[token_id]

    def token(self, token_id):
        return self.entry(token_id).token

    def beats(self, token_id):
        return self.entry(token_id).beats

    def clip(self, token_id):
        return self.entry(token_id).clip

    def id_of(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise ValidationError(f"unknown token name {name!r}") from None

    def cau_ids(self):
        return list(range(N_SPECIAL, len(self)))

    @property
    def fps(self):
        clips = [e.clip for e in self._entries if e.clip is not None]
        return clips[0].fps if clips else None

    @property
    def skeleton(self):
        clips = [e.clip for e in self._entries if e.clip is not None]
        return clips[0].skeleton if clips else None


def load_catalog(path):
    """Parse and validate a catalog file, loading every referenced clip."""
    if not os.path.isfile(path):
        raise ValidationError(f"catalog file {path} does not exist")
    base = os.path.dirname(os.path.abspath(path))
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != CATALOG_TAG:
        raise ValidationError(f"{path}: missing '{CATALOG_TAG}' header")
    rows = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 5 or parts[0] != "cau":
            raise ValidationError(f"{path}: malformed line {ln!r}")
        _, tid, name, beats, rel = parts
        tid, beats = int(tid), int(beats)
        if tid < N_SPECIAL:
            raise ValidationError(f"{path}: token {name!r} uses reserved id {tid}")
        if tid in rows:
            raise ValidationError(f"{path}: duplicate token id {tid} ({rows[tid][0]!r} and {name!r})")
        if beats < 1:
            raise ValidationError(f"{path}: token {name!r} has beat length {beats}; must be >= 1")
        rows[tid] = (name, beats, rel)
    expected = list(range(N_SPECIAL, N_SPECIAL + len(rows)))
    if sorted(rows) != expected:
        raise ValidationError(f"{path}: token ids must be contiguous from {N_SPECIAL}, got {sorted(rows)}")
    entries = []
    for tid in expected:
        name, beats, rel = rows[tid]
        clip_dir = os.path.join(base, rel)
        if not os.path.isdir(clip_dir):
            raise ValidationError(f"{path}: token {name!r} references missing clip {rel}")
        entries.append((name, beats, load_clip(clip_dir), rel))
    return CauCatalog(entries)


def save_catalog(path, catalog, clip_dir="clips"):
    """Write the catalog file and its clips (under ``clip_dir`` next to it)."""
    base = os.path.dirname(os.path.abspath(path))
    lines = [CATALOG_TAG]
    for tid in catalog.cau_ids():
        e = catalog.entry(tid)
        rel = e.clip_path or f"{clip_dir}/{e.token.name}"
        save_clip(os.path.join(base, rel), e.clip)
        lines.append(f"cau {tid} {e.token.name} {e.beats} {rel}")
    os.makedirs(base, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class CauSequence:
    """Tokens (start-of-dance excluded) with ``(start_beat, end_beat)`` spans."""

    tokens: tuple = ()
    spans: tuple = ()

    def __post_init__(self):
        tokens = tuple(int(t) for t in self.tokens)
        spans = tuple((int(a), int(b)) for a, b in self.spans)
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "spans", spans)
        if len(tokens) != len(spans):
            raise ValidationError(f"{len(tokens)} tokens but {len(spans)} spans")
        if SOD in tokens:
            raise ValidationError("start-of-dance token inside a sequence")
        if EOD in tokens[:-1]:
            raise ValidationError("end-of-dance token must be terminal")
        prev_end = 0
        for i, (a, b) in enumerate(spans):
            if a < prev_end or b < a:
                raise ValidationError(f"span {i} ({a}, {b}) overlaps or runs backwards")
            if b == a and tokens[i] != EOD:
                raise ValidationError(f"span {i} of token {tokens[i]} is empty")
            prev_end = b

    def __len__(self):
        return len(self.tokens)

    @property
    def ended(self):
        return bool(self.tokens) and self.tokens[-1] == EOD

    @property
    def end_beat(self):
        return self.spans[-1][1] if self.spans else 0

    @classmethod
    def from_tokens(cls, tokens, catalog, start=0):
        """Lay tokens end to end from beat ``start`` using catalog beat lengths."""
        spans, t = [], start
        for tok in tokens:
            n = catalog.beats(tok)
            spans.append((t, t + n))
            t += n
        return cls(tuple(tokens), tuple(spans))

    def content(self):
        """Tokens with start/end-of-dance removed (wait tokens kept)."""
        return [t for t in self.tokens if t not in (SOD, EOD)]


@dataclass(frozen=True)
class SongRecord:
    name: str
    pack_path: str
    sequence: CauSequence


def write_corpus(path, records):
    lines = [CORPUS_TAG]
    for rec in records:
        if any(c.isspace() for c in rec.name + rec.pack_path):
            raise ValidationError(f"song {rec.name!r}: names and paths may not contain whitespace")
        lines.append(f"song {rec.name} {rec.pack_path}")
        for tok, (a, b) in zip(rec.sequence.tokens, rec.sequence.spans):
            lines.append(f"span {a} {b} {tok}")
        lines.append("end")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_corpus(path):
    """Song records; pack paths are returned as written (relative to the file)."""
    if not os.path.isfile(path):
        raise ValidationError(f"corpus file {path} does not exist")
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines or " ".join(lines[0]) != CORPUS_TAG:
        raise ValidationError(f"{path}: missing '{CORPUS_TAG}' header")
    records, current = [], None
    for parts in lines[1:]:
        if parts[0] == "song" and len(parts) == 3 and current is None:
            current = (parts[1], parts[2], [], [])
        elif parts[0] == "span" and len(parts) == 4 and current is not None:
            current[3].append((int(parts[1]), int(parts[2])))
            current[2].append(int(parts[3]))
        elif parts == ["end"] and current is not None:
            records.append(SongRecord(current[0], current[1], CauSequence(tuple(current[2]), tuple(current[3]))))
            current = None
        else:
            raise ValidationError(f"{path}: unexpected line {' '.join(parts)!r}")
    if current is not None:
        raise ValidationError(f"{path}: song {current[0]!r} is missing its 'end' line")
    return records


def sequence_duration_beats(seq, catalog):
    """Total beats consumed by the sequence's tokens according to ``catalog``."""
    tokens = seq.tokens if isinstance(seq, CauSequence) else seq
    return sum(catalog.beats(t) for t in tokens)


BLEU_EPS = 1e-9


def _ngrams(tokens, n):
    counts = {}
    for i in range(len(tokens) - n + 1):
        key = tuple(tokens[i:i + n])
        counts[key] = counts.get(key, 0) + 1
    return counts


def bleu4(candidate, reference, eps=BLEU_EPS):
    """Sentence-level BLEU-4 with uniform weights and epsilon smoothing.

    Start/end-of-dance tokens are stripped from both lists. Zero clipped
    match counts are replaced by ``eps``. Orders longer than the candidate
    have no n-grams at all and are left out of the geometric mean, so any
    non-empty sequence scores 1 against itself.
    """
    cand = [t for t in candidate if t not in (SOD, EOD)]
    ref = [t for t in reference if t not in (SOD, EOD)]
    if not cand:
        return 0.0
    orders = range(1, min(4, len(cand)) + 1)
    log_p = 0.0
    for n in orders:
        c_counts, r_counts = _ngrams(cand, n), _ngrams(ref, n)
        matched = sum(min(c, r_counts.get(g, 0)) for g, c in c_counts.items())
        total = len(cand) - n + 1
        log_p += math.log(max(matched, eps) / total)
    log_p /= len(orders)
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return bp * math.exp(log_p)


def corpus_bleu(candidates, references):
    """Macro average of sentence BLEU-4 over paired sequences."""
    if len(candidates) != len(references) or not candidates:
        raise ValidationError("need equally many, and at least one, candidates and references")
    return sum(bleu4(c, r) for c, r in zip(candidates, references)) / len(candidates)
