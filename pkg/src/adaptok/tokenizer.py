"""Byte-level BPE tokenizer of the GPT-2/RoBERTa family.

Loads the standard vocab.json + merges.txt pair, encodes single
whitespace-free words, and supports extending the vocabulary with new
surfaces that are matched as whole segments before any merges run.

Tokenizers are immutable: ``add_tokens`` returns a new instance, so a
loaded tokenizer can be shared freely across workers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, DataError


def bytes_to_unicode() -> dict[int, str]:
    """Bijective map from the 256 byte values to printable unicode symbols.

    Printable ASCII and two latin-1 ranges map to themselves; the remaining
    bytes are shifted up past 0x100 so every byte has a visible stand-in.
    """
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, [chr(c) for c in cs]))


BYTE_TO_UNICODE = bytes_to_unicode()
UNICODE_TO_BYTE = {v: k for k, v in BYTE_TO_UNICODE.items()}
SPACE_MARKER = BYTE_TO_UNICODE[ord(" ")]  # "Ġ"


@dataclass(frozen=True)
class SubwordSequence:
    """An ordered run of tokenizer tokens within one word."""

    ids: tuple[int, ...]
    tokens: tuple[str, ...]

    @property
    def surface(self) -> str:
        return "".join(self.tokens)

    def __len__(self) -> int:
        return len(self.ids)


class BpeTokenizer:
    """Vocabulary + ranked merges, plus optional added whole-segment tokens."""

    def __init__(
        self,
        vocab: dict[str, int],
        merges: Sequence[tuple[str, str]],
        added_surfaces: Sequence[str] = (),
    ):
        ids = sorted(vocab.values())
        if ids != list(range(len(vocab))):
            raise DataError("vocab ids must be unique and dense in [0, V)")
        for left, right in merges:
            if left + right not in vocab:
                raise DataError(f"merge result {left + right!r} not in vocab")
        self.vocab = dict(vocab)
        self.merges = [tuple(m) for m in merges]
        self.added_surfaces = list(added_surfaces)
        self._merge_ranks = {pair: rank for rank, pair in enumerate(self.merges)}
        self._id_to_token = {i: t for t, i in self.vocab.items()}
        self._added_trie = _build_trie(self.added_surfaces)
        self._hash: str | None = None

    @classmethod
    def from_files(cls, vocab_file, merges_file) -> "BpeTokenizer":
        return load_tokenizer(vocab_file, merges_file)

    def __len__(self) -> int:
        return len(self.vocab)

    def vocab_hash(self) -> str:
        """Digest of vocab + merges + added surfaces, for mismatch detection."""
        if self._hash is None:
            h = hashlib.sha256()
            for token, idx in sorted(self.vocab.items(), key=lambda kv: kv[1]):
                h.update(f"{idx}\t{token}\n".encode("utf-8"))
            for left, right in self.merges:
                h.update(f"{left} {right}\n".encode("utf-8"))
            self._hash = h.hexdigest()[:16]
        return self._hash

    def token_strings(self, ids: Iterable[int]) -> tuple[str, ...]:
        return tuple(self._id_to_token[i] for i in ids)

    def encode_word(self, word: str, leading_space: bool = False) -> SubwordSequence:
        """Encode one whitespace-free word to a SubwordSequence.

        The word is mapped through the byte table (with the space marker
        prefixed when ``leading_space`` is set), added surfaces are consumed
        as whole segments, and the remaining spans are merged greedily in
        ascending rank order.
        """
        if not word or any(ch.isspace() for ch in word):
            raise ValueError(f"word must be non-empty and whitespace-free: {word!r}")
        symbols = "".join(BYTE_TO_UNICODE[b] for b in word.encode("utf-8"))
        if leading_space:
            symbols = SPACE_MARKER + symbols
        tokens = self._encode_symbols(symbols)
        try:
            ids = tuple(self.vocab[t] for t in tokens)
        except KeyError as exc:
            raise DataError(f"symbol {exc.args[0]!r} not covered by vocab") from None
        return SubwordSequence(ids=ids, tokens=tuple(tokens))

    def _encode_symbols(self, symbols: str) -> list[str]:
        if not self._added_trie:
            return self._bpe(symbols)
        tokens: list[str] = []
        matched = False
        for segment, is_added in _split_on_added(symbols, self._added_trie):
            if is_added:
                matched = True
                tokens.append(segment)
            else:
                tokens.extend(self._bpe(segment))
        if matched:
            # Never let an added-token cut produce a longer encoding than
            # plain BPE would; keeps compression monotone under augmentation.
            base = self._bpe(symbols)
            if len(base) < len(tokens):
                return base
        return tokens

    def _bpe(self, segment: str) -> list[str]:
        parts = list(segment)
        if len(parts) < 2:
            return parts
        ranks = self._merge_ranks
        while len(parts) > 1:
            best_rank = None
            best_pair = None
            for pair in zip(parts, parts[1:]):
                rank = ranks.get(pair)
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank = rank
                    best_pair = pair
            if best_pair is None:
                break
            merged = best_pair[0] + best_pair[1]
            out: list[str] = []
            i = 0
            while i < len(parts):
                if i < len(parts) - 1 and parts[i] == best_pair[0] and parts[i + 1] == best_pair[1]:
                    out.append(merged)
                    i += 2
                else:
                    out.append(parts[i])
                    i += 1
            parts = out
        return parts

    def decode(self, seq: SubwordSequence | Iterable[int]) -> str:
        ids = seq.ids if isinstance(seq, SubwordSequence) else tuple(seq)
        symbols = "".join(self._id_to_token[i] for i in ids)
        raw = bytes(UNICODE_TO_BYTE[ch] for ch in symbols)
        return raw.decode("utf-8", errors="replace")

    def add_tokens(self, surfaces: Sequence[str]) -> "BpeTokenizer":
        """Return a new tokenizer with ``surfaces`` appended to the vocabulary.

        Each surface receives the next free id in input order, so callers
        control id assignment by ordering (highest score first keeps ids
        stable under truncation).
        """
        seen: set[str] = set()
        for s in surfaces:
            if s in seen:
                raise ConfigError(f"duplicate surface in input: {s!r}")
            if s in self.vocab:
                raise ConfigError(f"surface already in vocab: {s!r}")
            seen.add(s)
        vocab = dict(self.vocab)
        next_id = len(vocab)
        for s in surfaces:
            vocab[s] = next_id
            next_id += 1
        return BpeTokenizer(vocab, self.merges, list(self.added_surfaces) + list(surfaces))

    def save(self, out_dir) -> None:
        """Write vocab.json, merges.txt, and added_tokens.txt into a directory."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "vocab.json", "w", encoding="utf-8") as f:
            json.dump(self.vocab, f, ensure_ascii=False)
        with open(out / "merges.txt", "w", encoding="utf-8", newline="\n") as f:
            f.write("#version: 0.2\n")
            for left, right in self.merges:
                f.write(f"{left} {right}\n")
        with open(out / "added_tokens.txt", "w", encoding="utf-8", newline="\n") as f:
            for s in self.added_surfaces:
                f.write(s + "\n")


def load_tokenizer(vocab_file, merges_file) -> BpeTokenizer:
    """Load a tokenizer from the standard vocab.json + merges.txt pair."""
    try:
        with open(vocab_file, "r", encoding="utf-8") as f:
            vocab = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read vocab file {vocab_file}: {exc}") from exc
    if not isinstance(vocab, dict):
        raise DataError(f"vocab file {vocab_file} is not a JSON object")

    merges: list[tuple[str, str]] = []
    try:
        with open(merges_file, "r", encoding="utf-8") as f:
            lines = f.read().split("\n")
    except OSError as exc:
        raise DataError(f"cannot read merges file {merges_file}: {exc}") from exc
    start = 1 if lines and lines[0].startswith("#") else 0
    for lineno, line in enumerate(lines[start:], start + 1):
        if not line:
            continue
        fields = line.split(" ")
        if len(fields) != 2:
            raise DataError(f"{merges_file}:{lineno}: expected 'left right', got {line!r}")
        merges.append((fields[0], fields[1]))
    return BpeTokenizer(vocab, merges)


def load_tokenizer_dir(tokenizer_dir) -> BpeTokenizer:
    """Load from a directory with vocab.json + merges.txt (+ added_tokens.txt).

    When added_tokens.txt is present, its surfaces are expected to already
    be part of vocab.json (as written by ``BpeTokenizer.save``); they are
    re-registered for whole-segment matching.
    """
    d = Path(tokenizer_dir)
    tok = load_tokenizer(d / "vocab.json", d / "merges.txt")
    added_file = d / "added_tokens.txt"
    if added_file.exists():
        surfaces = [line for line in added_file.read_text(encoding="utf-8").split("\n") if line]
        if surfaces:
            base_vocab = {t: i for t, i in tok.vocab.items() if t not in set(surfaces)}
            tok = BpeTokenizer(base_vocab, tok.merges).add_tokens(surfaces)
    return tok


def _build_trie(surfaces: Sequence[str]) -> dict:
    trie: dict = {}
    for s in surfaces:
        node = trie
        for ch in s:
            node = node.setdefault(ch, {})
        node[""] = s  # terminal marker holding the full surface
    return trie


def _split_on_added(symbols: str, trie: dict) -> list[tuple[str, bool]]:
    """Split a symbol string on added surfaces, longest match first.

    Returns (segment, is_added) pairs whose segments concatenate back to
    the input.
    """
    out: list[tuple[str, bool]] = []
    n = len(symbols)
    i = 0
    pending = 0  # start of the current unmatched span
    while i < n:
        node = trie
        match_end = -1
        j = i
        while j < n:
            node = node.get(symbols[j])
            if node is None:
                break
            j += 1
            if "" in node:
                match_end = j
        if match_end > i:
            if pending < i:
                out.append((symbols[pending:i], False))
            out.append((symbols[i:match_end], True))
            i = match_end
            pending = i
        else:
            i += 1
    if pending < n:
        out.append((symbols[pending:], False))
    return out
