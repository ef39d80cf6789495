"""Subtoken sequence distributions built from word-type counts.

Every word type is encoded once (without the leading-space marker) and each
encoding prefix of length 1..max_seq_len is credited with the word's count.
Sequences never cross word boundaries. Length-1 sequences are kept because
they serve as conditional denominators even though they are never selected.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

from .counts import UnigramTable
from .errors import DataError
from .tokenizer import BpeTokenizer, SubwordSequence

SeqKey = tuple[int, ...]


@dataclass
class SequenceDistribution:
    """Counts of subtoken sequences for one corpus."""

    seq_counts: dict[SeqKey, int]
    word_total: int
    corpus_id: str
    max_seq_len: int
    vocab_hash: str

    def count(self, seq) -> int:
        return self.seq_counts[_key(seq)]

    def __contains__(self, seq) -> bool:
        return _key(seq) in self.seq_counts

    def __len__(self) -> int:
        return len(self.seq_counts)


def _key(seq) -> SeqKey:
    if isinstance(seq, SubwordSequence):
        return seq.ids
    return tuple(seq)


def build_sequence_distribution(
    unigrams: UnigramTable,
    tok: BpeTokenizer,
    max_seq_len: int = 10,
    workers: int = 1,
) -> SequenceDistribution:
    """Expand word types into prefix sequence counts.

    Parallel runs split the word types into batches and merge the partial
    tables; the merge is exact integer addition, so the result equals the
    serial build for any worker count.
    """
    if max_seq_len < 1:
        raise ValueError(f"max_seq_len must be >= 1, got {max_seq_len}")
    items = list(unigrams.counts.items())
    if workers > 1 and len(items) > 2 * workers:
        step = (len(items) + workers - 1) // workers
        batches = [items[i : i + step] for i in range(0, len(items), step)]
        seq_counts: dict[SeqKey, int] = {}
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(tok, max_seq_len)
        ) as pool:
            for part in pool.map(_expand_batch, batches):
                for key, c in part.items():
                    seq_counts[key] = seq_counts.get(key, 0) + c
    else:
        seq_counts = _expand(items, tok, max_seq_len)
    return SequenceDistribution(
        seq_counts=seq_counts,
        word_total=unigrams.total_tokens,
        corpus_id=unigrams.corpus_id,
        max_seq_len=max_seq_len,
        vocab_hash=tok.vocab_hash(),
    )


def _expand(items: Iterable[tuple[str, int]], tok: BpeTokenizer, max_seq_len: int) -> dict[SeqKey, int]:
    counts: dict[SeqKey, int] = {}
    get = counts.get
    for word, c in items:
        ids = tok.encode_word(word).ids
        for i in range(1, min(len(ids), max_seq_len) + 1):
            key = ids[:i]
            counts[key] = get(key, 0) + c
    return counts


_WORKER_STATE: tuple[BpeTokenizer, int] | None = None


def _init_worker(tok: BpeTokenizer, max_seq_len: int) -> None:
    global _WORKER_STATE
    _WORKER_STATE = (tok, max_seq_len)


def _expand_batch(items: list[tuple[str, int]]) -> dict[SeqKey, int]:
    assert _WORKER_STATE is not None
    tok, max_seq_len = _WORKER_STATE
    return _expand(items, tok, max_seq_len)


def phrase_probability(dist: SequenceDistribution, seq, mode: str = "conditional") -> float:
    """Probability of a sequence under ``dist``.

    ``conditional`` divides by the count of the length-(n-1) prefix (the
    whole corpus for single tokens); ``marginal`` divides by the corpus
    word total. Raises KeyError when the sequence was never counted.
    """
    key = _key(seq)
    if key not in dist.seq_counts:
        raise KeyError(f"sequence {key} not present in {dist.corpus_id} distribution")
    c = dist.seq_counts[key]
    if mode == "marginal":
        return c / dist.word_total
    if mode != "conditional":
        raise ValueError(f"unknown probability mode: {mode!r}")
    if len(key) == 1:
        return c / dist.word_total
    prefix = key[:-1]
    if prefix not in dist.seq_counts:
        raise DataError(f"distribution violates prefix closure at {key}")
    return c / dist.seq_counts[prefix]


def save_distribution(dist: SequenceDistribution, path) -> None:
    """Persist as TSV 'id,id,... <TAB> count' with a single header line."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(
            f"#corpus:{dist.corpus_id} #total:{dist.word_total} "
            f"#lambda:{dist.max_seq_len} #vocab:{dist.vocab_hash}\n"
        )
        for key in sorted(dist.seq_counts):
            f.write(",".join(map(str, key)) + f"\t{dist.seq_counts[key]}\n")


def load_distribution(path) -> SequenceDistribution:
    seq_counts: dict[SeqKey, int] = {}
    header: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    for part in line.split():
                        name, _, value = part.lstrip("#").partition(":")
                        header[name] = value
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise DataError(f"{path}:{lineno}: expected 'ids<TAB>count'")
                key = tuple(int(x) for x in fields[0].split(","))
                seq_counts[key] = int(fields[1])
    except OSError as exc:
        raise DataError(f"cannot read distribution file {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"malformed distribution file {path}: {exc}") from exc
    for name in ("corpus", "total", "lambda"):
        if name not in header:
            raise DataError(f"distribution file {path} is missing '#{name}:' in its header")
    dist = SequenceDistribution(
        seq_counts=seq_counts,
        word_total=int(header["total"]),
        corpus_id=header["corpus"],
        max_seq_len=int(header["lambda"]),
        vocab_hash=header.get("vocab", ""),
    )
    _check_prefix_closure(dist, path)
    return dist


def _check_prefix_closure(dist: SequenceDistribution, path) -> None:
    for key, c in dist.seq_counts.items():
        if len(key) < 2:
            continue
        prefix = key[:-1]
        if prefix not in dist.seq_counts or dist.seq_counts[prefix] < c:
            raise DataError(f"distribution file {path} violates prefix closure at {key}")
