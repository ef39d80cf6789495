"""Static token embeddings: corpus tokenization, SGNS training, text I/O.

The trainer follows the classic word2vec skip-gram conventions: frequency
subsampling, unigram^0.75 negative sampling, a shrinking random window,
and a linearly decaying learning rate. With a fixed seed and one worker
the run is bit-reproducible; extra workers train hogwild-style over shared
arrays and give up that guarantee.
"""

from __future__ import annotations

import gzip
import math
import threading
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .tokenizer import BpeTokenizer
from .util import fmt_float


@dataclass
class EmbeddingMatrix:
    """Token-string indexed matrix of d-dimensional float32 vectors."""

    dim: int
    rows: dict[str, np.ndarray]
    provenance: str = "ingested"

    def __contains__(self, token: str) -> bool:
        return token in self.rows

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 768
    window: int = 5
    min_count: int = 100
    epochs: int = 2
    sample: float = 1e-5
    negatives: int = 5
    alpha: float = 0.025
    min_alpha: float = 1e-4
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.epochs < 1 or self.negatives < 1:
            raise ConfigError(f"invalid SGNS config: {self}")


def tokenize_for_static(lines: Iterable[str], tok: BpeTokenizer) -> Iterator[list[str]]:
    """Turn documents into token-surface sequences under ``tok``.

    Each line is whitespace-split and every word encoded in its bare form,
    so added multi-subtoken surfaces come through as single units. Encoding
    is cached per word type.
    """
    cache: dict[str, tuple[str, ...]] = {}
    for line in lines:
        sent: list[str] = []
        for word in line.split():
            toks = cache.get(word)
            if toks is None:
                toks = tok.encode_word(word).tokens
                cache[word] = toks
            sent.extend(toks)
        yield sent


class TokenizedCorpus:
    """Re-iterable view of text files as token-surface sentences."""

    def __init__(self, paths: Sequence, tok: BpeTokenizer):
        self.paths = [Path(p) for p in paths]
        self.tok = tok

    def __iter__(self) -> Iterator[list[str]]:
        return tokenize_for_static(self._lines(), self.tok)

    def _lines(self) -> Iterator[str]:
        for p in self.paths:
            opener = gzip.open if str(p).endswith(".gz") else open
            with opener(p, "rt", encoding="utf-8", errors="replace") as f:
                yield from f


def train_sgns(sentences, cfg: SgnsConfig) -> EmbeddingMatrix:
    """Train skip-gram negative-sampling vectors over token sentences.

    ``sentences`` must be iterable once per epoch plus once for the
    vocabulary pass (a list, or something like TokenizedCorpus).
    Returns the input-side vectors of all tokens meeting min_count.
    """
    vocab_counts: Counter = Counter()
    total_raw = 0
    for sent in sentences:
        vocab_counts.update(sent)
        total_raw += len(sent)
    retained = sorted(
        ((t, c) for t, c in vocab_counts.items() if c >= cfg.min_count),
        key=lambda kv: (-kv[1], kv[0]),
    )
    if not retained:
        raise DataError(
            f"no tokens survive min_count={cfg.min_count} "
            f"(corpus has {len(vocab_counts)} distinct tokens)"
        )
    index = {t: i for i, (t, c) in enumerate(retained)}
    counts = np.array([c for _, c in retained], dtype=np.float64)
    retain_total = counts.sum()

    # Subsampling keep-probability per retained token (word2vec formula).
    if cfg.sample > 0:
        threshold = cfg.sample * retain_total
        keep = (np.sqrt(counts / threshold) + 1.0) * (threshold / counts)
        keep = np.minimum(keep, 1.0)
    else:
        keep = np.ones_like(counts)

    # Cumulative table for unigram^0.75 negative sampling.
    pw = counts**0.75
    cum = np.cumsum(pw)
    cum = np.round(cum / cum[-1] * (2**31 - 1)).astype(np.int64)

    nvocab = len(retained)
    rng = np.random.RandomState(cfg.seed)
    syn0 = ((rng.rand(nvocab, cfg.dim) - 0.5) / cfg.dim).astype(np.float32)
    syn1neg = np.zeros((nvocab, cfg.dim), dtype=np.float32)
    labels = np.zeros(cfg.negatives + 1, dtype=np.float64)
    labels[0] = 1.0

    total_training = max(1, cfg.epochs * total_raw)
    progress = [0]

    def run(worker_id: int, nworkers: int, epoch: int) -> None:
        wrng = rng if nworkers == 1 else np.random.RandomState(
            cfg.seed + 1 + worker_id + epoch * nworkers
        )
        for sent_no, sent in enumerate(sentences):
            if sent_no % nworkers != worker_id:
                continue
            alpha = max(
                cfg.min_alpha,
                cfg.alpha - (cfg.alpha - cfg.min_alpha) * (progress[0] / total_training),
            )
            progress[0] += len(sent)
            idxs = []
            for t in sent:
                i = index.get(t)
                if i is None:
                    continue
                if keep[i] >= 1.0 or wrng.random_sample() < keep[i]:
                    idxs.append(i)
            for pos, wi in enumerate(idxs):
                span = cfg.window - wrng.randint(cfg.window)
                start = max(0, pos - span)
                for pos2 in range(start, min(len(idxs), pos + span + 1)):
                    if pos2 == pos:
                        continue
                    l1 = syn0[idxs[pos2]]  # view; updated in place below
                    targets = [wi]
                    while len(targets) < cfg.negatives + 1:
                        w = int(np.searchsorted(cum, wrng.randint(cum[-1])))
                        if w != wi:
                            targets.append(w)
                    t_arr = np.asarray(targets)
                    l2 = syn1neg[t_arr]  # copy of the pre-update rows
                    z = (l2 @ l1).astype(np.float64)
                    g = (labels - 1.0 / (1.0 + np.exp(-z))) * alpha
                    g32 = g.astype(np.float32)
                    syn1neg[t_arr] += np.outer(g32, l1)
                    l1 += g32 @ l2

    for epoch in range(cfg.epochs):
        if cfg.workers <= 1:
            run(0, 1, epoch)
        else:
            threads = [
                threading.Thread(target=run, args=(w, cfg.workers, epoch))
                for w in range(cfg.workers)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()

    rows = {t: syn0[index[t]].copy() for t, _ in retained}
    return EmbeddingMatrix(dim=cfg.dim, rows=rows, provenance="trained")


def save_word2vec_text(emb: EmbeddingMatrix, path) -> None:
    """Write the 'rows dim' header format; gzip when the path ends in .gz."""
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wt", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(emb.rows)} {emb.dim}\n")
        for token, vec in emb.rows.items():
            f.write(token + " " + " ".join(fmt_float(float(x)) for x in vec) + "\n")


def load_word2vec_text(path) -> EmbeddingMatrix:
    opener = gzip.open if str(path).endswith(".gz") else open
    try:
        with opener(path, "rt", encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2:
                raise DataError(f"{path}: header must be 'rows dim'")
            try:
                nrows, dim = int(header[0]), int(header[1])
            except ValueError:
                raise DataError(f"{path}: header must be 'rows dim'") from None
            rows: dict[str, np.ndarray] = {}
            for lineno, line in enumerate(f, 2):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split(" ")
                if len(fields) != dim + 1:
                    raise DataError(f"{path}:{lineno}: expected token + {dim} values")
                token = fields[0]
                if token in rows:
                    raise DataError(f"{path}:{lineno}: duplicate token {token!r}")
                try:
                    vec = np.array([float(x) for x in fields[1:]], dtype=np.float32)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: non-numeric value") from None
                if not np.all(np.isfinite(vec)):
                    raise DataError(f"{path}:{lineno}: non-finite value for {token!r}")
                rows[token] = vec
    except OSError as exc:
        raise DataError(f"cannot read embeddings file {path}: {exc}") from exc
    if len(rows) != nrows:
        raise DataError(f"{path}: header declares {nrows} rows, found {len(rows)}")
    return EmbeddingMatrix(dim=dim, rows=rows, provenance="ingested")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b) / (na * nb)
