"""Scoring and selection of augmentation sequences.

A sequence is scored by how much more phrase-like it is in the domain
corpus than in the base corpus: with p and q the sequence's probabilities
in the two corpora, the relevance score is p * ln(p / q), the sequence's
pointwise contribution to KL divergence. Only sequences observed in both
corpora are scored (the intersection rule), and only multi-token ones are
ever selectable since single tokens are already vocabulary entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError, DataError
from .sequences import SequenceDistribution
from .tokenizer import BpeTokenizer, SubwordSequence
from .util import fmt_float

MODES = ("conditional", "marginal")


@dataclass(frozen=True)
class SelectionConfig:
    """Knobs for scoring and selection."""

    eta: int = 10000
    f_min: int = 20
    max_len: int = 10
    mode: str = "conditional"
    require_both: bool = True

    def __post_init__(self):
        if self.eta < 1:
            raise ConfigError(f"eta must be >= 1, got {self.eta}")
        if self.f_min < 1:
            raise ConfigError(f"f_min must be >= 1, got {self.f_min}")
        if self.max_len < 2:
            raise ConfigError(f"max_len must be >= 2, got {self.max_len}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class AugmentationCandidate:
    seq: SubwordSequence
    p_domain: float
    p_base: float
    score: float
    domain_count: int
    base_count: int
    in_vocab: bool = field(default=False, compare=False)

    @property
    def surface(self) -> str:
        return self.seq.surface


def pointwise_kl(p: float, q: float) -> float:
    """p * ln(p / q), the single-outcome contribution to KL divergence.

    Positive exactly when p > q. Natural log; selection order does not
    depend on the base.
    """
    if p <= 0 or q <= 0:
        raise ValueError(f"probabilities must be positive, got p={p}, q={q}")
    return p * math.log(p / q)


def score_candidates(
    domain: SequenceDistribution,
    base: SequenceDistribution,
    tok: BpeTokenizer,
    cfg: SelectionConfig,
) -> list[AugmentationCandidate]:
    """Score every multi-token sequence present in both distributions.

    Returns candidates sorted by descending score with deterministic
    tie-breaking (shorter sequence, then lexicographic surface).
    """
    if domain.vocab_hash != base.vocab_hash or domain.vocab_hash != tok.vocab_hash():
        raise ConfigError(
            "distributions were built with different tokenizers "
            f"(domain={domain.vocab_hash}, base={base.vocab_hash}, tok={tok.vocab_hash()})"
        )
    if domain.max_seq_len != base.max_seq_len:
        raise ConfigError(
            f"distributions were built with different max_seq_len "
            f"({domain.max_seq_len} vs {base.max_seq_len})"
        )
    marginal = cfg.mode == "marginal"
    d_counts = domain.seq_counts
    b_counts = base.seq_counts
    d_total = domain.word_total
    b_total = base.word_total
    small, other = (d_counts, b_counts) if len(d_counts) <= len(b_counts) else (b_counts, d_counts)

    out: list[AugmentationCandidate] = []
    for key in small:
        if len(key) < 2 or key not in other:
            continue
        cd = d_counts[key]
        cb = b_counts[key]
        if marginal:
            p = cd / d_total
            q = cb / b_total
        else:
            prefix = key[:-1]
            p = cd / d_counts[prefix]
            q = cb / b_counts[prefix]
        tokens = tok.token_strings(key)
        seq = SubwordSequence(ids=key, tokens=tokens)
        surface = seq.surface
        out.append(
            AugmentationCandidate(
                seq=seq,
                p_domain=p,
                p_base=q,
                score=p * math.log(p / q),
                domain_count=cd,
                base_count=cb,
                in_vocab=surface in tok.vocab,
            )
        )
    out.sort(key=_selection_order)
    return out


def _selection_order(c: AugmentationCandidate):
    return (-c.score, len(c.seq), c.surface)


def select_augmentations(
    candidates: Sequence[AugmentationCandidate],
    cfg: SelectionConfig,
) -> list[AugmentationCandidate]:
    """Walk candidates in score order and keep the first eta that qualify.

    A candidate qualifies when its length is within max_len, its domain
    count (and base count, when require_both) reaches f_min, and its
    surface is neither an existing vocabulary token nor already kept.
    Returns fewer than eta entries when the pool is exhausted.
    """
    selected: list[AugmentationCandidate] = []
    seen: set[str] = set()
    for cand in sorted(candidates, key=_selection_order):
        if len(selected) == cfg.eta:
            break
        if len(cand.seq) > cfg.max_len:
            continue
        if cand.domain_count < cfg.f_min:
            continue
        if cfg.require_both and cand.base_count < cfg.f_min:
            continue
        surface = cand.surface
        if cand.in_vocab or surface in seen:
            continue
        seen.add(surface)
        selected.append(cand)
    return selected


CANDIDATE_COLUMNS = (
    "rank",
    "surface",
    "token_ids",
    "score",
    "p_domain",
    "p_base",
    "domain_count",
    "base_count",
    "in_vocab",
)


def write_candidates_tsv(candidates: Sequence[AugmentationCandidate], path) -> None:
    """Write ranked candidates as UTF-8 TSV with '\\n' endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("#" + "\t".join(CANDIDATE_COLUMNS) + "\n")
        for rank, c in enumerate(candidates, 1):
            f.write(
                "\t".join(
                    (
                        str(rank),
                        c.surface,
                        ",".join(map(str, c.seq.ids)),
                        fmt_float(c.score),
                        fmt_float(c.p_domain),
                        fmt_float(c.p_base),
                        str(c.domain_count),
                        str(c.base_count),
                        "1" if c.in_vocab else "0",
                    )
                )
                + "\n"
            )


def read_candidates_tsv(path, tok: BpeTokenizer | None = None) -> list[AugmentationCandidate]:
    """Read candidates back; token strings come from ``tok`` when given,
    otherwise each sequence carries its surface as a single opaque string."""
    out: list[AugmentationCandidate] = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != len(CANDIDATE_COLUMNS):
                    raise DataError(
                        f"{path}:{lineno}: expected {len(CANDIDATE_COLUMNS)} columns, got {len(fields)}"
                    )
                ids = tuple(int(x) for x in fields[2].split(","))
                tokens = tok.token_strings(ids) if tok is not None else (fields[1],)
                out.append(
                    AugmentationCandidate(
                        seq=SubwordSequence(ids=ids, tokens=tokens),
                        p_domain=float(fields[4]),
                        p_base=float(fields[5]),
                        score=float(fields[3]),
                        domain_count=int(fields[6]),
                        base_count=int(fields[7]),
                        in_vocab=fields[8] == "1",
                    )
                )
    except OSError as exc:
        raise DataError(f"cannot read candidates file {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"malformed candidates file {path}: {exc}") from exc
    return out
