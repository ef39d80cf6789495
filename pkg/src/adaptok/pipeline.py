"""End-to-end run orchestration and bundle output.

A run counts both corpora, builds sequence distributions, scores and
selects augmentations, optionally trains static embeddings, initializes
vectors for the new tokens, and writes everything into a bundle directory:

    vocab.json             augmented vocabulary (original ids unchanged)
    merges.txt             copied from the base tokenizer
    added_tokens.txt       one surface per line, selection order
    candidates.tsv         the selected sequences with scores and counts
    new_token_embeddings.txt  word2vec text, rows ordered as added_tokens.txt
    manifest.json          every parameter and provenance fact of the run

Bundles are written to a temp directory and swapped in atomically, so a
failed run never leaves a partial bundle. Stage outputs are cached by
content digest when a cache directory is configured.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .counts import count_corpus, load_table, resolve_corpus_paths, save_table
from .embed_init import (
    ContextualInputEmbeddings,
    MissingStaticVector,
    fit_projection,
    mean_init,
    project_init,
)
from .errors import ConfigError, PipelineError
from .selection import (
    AugmentationCandidate,
    SelectionConfig,
    read_candidates_tsv,
    score_candidates,
    select_augmentations,
    write_candidates_tsv,
)
from .sequences import build_sequence_distribution
from .static_embed import (
    EmbeddingMatrix,
    SgnsConfig,
    TokenizedCorpus,
    load_word2vec_text,
    save_word2vec_text,
    train_sgns,
)
from .tokenizer import BpeTokenizer, load_tokenizer_dir
from .util import digest_paths, resolve_workers, sha256_file

logger = logging.getLogger("adaptok")

INIT_METHODS = ("mean", "proj")


@dataclass
class AugmentationBundle:
    added_surfaces: list[str]
    embeddings: EmbeddingMatrix
    manifest: dict


@dataclass
class PipelineConfig:
    tokenizer_dir: str
    out_dir: str
    base_corpus: Sequence[str] | str | None = None
    domain_corpus: Sequence[str] | str | None = None
    base_counts: str | None = None
    domain_counts: str | None = None
    min_count: int = 1
    max_seq_len: int = 10
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    init_method: str = "mean"
    base_embeddings: str | None = None
    source_model_id: str = ""
    x_base_path: str | None = None
    x_domain_path: str | None = None
    sgns: SgnsConfig = field(default_factory=SgnsConfig)
    fit_method: str = "closed_form"
    ridge: float = 1e-6
    cache_dir: str | None = None
    workers: int | None = None


def emit_bundle(
    tok: BpeTokenizer,
    selection: Sequence[AugmentationCandidate],
    vectors: EmbeddingMatrix,
    out_dir,
    manifest_fields: dict | None = None,
) -> AugmentationBundle:
    """Write a bundle directory; returns the in-memory equivalent.

    ``tok`` must already contain the selected surfaces (selection order
    defines their ids) and ``vectors`` must cover every selected surface.
    """
    surfaces = [c.surface for c in selection]
    missing = [s for s in surfaces if s not in vectors.rows]
    if missing:
        raise ConfigError(f"vectors missing for {len(missing)} selected surfaces, e.g. {missing[:3]}")
    absent = [s for s in surfaces if s not in tok.vocab]
    if absent:
        raise ConfigError(f"tokenizer lacks {len(absent)} selected surfaces, e.g. {absent[:3]}")
    ordered_rows = {s: np.asarray(vectors.rows[s], dtype=np.float32) for s in surfaces}
    embeddings = EmbeddingMatrix(dim=vectors.dim, rows=ordered_rows, provenance=vectors.provenance)

    manifest = dict(manifest_fields or {})
    manifest.setdefault("tool", {"name": "adaptok", "version": __version__})
    manifest["parameter_delta"] = len(surfaces) * embeddings.dim
    selection_info = dict(manifest.get("selection", {}))
    selection_info["selected"] = len(surfaces)
    manifest["selection"] = selection_info

    out = Path(out_dir)
    tmp = out.parent / f".{out.name}.tmp{os.getpid()}"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    try:
        tok.save(tmp)
        write_candidates_tsv(selection, tmp / "candidates.tsv")
        save_word2vec_text(embeddings, tmp / "new_token_embeddings.txt")
        with open(tmp / "manifest.json", "w", encoding="utf-8", newline="\n") as f:
            json.dump(manifest, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
        if out.exists():
            shutil.rmtree(out)
        os.replace(tmp, out)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp)
    # round-trip through the serialized form so the returned value equals a reload
    manifest = json.loads(json.dumps(manifest, sort_keys=True, ensure_ascii=False))
    return AugmentationBundle(added_surfaces=surfaces, embeddings=embeddings, manifest=manifest)


def load_bundle(bundle_dir) -> AugmentationBundle:
    d = Path(bundle_dir)
    surfaces = [
        line for line in (d / "added_tokens.txt").read_text(encoding="utf-8").split("\n") if line
    ]
    embeddings = load_word2vec_text(d / "new_token_embeddings.txt")
    with open(d / "manifest.json", "r", encoding="utf-8") as f:
        manifest = json.load(f)
    return AugmentationBundle(added_surfaces=surfaces, embeddings=embeddings, manifest=manifest)


def run_pipeline(cfg: PipelineConfig) -> AugmentationBundle:
    """Execute every stage of a run and emit the bundle.

    Precomputed unigram tables are honored when given; otherwise corpora
    are counted (and cached when a cache directory is set). Static
    embedding training only happens for the projection method and only
    when no trained vectors were supplied.
    """
    workers = resolve_workers(cfg.workers)
    if cfg.init_method not in INIT_METHODS:
        raise ConfigError(f"init_method must be one of {INIT_METHODS}, got {cfg.init_method!r}")
    if cfg.base_embeddings is None:
        raise ConfigError("base_embeddings (input embedding table) is required")
    cache = _Cache(cfg.cache_dir)

    tok = _stage("load-tokenizer", load_tokenizer_dir, cfg.tokenizer_dir)

    base_table, base_digest = _stage(
        "count-base", _load_or_count, cfg.base_counts, cfg.base_corpus, "base", cfg.min_count, workers, cache
    )
    domain_table, domain_digest = _stage(
        "count-domain", _load_or_count, cfg.domain_counts, cfg.domain_corpus, "domain", cfg.min_count, workers, cache
    )

    def _build_dists():
        dom = build_sequence_distribution(domain_table, tok, cfg.max_seq_len, workers=workers)
        bas = build_sequence_distribution(base_table, tok, cfg.max_seq_len, workers=workers)
        return dom, bas

    def _score():
        key = f"cand-{base_digest}-{domain_digest}-{tok.vocab_hash()}-l{cfg.max_seq_len}-{cfg.selection.mode}"
        cached = cache.path(key, "tsv")
        if cached is not None and cached.exists():
            logger.info("reusing cached candidates %s", cached)
            return read_candidates_tsv(cached, tok)
        dist_domain, dist_base = _build_dists()
        cands = score_candidates(dist_domain, dist_base, tok, cfg.selection)
        if cached is not None:
            write_candidates_tsv(cands, cached)
        return cands

    candidates = _stage("score", _score)
    selection = _stage("select", select_augmentations, candidates, cfg.selection)
    logger.info("selected %d of %d requested augmentations", len(selection), cfg.selection.eta)

    aug_tok = _stage("augment-tokenizer", tok.add_tokens, [c.surface for c in selection])

    c_base = _stage(
        "load-input-embeddings",
        ContextualInputEmbeddings.from_word2vec_text,
        cfg.base_embeddings,
        cfg.source_model_id,
    )

    x_base = x_domain = None
    if cfg.init_method == "proj":
        x_base, x_domain = _stage(
            "static-embeddings", _static_tables, cfg, aug_tok, base_digest, domain_digest, cache
        )

    vectors, fallbacks = _stage(
        "initialize-embeddings", _initialize, cfg, selection, c_base, x_base, x_domain
    )

    manifest = _manifest(cfg, tok, aug_tok, base_table, domain_table, base_digest, domain_digest,
                         candidates, selection, c_base, fallbacks)
    return _stage("emit", emit_bundle, aug_tok, selection, vectors, cfg.out_dir, manifest)


def compression_stats(corpus, base_tok: BpeTokenizer, aug_tok: BpeTokenizer) -> dict:
    """Tokens-per-word over a corpus under the base and augmented tokenizers."""
    paths = resolve_corpus_paths(corpus)
    words = 0
    base_tokens = 0
    aug_tokens = 0
    cache: dict[str, tuple[int, int]] = {}
    for sent in TokenizedCorpus(paths, base_tok)._lines():
        for word in sent.split():
            hit = cache.get(word)
            if hit is None:
                hit = (len(base_tok.encode_word(word).ids), len(aug_tok.encode_word(word).ids))
                cache[word] = hit
            words += 1
            base_tokens += hit[0]
            aug_tokens += hit[1]
    return {
        "words": words,
        "base_tokens": base_tokens,
        "augmented_tokens": aug_tokens,
        "base_tokens_per_word": base_tokens / words if words else 0.0,
        "augmented_tokens_per_word": aug_tokens / words if words else 0.0,
    }


# ---------------------------------------------------------------------------
# stage helpers
# ---------------------------------------------------------------------------

def _stage(name: str, fn, *args):
    try:
        return fn(*args)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


class _Cache:
    def __init__(self, cache_dir):
        self.dir = Path(cache_dir) if cache_dir else None
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def path(self, key: str, suffix: str) -> Path | None:
        if self.dir is None:
            return None
        return self.dir / f"{key}.{suffix}"


def _load_or_count(counts_path, corpus, corpus_id, min_count, workers, cache):
    if counts_path is not None:
        table = load_table(counts_path, corpus_id=corpus_id)
        return table, sha256_file(counts_path)[:16]
    if corpus is None:
        raise ConfigError(f"either a {corpus_id} corpus or a precomputed counts file is required")
    paths = resolve_corpus_paths(corpus)
    digest = digest_paths(paths)
    cached = cache.path(f"counts-{corpus_id}-{digest}-mc{min_count}", "tsv")
    if cached is not None and cached.exists():
        logger.info("reusing cached %s counts %s", corpus_id, cached)
        return load_table(cached, corpus_id=corpus_id), digest
    table = count_corpus(paths, min_count=min_count, corpus_id=corpus_id, workers=workers)
    if cached is not None:
        save_table(table, cached)
    return table, digest


def _static_tables(cfg: PipelineConfig, aug_tok, base_digest, domain_digest, cache):
    def one(path, corpus, digest, label):
        if path is not None:
            return load_word2vec_text(path)
        if corpus is None:
            raise ConfigError(
                f"projection init needs either --x-{label} vectors or the {label} corpus to train on"
            )
        key = (
            f"sgns-{label}-{digest}-{aug_tok.vocab_hash()}-d{cfg.sgns.dim}w{cfg.sgns.window}"
            f"m{cfg.sgns.min_count}e{cfg.sgns.epochs}s{cfg.sgns.sample}n{cfg.sgns.negatives}"
            f"seed{cfg.sgns.seed}"
        )
        cached = cache.path(key, "txt")
        if cached is not None and cached.exists():
            logger.info("reusing cached %s static embeddings %s", label, cached)
            return load_word2vec_text(cached)
        corpus_paths = resolve_corpus_paths(corpus)
        logger.info("training %s static embeddings (dim=%d)", label, cfg.sgns.dim)
        emb = train_sgns(TokenizedCorpus(corpus_paths, aug_tok), cfg.sgns)
        if cached is not None:
            save_word2vec_text(emb, cached)
        return emb

    x_base = one(cfg.x_base_path, cfg.base_corpus, base_digest, "base")
    x_domain = one(cfg.x_domain_path, cfg.domain_corpus, domain_digest, "domain")
    return x_base, x_domain


def _initialize(cfg, selection, c_base, x_base, x_domain):
    fallbacks: list[str] = []
    rows: dict[str, np.ndarray] = {}
    pmap = None
    if cfg.init_method == "proj":
        pmap = fit_projection(x_base, c_base, method=cfg.fit_method, ridge=cfg.ridge)
        logger.info(
            "fitted projection on %d shared tokens (residual %.4g)",
            len(set(x_base.rows) & set(c_base.rows)),
            pmap.fit_residual,
        )
    for cand in selection:
        surface = cand.surface
        if pmap is None:
            rows[surface] = mean_init(cand.seq, c_base)
        else:
            try:
                rows[surface] = project_init(surface, x_domain, pmap).astype(np.float32)
            except MissingStaticVector:
                rows[surface] = mean_init(cand.seq, c_base)
                fallbacks.append(surface)
    provenance = "trained" if cfg.init_method == "proj" else "ingested"
    return EmbeddingMatrix(dim=c_base.dim, rows=rows, provenance=provenance), fallbacks


def _manifest(cfg, tok, aug_tok, base_table, domain_table, base_digest, domain_digest,
              candidates, selection, c_base, fallbacks) -> dict:
    sel = cfg.selection
    return {
        "config": {
            "lambda": cfg.max_seq_len,
            "f_min": sel.f_min,
            "eta": sel.eta,
            "max_len": sel.max_len,
            "mode": sel.mode,
            "require_both": sel.require_both,
            "min_count": cfg.min_count,
            "log_base": "e",
            "tie_break": "descending score, then shorter sequence, then lexicographic surface",
            "init_method": cfg.init_method,
            "ridge": cfg.ridge,
            "fit_method": cfg.fit_method,
            "sgns": (
                {
                    "dim": cfg.sgns.dim,
                    "window": cfg.sgns.window,
                    "min_count": cfg.sgns.min_count,
                    "epochs": cfg.sgns.epochs,
                    "sample": cfg.sgns.sample,
                    "negatives": cfg.sgns.negatives,
                    "alpha": cfg.sgns.alpha,
                    "min_alpha": cfg.sgns.min_alpha,
                    "seed": cfg.sgns.seed,
                }
                if cfg.init_method == "proj"
                else None
            ),
        },
        "corpora": {
            "base": {"digest": base_digest, "word_tokens": base_table.total_tokens,
                     "word_types": len(base_table.counts)},
            "domain": {"digest": domain_digest, "word_tokens": domain_table.total_tokens,
                       "word_types": len(domain_table.counts)},
        },
        "tokenizer": {
            "base_vocab_size": len(tok),
            "augmented_vocab_size": len(aug_tok),
            "base_vocab_hash": tok.vocab_hash(),
        },
        "selection": {
            "candidates_scored": len(candidates),
            "requested": sel.eta,
            "exhausted": len(selection) < sel.eta,
        },
        "embedding": {
            "dim": c_base.dim,
            "source_model_id": c_base.source_model_id,
            "fallbacks": fallbacks,
        },
    }
