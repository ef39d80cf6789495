"""Command-line interface.

Subcommands mirror the pipeline stages (count, score, select, train-static,
init-embed) plus the end-to-end `augment` and the `stats` report. Exit
codes: 0 ok, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .counts import count_corpus, load_table, save_table
from .embed_init import (
    ContextualInputEmbeddings,
    MissingStaticVector,
    fit_projection,
    mean_init,
    project_init,
)
from .errors import ConfigError, DataError, PipelineError
from .pipeline import PipelineConfig, compression_stats, run_pipeline
from .selection import (
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
from .util import resolve_workers


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adaptok", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("count", help="count word types in a corpus")
    p.add_argument("--corpus", nargs="+", required=True, help="files, globs, or directories")
    p.add_argument("--out", required=True)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("score", help="score subtoken sequences by domain divergence")
    p.add_argument("--base-counts", required=True)
    p.add_argument("--domain-counts", required=True)
    p.add_argument("--tokenizer-dir", required=True)
    p.add_argument("--mode", choices=("conditional", "marginal"), default="conditional")
    p.add_argument("--lambda", dest="max_seq_len", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("select", help="pick the top augmentations from scored candidates")
    p.add_argument("--candidates", required=True)
    p.add_argument("--eta", type=int, default=10000)
    p.add_argument("--f-min", type=int, default=20)
    p.add_argument("--max-len", type=int, default=10)
    both = p.add_mutually_exclusive_group()
    both.add_argument("--require-both", dest="require_both", action="store_true", default=True)
    both.add_argument("--no-require-both", dest="require_both", action="store_false")
    p.add_argument("--out", default=None, help="write surfaces here (default: stdout)")
    p.add_argument("--tsv-out", default=None, help="also write the selected rows as TSV")

    p = sub.add_parser("train-static", help="train skip-gram embeddings on a tokenized corpus")
    p.add_argument("--corpus", nargs="+", required=True)
    p.add_argument("--tokenizer-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=768)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--min-count", type=int, default=100)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--sample", type=float, default=1e-5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("init-embed", help="initialize input vectors for selected tokens")
    p.add_argument("--method", choices=("mean", "proj"), required=True)
    p.add_argument("--base-embeddings", required=True, help="input embedding table, word2vec text")
    p.add_argument("--candidates", required=True, help="selected candidates TSV")
    p.add_argument("--tokenizer-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--x-base", default=None)
    p.add_argument("--x-domain", default=None)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--fit", choices=("closed", "sgd"), default="closed")

    p = sub.add_parser("augment", help="run the whole pipeline and emit a bundle")
    p.add_argument("--base-corpus", nargs="+", default=None)
    p.add_argument("--domain-corpus", nargs="+", default=None)
    p.add_argument("--base-counts", default=None)
    p.add_argument("--domain-counts", default=None)
    p.add_argument("--tokenizer-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--base-embeddings", required=True)
    p.add_argument("--method", choices=("mean", "proj"), default="mean")
    p.add_argument("--eta", type=int, default=10000)
    p.add_argument("--f-min", type=int, default=20)
    p.add_argument("--lambda", dest="max_seq_len", type=int, default=10)
    p.add_argument("--max-len", type=int, default=10)
    p.add_argument("--mode", choices=("conditional", "marginal"), default="conditional")
    both = p.add_mutually_exclusive_group()
    both.add_argument("--require-both", dest="require_both", action="store_true", default=True)
    both.add_argument("--no-require-both", dest="require_both", action="store_false")
    p.add_argument("--min-count", type=int, default=1, help="unigram count floor")
    p.add_argument("--x-base", default=None)
    p.add_argument("--x-domain", default=None)
    p.add_argument("--dim", type=int, default=768)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--static-min-count", type=int, default=100)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--sample", type=float, default=1e-5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--fit", choices=("closed", "sgd"), default="closed")
    p.add_argument("--source-model-id", default="")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("stats", help="tokens/word before vs after augmentation")
    p.add_argument("--corpus", nargs="+", required=True)
    p.add_argument("--tokenizer-dir", required=True, help="augmented tokenizer directory")
    p.add_argument("--added", default=None, help="added surfaces file when the dir is a base tokenizer")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.__cause__, ConfigError) else 3


def _dispatch(args) -> int:
    if args.cmd == "count":
        table = count_corpus(
            args.corpus, min_count=args.min_count, workers=resolve_workers(args.workers)
        )
        save_table(table, args.out)
        print(f"{len(table.counts)} word types, {table.total_tokens} tokens -> {args.out}")
        return 0

    if args.cmd == "score":
        tok = load_tokenizer_dir(args.tokenizer_dir)
        workers = resolve_workers(args.workers)
        base = load_table(args.base_counts, corpus_id="base")
        domain = load_table(args.domain_counts, corpus_id="domain")
        cfg = SelectionConfig(mode=args.mode)
        dist_base = build_sequence_distribution(base, tok, args.max_seq_len, workers=workers)
        dist_domain = build_sequence_distribution(domain, tok, args.max_seq_len, workers=workers)
        cands = score_candidates(dist_domain, dist_base, tok, cfg)
        write_candidates_tsv(cands, args.out)
        print(f"{len(cands)} candidates -> {args.out}")
        return 0

    if args.cmd == "select":
        cfg = SelectionConfig(
            eta=args.eta, f_min=args.f_min, max_len=args.max_len, require_both=args.require_both
        )
        cands = read_candidates_tsv(args.candidates)
        selected = select_augmentations(cands, cfg)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as f:
                for c in selected:
                    f.write(c.surface + "\n")
        else:
            for c in selected:
                print(c.surface)
        if args.tsv_out:
            write_candidates_tsv(selected, args.tsv_out)
        print(f"selected {len(selected)} of {args.eta} requested", file=sys.stderr)
        return 0

    if args.cmd == "train-static":
        tok = load_tokenizer_dir(args.tokenizer_dir)
        from .counts import resolve_corpus_paths

        paths = resolve_corpus_paths(args.corpus)
        cfg = SgnsConfig(
            dim=args.dim,
            window=args.window,
            min_count=args.min_count,
            epochs=args.epochs,
            sample=args.sample,
            negatives=args.negatives,
            seed=args.seed,
            workers=resolve_workers(args.workers),
        )
        emb = train_sgns(TokenizedCorpus(paths, tok), cfg)
        save_word2vec_text(emb, args.out)
        print(f"{len(emb.rows)} vectors (dim {emb.dim}) -> {args.out}")
        return 0

    if args.cmd == "init-embed":
        return _init_embed(args)

    if args.cmd == "augment":
        cfg = PipelineConfig(
            tokenizer_dir=args.tokenizer_dir,
            out_dir=args.out_dir,
            base_corpus=args.base_corpus,
            domain_corpus=args.domain_corpus,
            base_counts=args.base_counts,
            domain_counts=args.domain_counts,
            min_count=args.min_count,
            max_seq_len=args.max_seq_len,
            selection=SelectionConfig(
                eta=args.eta,
                f_min=args.f_min,
                max_len=args.max_len,
                mode=args.mode,
                require_both=args.require_both,
            ),
            init_method=args.method,
            base_embeddings=args.base_embeddings,
            source_model_id=args.source_model_id,
            x_base_path=args.x_base,
            x_domain_path=args.x_domain,
            sgns=SgnsConfig(
                dim=args.dim,
                window=args.window,
                min_count=args.static_min_count,
                epochs=args.epochs,
                sample=args.sample,
                negatives=args.negatives,
                seed=args.seed,
            ),
            fit_method="closed_form" if args.fit == "closed" else "gradient_descent",
            ridge=args.ridge,
            cache_dir=args.cache_dir,
            workers=args.workers,
        )
        bundle = run_pipeline(cfg)
        print(
            f"bundle -> {args.out_dir}: {len(bundle.added_surfaces)} added tokens, "
            f"parameter delta {bundle.manifest['parameter_delta']}"
        )
        return 0

    if args.cmd == "stats":
        aug_tok = load_tokenizer_dir(args.tokenizer_dir)
        if args.added:
            with open(args.added, "r", encoding="utf-8") as f:
                surfaces = [line for line in f.read().split("\n") if line]
            base_tok = aug_tok
            aug_tok = base_tok.add_tokens(surfaces)
        else:
            if not aug_tok.added_surfaces:
                raise ConfigError(
                    "tokenizer dir has no added_tokens.txt; pass --added with the surfaces file"
                )
            base_vocab = {
                t: i for t, i in aug_tok.vocab.items() if t not in set(aug_tok.added_surfaces)
            }
            base_tok = BpeTokenizer(base_vocab, aug_tok.merges)
        report = compression_stats(args.corpus, base_tok, aug_tok)
        print(f"words:                {report['words']}")
        print(f"base tokens/word:     {report['base_tokens_per_word']:.6f}")
        print(f"augmented tokens/word: {report['augmented_tokens_per_word']:.6f}")
        saved = report["base_tokens"] - report["augmented_tokens"]
        pct = 100.0 * saved / report["base_tokens"] if report["base_tokens"] else 0.0
        print(f"tokens saved:         {saved} ({pct:.2f}%)")
        return 0

    raise ConfigError(f"unknown command {args.cmd!r}")


def _init_embed(args) -> int:
    if args.method == "proj" and (not args.x_base or not args.x_domain):
        raise ConfigError("proj init requires --x-base and --x-domain")
    tok = load_tokenizer_dir(args.tokenizer_dir)
    c_base = ContextualInputEmbeddings.from_word2vec_text(args.base_embeddings)
    cands = read_candidates_tsv(args.candidates, tok)
    rows: dict[str, np.ndarray] = {}
    fallbacks = 0
    if args.method == "proj":
        x_base = load_word2vec_text(args.x_base)
        x_domain = load_word2vec_text(args.x_domain)
        fit_method = "closed_form" if args.fit == "closed" else "gradient_descent"
        pmap = fit_projection(x_base, c_base, method=fit_method, ridge=args.ridge)
        for c in cands:
            try:
                rows[c.surface] = project_init(c.surface, x_domain, pmap).astype(np.float32)
            except MissingStaticVector:
                rows[c.surface] = mean_init(c.seq, c_base)
                fallbacks += 1
    else:
        for c in cands:
            rows[c.surface] = mean_init(c.seq, c_base)
    emb = EmbeddingMatrix(dim=c_base.dim, rows=rows, provenance="trained")
    save_word2vec_text(emb, args.out)
    msg = f"{len(rows)} vectors (dim {c_base.dim}) -> {args.out}"
    if fallbacks:
        msg += f" ({fallbacks} mean fallbacks)"
    print(msg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
