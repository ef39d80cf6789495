from __future__ import annotations

import gzip
import random

import numpy as np
import pytest

from adaptok.errors import ConfigError, DataError
from adaptok.static_embed import (
    EmbeddingMatrix,
    SgnsConfig,
    TokenizedCorpus,
    cosine,
    load_word2vec_text,
    save_word2vec_text,
    tokenize_for_static,
    train_sgns,
)
from adaptok.tokenizer import UNICODE_TO_BYTE

from conftest import random_toy_tokenizer, random_words_text


class TestTokenizeForStatic:
    def test_added_surface_is_one_unit(self, gpt2_tok):
        aug = gpt2_tok.add_tokens(["incubated"])
        sents = list(tokenize_for_static(["incubated cells"], aug))
        assert sents == [["incubated"] + list(aug.encode_word("cells").tokens)]

    def test_empty_document(self, gpt2_tok):
        assert list(tokenize_for_static([""], gpt2_tok)) == [[]]

    def test_round_trip_of_non_whitespace_content(self, gpt2_tok):
        rng = random.Random(11)
        docs = [
            " ".join(rng.choice(["oboe", "obama", "it's", "phosphorylation", "Theorem"])
                     for _ in range(rng.randint(1, 8)))
            for _ in range(20)
        ]
        for doc, sent in zip(docs, tokenize_for_static(docs, gpt2_tok)):
            symbols = "".join(sent)
            raw = bytes(UNICODE_TO_BYTE[ch] for ch in symbols)
            assert raw.decode("utf-8") == doc.replace(" ", "")

    def test_base_and_augmented_differ_only_at_matches(self, gpt2_tok):
        aug = gpt2_tok.add_tokens(["incubated"])
        docs = ["incubated oboe", "obama oboe"]
        base_sents = list(tokenize_for_static(docs, gpt2_tok))
        aug_sents = list(tokenize_for_static(docs, aug))
        assert base_sents[1] == aug_sents[1]  # no added surface involved
        assert base_sents[0] != aug_sents[0]


class TestWord2VecText:
    def test_minimal_file(self, tmp_path):
        (tmp_path / "v.txt").write_text("2 3\na 1 0 0\nb 0 1 0\n")
        emb = load_word2vec_text(tmp_path / "v.txt")
        assert emb.dim == 3
        assert set(emb.rows) == {"a", "b"}
        assert emb.rows["a"].tolist() == [1.0, 0.0, 0.0]

    def test_declared_rows_must_match(self, tmp_path):
        (tmp_path / "v.txt").write_text("5 3\na 1 0 0\nb 0 1 0\nc 0 0 1\nd 1 1 1\n")
        with pytest.raises(DataError, match="declares 5 rows"):
            load_word2vec_text(tmp_path / "v.txt")

    def test_wrong_field_count(self, tmp_path):
        (tmp_path / "v.txt").write_text("1 3\na 1 0\n")
        with pytest.raises(DataError, match="expected token"):
            load_word2vec_text(tmp_path / "v.txt")

    def test_non_finite_rejected(self, tmp_path):
        (tmp_path / "v.txt").write_text("1 2\na nan 0\n")
        with pytest.raises(DataError, match="non-finite"):
            load_word2vec_text(tmp_path / "v.txt")

    def test_duplicate_token_rejected(self, tmp_path):
        (tmp_path / "v.txt").write_text("2 1\na 1\na 2\n")
        with pytest.raises(DataError, match="duplicate"):
            load_word2vec_text(tmp_path / "v.txt")

    def test_bad_header(self, tmp_path):
        (tmp_path / "v.txt").write_text("nope\na 1\n")
        with pytest.raises(DataError, match="header"):
            load_word2vec_text(tmp_path / "v.txt")

    def test_save_load_round_trip_exact(self, tmp_path):
        rng = np.random.RandomState(0)
        rows = {f"t{i}": rng.randn(7).astype(np.float32) for i in range(20)}
        emb = EmbeddingMatrix(dim=7, rows=rows)
        save_word2vec_text(emb, tmp_path / "v.txt")
        back = load_word2vec_text(tmp_path / "v.txt")
        assert back.dim == 7
        assert list(back.rows) == list(rows)
        for t in rows:
            assert np.array_equal(back.rows[t], rows[t])

    def test_gzip_round_trip(self, tmp_path):
        emb = EmbeddingMatrix(dim=2, rows={"a": np.array([0.5, -1.25], dtype=np.float32)})
        save_word2vec_text(emb, tmp_path / "v.txt.gz")
        with gzip.open(tmp_path / "v.txt.gz", "rt") as f:
            assert f.readline() == "1 2\n"
        back = load_word2vec_text(tmp_path / "v.txt.gz")
        assert np.array_equal(back.rows["a"], emb.rows["a"])


class TestTrainSgns:
    def test_vector_shape_follows_config(self):
        sents = [["a", "b"]] * 30
        emb = train_sgns(sents, SgnsConfig(dim=16, min_count=1, epochs=1, sample=0))
        assert emb.dim == 16
        assert all(v.shape == (16,) for v in emb.rows.values())
        assert emb.provenance == "trained"

    def test_min_count_threshold(self):
        sents = [["x", "y"]] * 60 + [["z", "x"]] * 45  # x:105, y:60, z:45
        emb = train_sgns(sents, SgnsConfig(dim=4, min_count=100, epochs=1))
        assert set(emb.rows) == {"x"}

    def test_min_count_monotone(self):
        rng = random.Random(0)
        sents = [random_words_text(rng, "abc", 10).split() for _ in range(30)]
        low = train_sgns(sents, SgnsConfig(dim=4, min_count=2, epochs=1))
        high = train_sgns(sents, SgnsConfig(dim=4, min_count=10, epochs=1))
        assert set(high.rows) <= set(low.rows)

    def test_empty_vocabulary_rejected(self):
        with pytest.raises(DataError, match="min_count"):
            train_sgns([["a", "b"]], SgnsConfig(dim=4, min_count=100, epochs=1))

    def test_deterministic_with_fixed_seed(self):
        sents = [["a", "b", "c", "a", "b"]] * 40
        cfg = SgnsConfig(dim=8, min_count=1, epochs=2, seed=13)
        emb1 = train_sgns(sents, cfg)
        emb2 = train_sgns(sents, cfg)
        assert list(emb1.rows) == list(emb2.rows)
        for t in emb1.rows:
            assert np.array_equal(emb1.rows[t], emb2.rows[t])

    def test_seed_changes_vectors(self):
        sents = [["a", "b", "c"]] * 40
        emb1 = train_sgns(sents, SgnsConfig(dim=8, min_count=1, epochs=1, seed=1))
        emb2 = train_sgns(sents, SgnsConfig(dim=8, min_count=1, epochs=1, seed=2))
        assert any(not np.array_equal(emb1.rows[t], emb2.rows[t]) for t in emb1.rows)

    def test_cooccurring_tokens_end_up_closer(self):
        sentences = [["a", "b"] * 500, ["c", "e"], ["c", "e"], ["c", "e"]]
        cfg = SgnsConfig(dim=8, window=5, min_count=1, epochs=3, sample=0, seed=7)
        emb = train_sgns(sentences, cfg)
        assert cosine(emb.rows["a"], emb.rows["b"]) > cosine(emb.rows["a"], emb.rows["c"])

    def test_subsampling_thins_frequent_tokens(self):
        # with sample set, results differ from the unsampled run
        sents = [["a", "b", "c"] * 20] * 20
        base = train_sgns(sents, SgnsConfig(dim=4, min_count=1, epochs=1, sample=0, seed=3))
        sub = train_sgns(sents, SgnsConfig(dim=4, min_count=1, epochs=1, sample=1e-3, seed=3))
        assert any(not np.array_equal(base.rows[t], sub.rows[t]) for t in base.rows)

    def test_hogwild_workers_smoke(self):
        sents = [["a", "b", "c", "d"] * 5] * 40
        emb = train_sgns(sents, SgnsConfig(dim=4, min_count=1, epochs=1, workers=2))
        assert set(emb.rows) == {"a", "b", "c", "d"}
        assert all(np.all(np.isfinite(v)) for v in emb.rows.values())

    def test_invalid_config_rejected(self):
        with pytest.raises(ConfigError):
            SgnsConfig(dim=0)


class TestTokenizedCorpus:
    def test_reiterable_over_files(self, tmp_path):
        rng = random.Random(2)
        tok = random_toy_tokenizer(rng, n_chars=4, n_merges=2)
        (tmp_path / "c.txt").write_text(random_words_text(rng, "abcd", 50))
        corpus = TokenizedCorpus([tmp_path / "c.txt"], tok)
        first = list(corpus)
        second = list(corpus)
        assert first == second
        assert sum(len(s) for s in first) > 0

    def test_trains_end_to_end(self, tmp_path):
        rng = random.Random(4)
        tok = random_toy_tokenizer(rng, n_chars=3, n_merges=1)
        (tmp_path / "c.txt").write_text(random_words_text(rng, "abc", 200))
        emb = train_sgns(
            TokenizedCorpus([tmp_path / "c.txt"], tok),
            SgnsConfig(dim=4, min_count=1, epochs=1),
        )
        assert len(emb.rows) >= 2
