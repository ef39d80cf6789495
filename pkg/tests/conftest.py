from __future__ import annotations

import random
from pathlib import Path

import pytest

from adaptok.tokenizer import BpeTokenizer, load_tokenizer

DATA_DIR = Path(__file__).parent / "data"


def char_tokenizer(chars: str = "abcd") -> BpeTokenizer:
    """Toy tokenizer where every listed character is its own token."""
    return BpeTokenizer({c: i for i, c in enumerate(chars)}, [])


def random_toy_tokenizer(rng: random.Random, n_chars: int = 4, n_merges: int = 3) -> BpeTokenizer:
    """A small consistent tokenizer: an alphabet plus random valid merges."""
    alphabet = "abcdefghij"[:n_chars]
    vocab = {c: i for i, c in enumerate(alphabet)}
    merges = []
    entries = list(alphabet)
    for _ in range(n_merges):
        left = rng.choice(entries)
        right = rng.choice(entries)
        result = left + right
        if result in vocab or len(result) > 6:
            continue
        vocab[result] = len(vocab)
        merges.append((left, right))
        entries.append(result)
    return BpeTokenizer(vocab, merges)


def random_words_text(rng: random.Random, alphabet: str, n_words: int, max_len: int = 6) -> str:
    words = []
    for _ in range(n_words):
        k = rng.randint(1, max_len)
        words.append("".join(rng.choice(alphabet) for _ in range(k)))
    # break into lines of ~8 words so files have realistic shape
    lines = [" ".join(words[i : i + 8]) for i in range(0, len(words), 8)]
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def gpt2_tok() -> BpeTokenizer:
    return load_tokenizer(DATA_DIR / "gpt2" / "vocab.json", DATA_DIR / "gpt2" / "merges.txt")


@pytest.fixture
def char_tok() -> BpeTokenizer:
    return char_tokenizer()


def toy_setup(tmp_path: Path, seed: int = 0, n_words: int = 400, dim: int = 8):
    """Write a toy tokenizer dir, base/domain corpora, and an input-embedding
    table to disk; returns (tok, paths dict)."""
    import numpy as np

    from adaptok.static_embed import EmbeddingMatrix, save_word2vec_text

    rng = random.Random(seed)
    tok = random_toy_tokenizer(rng, n_chars=4, n_merges=3)
    tok_dir = tmp_path / "tok"
    tok.save(tok_dir)
    (tok_dir / "added_tokens.txt").unlink()  # plain base tokenizer directory

    base_file = tmp_path / "base.txt"
    domain_file = tmp_path / "domain.txt"
    base_file.write_text(random_words_text(rng, "abcd", n_words), encoding="utf-8")
    # domain text reuses a few "technical" words heavily so selection has signal
    jargon = ["".join(rng.choice("abcd") for _ in range(rng.randint(3, 6))) for _ in range(5)]
    domain_words = []
    for _ in range(n_words):
        if rng.random() < 0.5:
            domain_words.append(rng.choice(jargon))
        else:
            domain_words.append("".join(rng.choice("abcd") for _ in range(rng.randint(1, 6))))
    lines = [" ".join(domain_words[i : i + 8]) for i in range(0, len(domain_words), 8)]
    domain_file.write_text("\n".join(lines) + "\n", encoding="utf-8")

    nprng = np.random.RandomState(seed)
    emb = EmbeddingMatrix(
        dim=dim,
        rows={t: nprng.randn(dim).astype("float32") for t in tok.vocab},
    )
    emb_file = tmp_path / "input_embeddings.txt"
    save_word2vec_text(emb, emb_file)
    return tok, {
        "tok_dir": tok_dir,
        "base": base_file,
        "domain": domain_file,
        "embeddings": emb_file,
    }
