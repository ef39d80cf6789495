from __future__ import annotations

import gzip
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import bruteforce
from adaptok.counts import (
    UnigramTable,
    count_corpus,
    count_unigrams,
    load_table,
    merge_tables,
    save_table,
)
from adaptok.errors import ConfigError, DataError


def test_direct_count():
    table = count_unigrams(["abc abc ab"])
    assert table.counts == {"abc": 2, "ab": 1}
    assert table.total_tokens == 3


def test_empty_corpus():
    table = count_unigrams([""])
    assert table.counts == {}
    assert table.total_tokens == 0


def test_min_count_drops_entries_but_keeps_total():
    table = count_unigrams(["a a a b"], min_count=2)
    assert table.counts == {"a": 3}
    assert table.total_tokens == 4


def test_contractions_stay_whole():
    table = count_unigrams(["it's a it's"])
    assert table.counts["it's"] == 2


def test_case_is_preserved():
    table = count_unigrams(["Theorem theorem"])
    assert table.counts == {"Theorem": 1, "theorem": 1}


def test_unicode_whitespace_separates():
    table = count_unigrams(["x y z"])
    assert table.counts == {"x": 1, "y": 1, "z": 1}


class TestMerge:
    def test_pointwise_sum(self):
        a = UnigramTable({"a": 1}, 1, "c")
        b = UnigramTable({"a": 2}, 2, "c")
        assert merge_tables([a, b]).counts == {"a": 3}

    def test_identity_element(self):
        x = UnigramTable({"a": 5, "b": 1}, 6, "c")
        empty = UnigramTable({}, 0, "c")
        merged = merge_tables([x, empty])
        assert merged.counts == x.counts
        assert merged.total_tokens == x.total_tokens

    def test_mixed_corpus_ids_rejected(self):
        with pytest.raises(ConfigError, match="different corpora"):
            merge_tables([UnigramTable({}, 0, "base"), UnigramTable({}, 0, "domain")])

    def test_empty_list_rejected(self):
        with pytest.raises(ConfigError):
            merge_tables([])

    def test_order_independent(self):
        parts = [UnigramTable({"a": i, "b": 2 * i}, 3 * i, "c") for i in range(1, 5)]
        ref = merge_tables(parts)
        random.Random(0).shuffle(parts)
        again = merge_tables(parts)
        assert again.counts == ref.counts and again.total_tokens == ref.total_tokens


@given(st.lists(st.text(alphabet="ab \n", max_size=20), max_size=20), st.integers(1, 5))
@settings(max_examples=100, deadline=None)
def test_shard_invariance_over_line_splits(lines, k):
    text = "\n".join(lines)
    whole = count_unigrams([text])
    all_lines = text.split("\n")
    step = max(1, (len(all_lines) + k - 1) // k)
    parts = [
        count_unigrams(["\n".join(all_lines[i : i + step])])
        for i in range(0, len(all_lines), step)
    ]
    merged = merge_tables(parts) if parts else UnigramTable({}, 0, "corpus")
    assert merged.counts == whole.counts
    assert merged.total_tokens == whole.total_tokens


class TestFiles:
    def _write_zipfian(self, path, rng, n_words=30000, vocab=300):
        words = []
        for _ in range(n_words):
            r = rng.paretovariate(1.2)
            words.append(f"w{int(r * 7) % vocab}")
        text = ""
        i = 0
        while i < len(words):
            k = rng.randint(1, 12)
            text += " ".join(words[i : i + k]) + "\n"
            i += k
        path.write_text(text, encoding="utf-8")
        return text

    def test_matches_naive_oracle(self, tmp_path):
        rng = random.Random(42)
        text = self._write_zipfian(tmp_path / "c.txt", rng)
        table = count_corpus(tmp_path / "c.txt")
        oracle = bruteforce.naive_count_words(text)
        assert table.counts == dict(oracle)
        assert table.total_tokens == sum(oracle.values())

    def test_worker_counts_agree(self, tmp_path):
        rng = random.Random(7)
        self._write_zipfian(tmp_path / "c.txt", rng, n_words=50000)
        serial = count_corpus(tmp_path / "c.txt", workers=1)
        for workers in (4, 8):
            par = count_corpus(tmp_path / "c.txt", workers=workers)
            assert par.counts == serial.counts
            assert par.total_tokens == serial.total_tokens

    def test_gzip_input(self, tmp_path):
        with gzip.open(tmp_path / "c.txt.gz", "wt", encoding="utf-8") as f:
            f.write("x y\nx\n")
        table = count_corpus(tmp_path / "c.txt.gz")
        assert table.counts == {"x": 2, "y": 1}

    def test_multiple_files_and_glob(self, tmp_path):
        (tmp_path / "a.txt").write_text("x y\n")
        (tmp_path / "b.txt").write_text("y z\n")
        table = count_corpus(str(tmp_path / "*.txt"))
        assert table.counts == {"x": 1, "y": 2, "z": 1}

    def test_missing_file(self):
        with pytest.raises(DataError, match="no corpus files"):
            count_corpus("/nonexistent/path/*.txt")

    def test_invalid_utf8_replaced_and_counted(self, tmp_path):
        (tmp_path / "c.txt").write_bytes(b"ok \xff\xfe bad\n")
        table = count_corpus(tmp_path / "c.txt")
        assert table.decode_errors > 0
        assert table.counts["ok"] == 1
        assert table.counts["bad"] == 1


class TestTsv:
    def test_round_trip(self, tmp_path):
        table = count_unigrams(["b a a c c c"])
        save_table(table, tmp_path / "t.tsv")
        back = load_table(tmp_path / "t.tsv", corpus_id="corpus")
        assert back.counts == table.counts
        assert back.total_tokens == table.total_tokens

    def test_sorted_by_count_then_word(self, tmp_path):
        save_table(count_unigrams(["b a a c c"]), tmp_path / "t.tsv")
        lines = (tmp_path / "t.tsv").read_text().strip().split("\n")
        assert lines[0] == "#total:5"
        assert [l.split("\t")[0] for l in lines[1:]] == ["a", "c", "b"]

    def test_total_header_preserved_under_min_count(self, tmp_path):
        table = count_unigrams(["a a a b"], min_count=2)
        save_table(table, tmp_path / "t.tsv")
        back = load_table(tmp_path / "t.tsv")
        assert back.total_tokens == 4
        assert back.counts == {"a": 3}

    def test_missing_header_rejected(self, tmp_path):
        (tmp_path / "t.tsv").write_text("a\t1\n")
        with pytest.raises(DataError, match="#total"):
            load_table(tmp_path / "t.tsv")

    def test_malformed_row_rejected(self, tmp_path):
        (tmp_path / "t.tsv").write_text("#total:1\na\tx\n")
        with pytest.raises(DataError):
            load_table(tmp_path / "t.tsv")
