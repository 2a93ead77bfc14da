"""Corpus ingestion, tokenization, and filtering."""

import json

import pytest
from hypothesis import given, strategies as st

from apisynth.corpus import (
    Corpus,
    SftExample,
    filter_corpus,
    ingest,
    save_corpus,
    tokenize,
)


def write_jsonl(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


class TestTokenize:
    def test_simple_assignment(self):
        assert tokenize("a = 1") == ["a", "=", "1"]

    def test_dotted_call(self):
        assert tokenize("np.sum(x)") == ["np", ".", "sum", "(", "x", ")"]

    def test_empty(self):
        assert tokenize("") == []

    def test_multichar_operators_split(self):
        assert tokenize("a==b") == ["a", "=", "=", "b"]

    @given(st.text())
    def test_never_raises_and_tokens_nonempty(self, text):
        toks = tokenize(text)
        assert all(toks)


class TestIngest:
    def test_three_valid_lines_get_line_ids(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"instruction": f"t{i}", "code": "x = 1"} for i in range(3)])
        corpus, rejects = ingest(path)
        assert len(corpus) == 3
        assert rejects == []
        assert corpus.ids() == [":0", ":1", ":2"]

    def test_bad_json_line_goes_to_rejects(self, tmp_path):
        path = tmp_path / "c.jsonl"
        with open(path, "w") as fh:
            fh.write(json.dumps({"instruction": "a", "code": "x=1"}) + "\n")
            fh.write("{not json\n")
            fh.write(json.dumps({"instruction": "b", "code": "y=2"}) + "\n")
        corpus, rejects = ingest(path)
        assert len(corpus) == 2
        assert len(rejects) == 1
        assert "line 1" in rejects[0].reason

    def test_empty_file_gives_empty_corpus(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        corpus, rejects = ingest(path)
        assert len(corpus) == 0
        assert rejects == []

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"instruction": "no code here"}])
        corpus, rejects = ingest(path)
        assert len(corpus) == 0
        assert rejects[0].reason == "missing field: code"

    def test_explicit_ids_kept(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "mine", "instruction": "a", "code": "x=1"}])
        corpus, _ = ingest(path)
        assert corpus.ids() == ["mine"]

    def test_length_tokens_recomputed(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"instruction": "a", "code": "np.sum(x)"}])
        corpus, _ = ingest(path)
        assert corpus.examples[0].length_tokens == 6

    def test_roundtrip_identity(self, tmp_path):
        src = tmp_path / "src.jsonl"
        write_jsonl(
            src,
            [{"id": f"e{i}", "instruction": f"inst {i}", "code": f"x = {i}"} for i in range(5)],
        )
        corpus, _ = ingest(src, source_name="src")
        out = tmp_path / "out.jsonl"
        save_corpus(corpus, out)
        again, rejects = ingest(out, source_name="src")
        assert rejects == []
        assert [(e.id, e.instruction, e.code) for e in again] == [
            (e.id, e.instruction, e.code) for e in corpus
        ]


class TestFilterCorpus:
    def make(self, codes, max_tokens=2048):
        corpus = Corpus(
            examples=[
                SftExample(id=str(i), instruction="", code=code) for i, code in enumerate(codes)
            ]
        )
        return filter_corpus(corpus, max_tokens)

    def test_mixed_reasons(self):
        long_code = "x = 1\n" * 900  # 2700 tokens
        kept, rejects = self.make(["a = 1", "def f(: pass", long_code], max_tokens=2048)
        assert kept.ids() == ["0"]
        assert {(r.id, r.reason) for r in rejects} == {("1", "syntax"), ("2", "length")}

    def test_all_valid_identity(self):
        kept, rejects = self.make(["a = 1", "b = 2"])
        assert len(kept) == 2
        assert rejects == []

    def test_unparseable_rejected_with_syntax_reason(self):
        kept, rejects = self.make(["def f(: pass"])
        assert len(kept) == 0
        assert rejects[0].reason == "syntax"

    def test_idempotent(self):
        kept, _ = self.make(["a = 1", "def f(:", "b = 2"])
        again, rejects = filter_corpus(kept, 2048)
        assert rejects == []
        assert again.ids() == kept.ids()

    def test_counts_partition_input(self):
        codes = ["a = 1", "def f(:", "b = 2", "x = 1\n" * 900]
        kept, rejects = self.make(codes)
        assert len(kept) + len(rejects) == len(codes)

    def test_bad_max_tokens(self):
        with pytest.raises(ValueError):
            self.make(["a = 1"], max_tokens=0)
