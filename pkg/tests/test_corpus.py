import pytest

from rnntagger import corpus
from rnntagger.corpus import (
    PAD_INDEX,
    UNK_INDEX,
    Vocabulary,
    build_vocab,
    load_conll,
    load_lexicon,
    normalize,
    write_conll,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_two_line_sentence(tmp_path):
    path = write(tmp_path, "a.conll", "John B-PER\nruns O\n\n")
    sents = load_conll(path)
    assert len(sents) == 1
    assert sents[0].surfaces() == ["John", "runs"]
    assert sents[0].tags() == ["B-PER", "O"]


def test_blank_only_file(tmp_path):
    path = write(tmp_path, "b.conll", "\n\n\n")
    assert load_conll(path) == []


def test_empty_file(tmp_path):
    path = write(tmp_path, "c.conll", "")
    assert load_conll(path) == []


def test_three_sentences_token_counts(tmp_path):
    text = "a O\nb O\nc O\n\nd O\n\ne O\nf O\n"
    path = write(tmp_path, "d.conll", text)
    sents = load_conll(path)
    assert [len(s) for s in sents] == [3, 1, 2]


def test_missing_column_reports_line_number(tmp_path):
    path = write(tmp_path, "e.conll", "fine O\nbroken\n")
    with pytest.raises(ValueError, match="line 2"):
        load_conll(path)


def test_untagged_mode_ignores_columns(tmp_path):
    path = write(tmp_path, "f.conll", "just\ntokens\n")
    sents = load_conll(path, tagged=False)
    assert sents[0].surfaces() == ["just", "tokens"]
    assert sents[0].tags() == [None, None]


def test_docstart_separates_documents(tmp_path):
    text = "-DOCSTART- O\n\na O\n\nb O\n\n-DOCSTART- O\n\nc O\n"
    path = write(tmp_path, "g.conll", text)
    sents = load_conll(path)
    assert [s.doc_id for s in sents] == ["0", "0", "1"]


def test_column_selection(tmp_path):
    path = write(tmp_path, "h.conll", "1 John NNP B-PER\n")
    sents = load_conll(path, token_col=1, tag_col=3)
    assert sents[0].surfaces() == ["John"]
    assert sents[0].tags() == ["B-PER"]


def test_write_then_load_round_trip(tmp_path):
    text = "John B-PER\nruns O\n\nMary B-PER\n"
    src = write(tmp_path, "i.conll", text)
    sents = load_conll(src)
    out = str(tmp_path / "out.conll")
    write_conll(sents, out)
    again = load_conll(out)
    assert [(s.surfaces(), s.tags()) for s in again] == [
        (s.surfaces(), s.tags()) for s in sents
    ]


class TestVocabulary:
    def _sents(self, tmp_path, words):
        path = write(tmp_path, "v.conll", "".join("%s O\n" % w for w in words))
        return load_conll(path)

    def test_min_count_threshold(self, tmp_path):
        sents = self._sents(tmp_path, ["a", "a", "b"])
        vocab = build_vocab(sents, min_count=2)
        assert len(vocab) == 3  # PAD, UNK, a
        assert vocab.index("a") == 2
        assert vocab.index("b") == UNK_INDEX

    def test_min_count_one_keeps_all(self, tmp_path):
        sents = self._sents(tmp_path, ["x", "y", "z"])
        vocab = build_vocab(sents, min_count=1)
        assert all(w in vocab for w in ["x", "y", "z"])

    def test_frequency_then_lexicographic_order(self, tmp_path):
        sents = self._sents(tmp_path, ["bb", "bb", "aa", "cc"])
        vocab = build_vocab(sents)
        # bb has freq 2, then aa/cc tie resolved lexicographically
        assert vocab.index_to_word[2:] == ["bb", "aa", "cc"]

    def test_rebuild_identical(self, tmp_path):
        sents = self._sents(tmp_path, ["m", "n", "n", "o"])
        v1 = build_vocab(sents)
        v2 = build_vocab(sents)
        assert v1.word_to_index == v2.word_to_index

    def test_lookup_is_total(self, tmp_path):
        vocab = build_vocab(self._sents(tmp_path, ["hello"]))
        for s in ["hello", "never-seen", "", "  ", "123"]:
            idx = vocab.index(s)
            assert 0 <= idx < len(vocab)
        assert vocab.index("never-seen") == UNK_INDEX

    def test_reserved_indices(self):
        vocab = Vocabulary()
        assert vocab.word(PAD_INDEX) == corpus.PAD
        assert vocab.word(UNK_INDEX) == corpus.UNK

    def test_lookup_normalizes(self, tmp_path):
        vocab = build_vocab(self._sents(tmp_path, ["Madrid", "tel5551234"]))
        assert vocab.index("MADRID") == vocab.index("madrid")
        assert vocab.index("tel9999999") == vocab.index("tel5551234")

    def test_min_count_zero_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            build_vocab(self._sents(tmp_path, ["a"]), min_count=0)


def test_normalize_modes():
    assert normalize("Abc123") == "abc000"
    assert normalize("Abc123", lowercase=False) == "Abc000"
    assert normalize("Abc123", digits_to_zero=False) == "abc123"


class TestLexicon:
    def test_two_entries(self, tmp_path):
        path = write(tmp_path, "trig.txt", "Mr.\npresident\n")
        lex = load_lexicon(path)
        assert len(lex.entries) == 2
        assert "mr." in lex.entries

    def test_membership_case_insensitive(self, tmp_path):
        lex = load_lexicon(write(tmp_path, "l.txt", "president\n"))
        assert "President" in lex
        assert "PRESIDENT" in lex
        assert "senator" not in lex

    def test_duplicates_collapse(self, tmp_path):
        lex = load_lexicon(write(tmp_path, "m.txt", "a\nA\na\n"))
        assert lex.entries == {"a"}

    def test_empty_file_valid(self, tmp_path):
        lex = load_lexicon(write(tmp_path, "n.txt", ""))
        assert lex.entries == set()
        assert lex.max_len == 0

    def test_multiword_phrases(self, tmp_path):
        lex = load_lexicon(write(tmp_path, "o.txt", "New York City\nParis\n"))
        assert lex.max_len == 3
        assert "new york city" in lex

    def test_name_defaults_to_stem(self, tmp_path):
        lex = load_lexicon(write(tmp_path, "cities.txt", "Paris\n"))
        assert lex.name == "cities"

    def test_unreadable_file_errors(self, tmp_path):
        with pytest.raises(OSError):
            load_lexicon(str(tmp_path / "missing.txt"))
