"""Cleaning, tokenization and vocabulary tests."""

import random
import string

import pytest

from weakpairs.textproc import (
    PAD_ID,
    PAD_TOKEN,
    UNK_ID,
    UNK_TOKEN,
    Vocabulary,
    build_vocab,
    clean,
    encode_ids,
    tokenize,
)


class TestClean:
    def test_applies_all_four_rules(self):
        # lowercase, URL removal, mention removal, space standardization
        assert clean("Check THIS https://t.co/xyz @bob  now") == "check this now"

    def test_empty_string(self):
        assert clean("") == ""

    def test_url_variants_removed(self):
        assert clean("go http://a.example/path?q=1 there") == "go there"
        assert clean("HTTPS://UPPER.example/x end") == "end"

    def test_mention_removed_mid_text(self):
        assert clean("hey @Some_User99 what a game") == "hey what a game"

    def test_unicode_whitespace_collapsed(self):
        assert clean("a  b\tc\nd") == "a b c d"

    def test_idempotent_on_random_strings(self):
        rng = random.Random(4242)
        alphabet = string.ascii_letters + string.digits + " @:/._#\t\n é漢"
        fragments = ["https://", "http://", "@", "  ", "t.co/", "HTTPS://x.y"]
        for _ in range(2000):
            pieces = [
                rng.choice(fragments) if rng.random() < 0.3 else
                "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 8)))
                for _ in range(rng.randrange(0, 10))
            ]
            text = "".join(pieces)
            once = clean(text)
            assert clean(once) == once

    def test_never_increases_length(self):
        rng = random.Random(99)
        for _ in range(500):
            text = "".join(
                rng.choice(string.printable) for _ in range(rng.randrange(0, 60))
            )
            assert len(clean(text)) <= len(text)

    def test_uncovered_pattern_still_removed(self):
        # stripping the mention uncovers an http:// prefix; cleaning must not
        # leave it behind
        assert clean("http@xs://y") == ""


class TestTokenize:
    def test_plain_words(self):
        assert tokenize("hello world") == ["hello", "world"]

    def test_punctuation_split_off(self):
        assert tokenize("wow!!") == ["wow", "!", "!"]

    def test_empty(self):
        assert tokenize("") == []

    def test_interior_punctuation(self):
        assert tokenize("don't stop") == ["don", "'", "t", "stop"]


class TestVocabulary:
    def test_specials_always_present(self):
        vocab = build_vocab(["alpha beta beta"], max_size=10)
        assert vocab.tokens[PAD_ID] == PAD_TOKEN
        assert vocab.tokens[UNK_ID] == UNK_TOKEN

    def test_size_counts_specials(self):
        vocab = build_vocab(["a b c"], max_size=10)
        assert len(vocab) == 5  # 3 distinct tokens + PAD + UNK

    def test_max_size_two_keeps_only_specials(self):
        vocab = build_vocab(["a b c"], max_size=2)
        assert vocab.tokens == [PAD_TOKEN, UNK_TOKEN]

    def test_max_size_below_two_rejected(self):
        with pytest.raises(ValueError):
            build_vocab(["a"], max_size=1)

    def test_frequency_order_with_lexicographic_ties(self):
        vocab = build_vocab(["b b a a c"], max_size=5)
        # a and b tie at 2, a wins lexicographically; c is cut by max_size
        assert vocab.tokens == [PAD_TOKEN, UNK_TOKEN, "a", "b", "c"][:5]
        assert vocab.id_for("a") == 2
        assert vocab.id_for("b") == 3

    def test_deterministic(self):
        corpus = ["x y z y", "z z q"]
        assert build_vocab(corpus, 20).tokens == build_vocab(corpus, 20).tokens

    def test_ids_are_contiguous_bijection(self):
        vocab = build_vocab(["one two three two"], max_size=50)
        ids = sorted(vocab.token_to_id.values())
        assert ids == list(range(len(vocab)))

    def test_literal_special_strings_never_counted(self):
        vocab = build_vocab(["<pad> <unk> word word"], max_size=10)
        assert vocab.tokens.count(PAD_TOKEN) == 1
        assert vocab.tokens.count(UNK_TOKEN) == 1
        # '<', '>' and the names are tokenized apart, so 'pad' may appear,
        # but the exact special strings must not be duplicated
        assert vocab.id_for("word") >= 2

    def test_json_roundtrip(self, tmp_path):
        vocab = build_vocab(["alpha beta gamma alpha"], max_size=6)
        path = tmp_path / "vocab.json"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.tokens == vocab.tokens
        assert loaded.max_size == vocab.max_size


class TestEncodeIds:
    @pytest.fixture
    def vocab(self):
        return build_vocab(["alpha beta gamma"], max_size=10)

    def test_known_tokens(self, vocab):
        ids = encode_ids(vocab, "alpha beta", max_len=8)
        assert ids == [vocab.id_for("alpha"), vocab.id_for("beta")]
        assert UNK_ID not in ids

    def test_oov_maps_to_unk(self, vocab):
        assert encode_ids(vocab, "zzz", max_len=8) == [UNK_ID]

    def test_truncation(self, vocab):
        text = " ".join(["alpha"] * 100)
        assert len(encode_ids(vocab, text, max_len=64)) == 64

    def test_empty_text_yields_single_unk(self, vocab):
        assert encode_ids(vocab, "", max_len=8) == [UNK_ID]

    def test_output_length_bounds(self, vocab):
        rng = random.Random(1)
        for _ in range(200):
            text = " ".join(rng.choice(["alpha", "beta", "zzz"]) for _ in range(rng.randrange(0, 30)))
            out = encode_ids(vocab, text, max_len=7)
            assert 1 <= len(out) <= 7

    def test_max_len_precondition(self, vocab):
        with pytest.raises(ValueError):
            encode_ids(vocab, "alpha", max_len=0)
