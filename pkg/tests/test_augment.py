import collections

import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from augbench.augment import (AugmentError, AugmentSpec, AugTechnique, Thesaurus,
                              augment_dataset, bundled_stopwords, bundled_thesaurus,
                              detokenize, derive_seed, edit_count, random_delete,
                              random_insert, random_swap, synonym_replace, tokenize)
from augbench.synth import make_review_corpus
from augbench.translate import MockProvider, TranslationCache

TABLE1 = "A sad human comedy played out on the back roads of life."
STOP = bundled_stopwords()


class TestTokenize:
    def test_sentence(self):
        assert tokenize("A sad human comedy.") == ["A", "sad", "human", "comedy", "."]

    def test_empty(self):
        assert tokenize("") == []

    def test_punctuation_runs_are_single_tokens(self):
        assert tokenize("wow... really?!") == ["wow", "...", "really", "?!"]

    def test_detokenize_basic(self):
        assert detokenize(["A", "sad", "comedy", "."]) == "A sad comedy."
        assert detokenize([]) == ""
        assert detokenize(["Hello", ",", "world"]) == "Hello, world"

    @given(st.text(max_size=120))
    @settings(max_examples=300, deadline=None)
    def test_round_trip_preserves_non_whitespace(self, text):
        stripped = "".join(text.split())
        rebuilt = "".join(detokenize(tokenize(text)).split())
        assert rebuilt == stripped


class TestThesaurus:
    def test_case_insensitive_lookup(self):
        th = Thesaurus({"Sad": ["Lamentable"]})
        assert th.lookup("SAD") == ["lamentable"]

    def test_self_synonym_rejected(self):
        with pytest.raises(AugmentError):
            Thesaurus({"sad": ["sad"]})

    def test_bundled_file_loads(self):
        th = bundled_thesaurus()
        assert "lamentable" in th.lookup("sad")
        assert "backward" in th.lookup("back")
        assert "funniness" in th.lookup("comedy")


class TestEditCount:
    def test_floors_at_one(self):
        assert edit_count(0.0, 100) == 1
        assert edit_count(0.1, 3) == 1

    def test_rounds(self):
        assert edit_count(0.1, 20) == 2
        assert edit_count(0.1, 16) == 2


class TestSynonymReplace:
    def test_table1_example(self):
        # with only two eligible words and n=2, exactly those are replaced
        th = Thesaurus({"sad": ["lamentable"], "back": ["backward"]})
        toks = tokenize(TABLE1)
        alpha = 2 / len(toks)
        out = synonym_replace(toks, alpha, th, STOP, rng_seed=0)
        assert out == tokenize(
            "A lamentable human comedy played out on the backward roads of life.")

    def test_empty_input_identity(self):
        assert synonym_replace([], 0.0, Thesaurus(), STOP, 0) == []

    def test_single_token_always_replaced(self):
        th = Thesaurus({"good": ["fine"]})
        outs = {tuple(synonym_replace(["good"], 0.1, th, STOP, s)) for s in range(100)}
        assert outs == {("fine",)}

    def test_no_entries_returns_input(self):
        toks = ["qqqq", "zzzz"]
        assert synonym_replace(toks, 0.5, Thesaurus(), STOP, 1) == toks

    def test_length_preserved(self):
        th = bundled_thesaurus()
        toks = tokenize(TABLE1)
        for seed in range(20):
            assert len(synonym_replace(toks, 0.3, th, STOP, seed)) == len(toks)

    def test_title_case_kept_at_sentence_start(self):
        th = Thesaurus({"great": ["wonderful"]})
        out = synonym_replace(["Great", "stuff"], 0.1, th, STOP, 0)
        assert out[0] == "Wonderful"

    def test_deterministic(self):
        th = bundled_thesaurus()
        toks = tokenize(TABLE1)
        assert synonym_replace(toks, 0.3, th, STOP, 42) == \
               synonym_replace(toks, 0.3, th, STOP, 42)


def _is_subsequence(needle, haystack):
    it = iter(haystack)
    return all(tok in it for tok in needle)


class TestRandomInsert:
    def test_table1_has_original_order(self):
        th = bundled_thesaurus()
        toks = tokenize(TABLE1)
        out = random_insert(toks, 0.05, th, STOP, rng_seed=3)
        assert len(out) == len(toks) + 1
        assert _is_subsequence(toks, out)

    def test_empty_input(self):
        assert random_insert([], 0.1, bundled_thesaurus(), STOP, 0) == []

    def test_no_eligible_token_returns_input(self):
        toks = ["qqqq", "zzzz"]
        assert random_insert(toks, 0.1, Thesaurus(), STOP, 5) == toks

    @given(st.integers(min_value=0, max_value=2 ** 32))
    @settings(max_examples=200, deadline=None)
    def test_input_is_subsequence_of_output(self, seed):
        th = bundled_thesaurus()
        toks = tokenize("the great movie had an awful plot and a boring ending")
        out = random_insert(toks, 0.3, th, STOP, seed)
        assert _is_subsequence(toks, out)


class TestRandomSwap:
    def test_multiset_preserved(self):
        toks = tokenize(TABLE1)
        for seed in range(30):
            out = random_swap(toks, 0.2, seed)
            assert sorted(out) == sorted(toks)
            assert len(out) == len(toks)

    def test_short_input_unchanged(self):
        assert random_swap(["a"], 0.5, 0) == ["a"]
        assert random_swap([], 0.5, 0) == []

    def test_three_token_support_uniform(self):
        # n=1 on 3 distinct tokens: exactly the three transpositions, ~uniform
        counts = collections.Counter(
            tuple(random_swap(["a", "b", "c"], 0.1, seed)) for seed in range(3000)
        )
        expected = {("b", "a", "c"), ("c", "b", "a"), ("a", "c", "b")}
        assert set(counts) == expected
        _, p = chisquare(list(counts.values()))
        assert p > 0.01


class TestRandomDelete:
    def test_p_zero_identity(self):
        toks = tokenize(TABLE1)
        assert random_delete(toks, 0.0, 0) == toks

    def test_p_one_retains_exactly_one(self):
        outs = {tuple(random_delete(["a", "b"], 1.0, s)) for s in range(50)}
        assert outs == {("a",), ("b",)}

    def test_binomial_deletion_rate(self):
        import math
        n, p = 1000, 0.1
        toks = [f"w{i}" for i in range(n)]
        sigma = math.sqrt(n * p * (1 - p))
        deleted = [n - len(random_delete(toks, p, seed)) for seed in range(100)]
        # each draw stays in a generous envelope; the mean is tight
        assert all(abs(d - n * p) <= 5 * sigma for d in deleted)
        mean = sum(deleted) / len(deleted)
        assert abs(mean - n * p) <= 3 * sigma / math.sqrt(len(deleted))

    @given(st.integers(min_value=0, max_value=2 ** 32),
           st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=300, deadline=None)
    def test_output_is_nonempty_subsequence(self, seed, p):
        toks = tokenize("one two three four five six seven")
        out = random_delete(toks, p, seed)
        assert out
        assert _is_subsequence(out, toks)


class TestAugmentSpec:
    def test_languages_only_for_bt(self):
        with pytest.raises(AugmentError):
            AugmentSpec(technique="sr", languages=("es",))
        with pytest.raises(AugmentError):
            AugmentSpec(technique="bt")

    def test_alpha_bounds(self):
        with pytest.raises(AugmentError):
            AugmentSpec(technique="rs", alpha=1.5)


class TestAugmentDataset:
    def test_bt_all_languages_counts(self):
        corp = make_review_corpus(n_train=50, n_test=0)
        langs = tuple(f"l{i}" for i in range(10))
        spec = AugmentSpec(technique="bt", languages=langs)
        run = augment_dataset(corp, spec, translator=MockProvider(0),
                              cache=TranslationCache())
        assert run.generated == 500
        assert len(run.corpus) == len(corp) + 500

    def test_single_copy_grows_by_one(self):
        corp = make_review_corpus(n_train=1, n_test=0)
        run = augment_dataset(corp, AugmentSpec(technique="rs"))
        assert len(run.corpus) == len(corp) + 1

    def test_labels_inherited_and_parents_resolve(self):
        corp = make_review_corpus(n_train=100, n_test=10)
        run = augment_dataset(corp, AugmentSpec(technique="sr", copies_per_original=2))
        for doc in run.corpus:
            if doc.origin.kind != "synthetic":
                continue
            parent = run.corpus.get(doc.origin.parent)
            assert parent.is_original
            assert parent.label == doc.label

    def test_originals_never_mutated(self):
        corp = make_review_corpus(n_train=20, n_test=5)
        before = {d.id: d.text for d in corp}
        run = augment_dataset(corp, AugmentSpec(technique="rd", alpha=0.3))
        after = {d.id: d.text for d in run.corpus if d.is_original}
        assert after == before

    def test_round_robin_cycles_languages(self):
        corp = make_review_corpus(n_train=6, n_test=0)
        spec = AugmentSpec(technique="bt", languages=("es", "fr"),
                           language_strategy="roundrobin")
        run = augment_dataset(corp, spec, translator=MockProvider(0),
                              cache=TranslationCache())
        langs = [d.origin.lang for d in run.corpus if d.origin.kind == "synthetic"]
        assert langs == ["es", "fr", "es", "fr", "es", "fr"]

    def test_synthetics_stable_under_corpus_growth(self):
        # per-document seeding: adding documents must not change others' synthetics
        small = make_review_corpus(n_train=10, n_test=0)
        big = make_review_corpus(n_train=20, n_test=0)
        spec = AugmentSpec(technique="rs", alpha=0.2, seed=5)
        small_out = {d.id: d.text for d in augment_dataset(small, spec).corpus
                     if d.origin.kind == "synthetic"}
        big_out = {d.id: d.text for d in augment_dataset(big, spec).corpus
                   if d.origin.kind == "synthetic"}
        for doc_id, text in small_out.items():
            assert big_out[doc_id] == text

    def test_deterministic(self):
        corp = make_review_corpus(n_train=30, n_test=5)
        spec = AugmentSpec(technique="ri", alpha=0.1, seed=9)
        a = [(d.id, d.text) for d in augment_dataset(corp, spec).corpus]
        b = [(d.id, d.text) for d in augment_dataset(corp, spec).corpus]
        assert a == b

    def test_translator_required_iff_bt(self):
        corp = make_review_corpus(n_train=2, n_test=0)
        with pytest.raises(AugmentError):
            augment_dataset(corp, AugmentSpec(technique="bt", languages=("es",)))
        with pytest.raises(AugmentError):
            augment_dataset(corp, AugmentSpec(technique="rs"),
                            translator=MockProvider(0))


def test_derive_seed_distinct_streams():
    seeds = {derive_seed(0, f"doc{i}", c) for i in range(50) for c in range(3)}
    assert len(seeds) == 150
