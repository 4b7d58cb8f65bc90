import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opspam.corpus import Domain, Label, LabeledReview, Product
from opspam.features import (
    COMPLEXITY_DIMS,
    PTB_TAGS,
    CategoryLexicon,
    FeatureConfig,
    FeatureError,
    FeatureSpace,
    ad_phrase_features,
    build_vocab,
    lexicon_features,
    load_lexicon,
    load_phrases,
    pos_features,
    production_features,
    title_overlap_features,
    tokenize,
    unigram_features,
)
from opspam.synthetic import default_phrases
from opspam.treebank import parse_bracketed
from builders import DOG, review

LEX = CategoryLexicon.from_pairs([("POSEMO", "great"), ("POSEMO", "love*"), ("AFFECT", "love")])


def doc(rid, body, sentences=(), title="", product="p1"):
    return review(rid, body=body, title=title, sentences=sentences, product=product)


@pytest.mark.parametrize("text, tokens", [
    ("It's GREAT!", ["it's", "great"]),
    ("", []),
    ("state-of-the-art", ["state-of-the-art"]),
    ("Café naïve — 3 stars_ok", ["café", "naïve", "3", "stars", "ok"]),
    ("don’t 'quote' -dash", ["don't", "quote", "dash"]),
])
def test_tokenize(text, tokens):
    assert tokenize(text) == tokens


def test_build_vocab_thresholds():
    docs = [doc("a", "great book"), doc("b", "great film"), doc("c", "odd")]
    assert build_vocab(docs, "unigram", 2) == ["great"]
    assert build_vocab(docs, "unigram", 1) == ["book", "film", "great", "odd"]
    assert build_vocab(docs, "unigram", 2) == build_vocab(docs, "unigram", 2)
    with pytest.raises(FeatureError, match="empty unigram vocabulary"):
        build_vocab(docs, "unigram", 3)


def test_rule_vocab():
    docs = [doc("a", "x", [DOG]), doc("b", "y", [DOG])]
    assert build_vocab(docs, "up_rules", 2) == ["NP -> DT NN", "S -> NP VP", "VP -> VBZ"]
    assert "DT -> the" in build_vocab(docs, "ap_rules", 2)


def test_unigram_features():
    assert unigram_features(doc("a", "great great book"), ["great", "book"]) == {"great": 2 / 3, "book": 1 / 3}
    assert unigram_features(doc("b", "nothing here"), ["great"]) == {}


def test_pos_features():
    assert pos_features([parse_bracketed(DOG)]) == {"DT": 1 / 3, "NN": 1 / 3, "VBZ": 1 / 3}
    assert pos_features([]) == {}


def test_lexicon_features():
    assert lexicon_features(doc("a", "i love loved it"), LEX) == {"POSEMO": 2 / 4, "AFFECT": 1 / 4}
    assert lexicon_features(doc("b", ""), LEX) == {}


def test_lexicon_file(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text("# comment\nPOSEMO\tgreat\nPOSEMO\tLove*\n\nNEG\tbad\n", encoding="utf-8")
    lex = load_lexicon(path)
    assert lex.categories == ("POSEMO", "NEG")
    assert lex.entries == (("great", "love*"), ("bad",))
    path.write_text("POSEMO great\n", encoding="utf-8")
    with pytest.raises(FeatureError, match="line 1"):
        load_lexicon(path)


def test_production_features():
    t = parse_bracketed(DOG)
    assert production_features([t], "UP", ["S -> NP VP"]) == {"S -> NP VP": 1 / 3}
    ap_vocab = ["S -> NP VP", "NP -> DT NN", "VP -> VBZ", "DT -> the"]
    up = production_features([t], "UP", ap_vocab)
    ap = production_features([t], "AP", ap_vocab)
    assert set(up) <= set(ap)
    assert production_features([], "UP", ap_vocab) == {}


def test_ad_phrases():
    phrases = ("highly recommended", "must have", "best")
    r = doc("a", "Highly recommended. It is highly recommended!", title="best")
    assert ad_phrase_features(r, phrases) == {"highly recommended": 1.0, "best": 1.0}
    assert ad_phrase_features(doc("b", "not recommended"), phrases) == {}
    # title and body are separate segments: no phrase spans the boundary
    assert ad_phrase_features(doc("c", "have", title="must"), phrases) == {}


def test_phrase_file(tmp_path):
    path = tmp_path / "p.txt"
    path.write_text("# ads\nHighly  Recommended\nmust have\nmust have\n", encoding="utf-8")
    assert load_phrases(path) == ("highly recommended", "must have")
    assert len(default_phrases()) == len(set(default_phrases())) >= 40


def test_title_overlap():
    product = Product("p1", "Waterproof Bluetooth Speaker X200", "")
    r = doc("a", "great waterproof bluetooth speaker")
    assert title_overlap_features(r, product) == {"unigram_overlap": 3.0, "bigram_overlap": 2.0}
    assert title_overlap_features(doc("b", "nothing shared"), product) == {}
    same = doc("c", "Waterproof Bluetooth Speaker X200")
    assert title_overlap_features(same, product) == {"unigram_overlap": 4.0, "bigram_overlap": 3.0}
    assert title_overlap_features(r, None) == {}
    # description counts too
    assert title_overlap_features(doc("d", "long battery"), Product("p1", "X", "long battery life")) == \
        {"unigram_overlap": 2.0, "bigram_overlap": 1.0}


def corpus_items():
    sents = [DOG, "(S (NP (PRP it)) (VP (VBD worked) (ADVP (RB great))) (. .))"]
    return [
        LabeledReview(doc("a", "great dog barks", sents, title="highly recommended"), Label.DECEPTIVE, Domain.BOOKS),
        LabeledReview(doc("b", "the dog barks great", sents[:1]), Label.AUTHENTIC, Domain.BOOKS),
        LabeledReview(doc("c", "it worked great", sents[1:]), Label.AUTHENTIC, Domain.BOOKS),
    ]


PRODUCTS = {"p1": Product("p1", "Great Dog Whistle", "makes the dog bark")}


def test_assemble_concatenates_in_family_order():
    items = corpus_items()
    space = FeatureSpace.fit(items, FeatureConfig(("pos", "up_rules")))
    assert space.config.families == ("pos", "up_rules")
    assert space.names[:len(PTB_TAGS)] == [f"pos:{t}" for t in PTB_TAGS]
    v = space.assemble(items[1])
    expected_up = production_features([parse_bracketed(DOG)], "UP", space.vocabs["up_rules"])
    dense = v.to_dense(space.dim)
    for rule, val in expected_up.items():
        assert dense[space.index[f"up_rules:{rule}"]] == val
    assert dense[space.index["pos:DT"]] == 1 / 3
    assert v.label == 0 and np.all(np.diff(v.indices) > 0)


def test_ad_only_space_dimension():
    phrases = default_phrases()
    space = FeatureSpace.fit(corpus_items(), FeatureConfig(("ad_phrases",)), phrases=phrases)
    assert space.dim == len(phrases)
    X, y = space.transform(corpus_items())
    assert X.shape == (3, len(phrases)) and y.tolist() == [1, 0, 0]
    assert X[0, space.index["ad_phrases:highly recommended"]] == 1.0


def test_disabling_a_family_drops_exactly_its_block():
    items = corpus_items()
    full = FeatureSpace.fit(items, FeatureConfig(("unigram", "pos", "lexicon", "title_overlap", "complexity"), min_df=1),
                            lexicon=LEX)
    part = FeatureSpace.fit(items, FeatureConfig(("unigram", "lexicon", "title_overlap", "complexity"), min_df=1),
                            lexicon=LEX)
    Xf, _ = full.transform(items, PRODUCTS)
    Xp, _ = part.transform(items, PRODUCTS)
    keep = [full.index[n] for n in part.names]
    assert np.array_equal(Xf.toarray()[:, keep], Xp.toarray())


def test_missing_vocabulary_and_resources():
    with pytest.raises(FeatureError, match="vocabulary is missing"):
        FeatureSpace(FeatureConfig(("unigram",)), {})
    with pytest.raises(FeatureError, match="no lexicon"):
        FeatureSpace.fit(corpus_items(), FeatureConfig(("lexicon",)))
    with pytest.raises(FeatureError, match="no phrase list"):
        FeatureSpace.fit(corpus_items(), FeatureConfig(("ad_phrases",)))
    with pytest.raises(FeatureError, match="unknown feature family"):
        FeatureConfig(("bigram",))


def test_manifest_round_trip_and_hash_check():
    space = FeatureSpace.fit(corpus_items(), FeatureConfig(tuple(
        ["unigram", "pos", "lexicon", "ap_rules", "up_rules", "ad_phrases", "title_overlap", "complexity"]), min_df=1),
        lexicon=LEX, phrases=("highly recommended",))
    text = space.to_text()
    back = FeatureSpace.from_text(text)
    assert back.names == space.names and back.hash() == space.hash() and back.to_text() == text
    X1, _ = space.transform(corpus_items(), PRODUCTS)
    X2, _ = back.transform(corpus_items(), PRODUCTS)
    assert (X1 != X2).nnz == 0
    with pytest.raises(FeatureError, match="hash mismatch"):
        FeatureSpace.from_text(text.replace("great", "grate"))


def test_test_documents_never_change_the_space():
    items = corpus_items()
    space = FeatureSpace.fit(items[:2], FeatureConfig(("unigram", "up_rules"), min_df=1))
    before = space.hash()
    space.transform([LabeledReview(doc("z", "brand new words"), Label.AUTHENTIC, Domain.BOOKS)])
    assert space.hash() == before


words = st.sampled_from(["great", "dog", "book", "highly", "recommended", "it's", "x-ray", "the"])


@settings(max_examples=100, deadline=None)
@given(st.lists(words, max_size=12), st.lists(st.sampled_from([DOG, "(FRAG (JJ great) (. !))", "(NP (DT a) (NN book))"]),
                                               max_size=3))
def test_value_ranges_and_purity(tokens, sents):
    items = corpus_items()
    space = FeatureSpace.fit(items, FeatureConfig(tuple(
        ["unigram", "pos", "lexicon", "ap_rules", "up_rules", "ad_phrases", "title_overlap", "complexity"]), min_df=1),
        lexicon=LEX, phrases=("highly recommended", "great"))
    r = doc("h", " ".join(tokens), sents)
    v1 = space.assemble(r, PRODUCTS["p1"])
    v2 = space.assemble(r, PRODUCTS["p1"])
    assert np.array_equal(v1.indices, v2.indices) and np.array_equal(v1.values, v2.values)
    assert np.all(np.isfinite(v1.values)) and np.all(v1.values > 0)
    for k, val in zip(v1.indices, v1.values):
        fam = space.names[k].split(":", 1)[0]
        if fam in ("unigram", "pos", "lexicon", "ap_rules", "up_rules"):
            assert val <= 1
        elif fam == "ad_phrases":
            assert val == 1
        elif fam == "title_overlap":
            assert val == int(val)
    ap = {space.names[k].split(":", 1)[1] for k in v1.indices if space.names[k].startswith("ap_rules:")}
    up = {space.names[k].split(":", 1)[1] for k in v1.indices if space.names[k].startswith("up_rules:")}
    assert up <= ap
    assert sum(val for k, val in zip(v1.indices, v1.values) if space.names[k].startswith("pos:")) == \
        pytest.approx(1.0 if sents else 0.0)


def test_complexity_block_is_the_ten_ratios():
    space = FeatureSpace.fit(corpus_items(), FeatureConfig(("complexity",)))
    assert space.names == [f"complexity:{n}" for n in COMPLEXITY_DIMS] and len(COMPLEXITY_DIMS) == 10
    v = space.assemble(doc("a", "x", [DOG])).to_dense(10)
    assert v[space.index["complexity:MLS"]] == 3.0
