import math
import re

import pytest
from hypothesis import given, settings

from opspam.treebank import parse_bracketed
from opspam.treequery import (
    ComplexityVector,
    PatternSyntaxError,
    complexity_profile,
    compile_pattern,
    find_matches,
    iter_profile_rows,
    match_count,
    node_at,
)
from treegen import direct_counts, is_clause, trees, walk

DOG = parse_bracketed("(S (NP (DT the) (NN dog)) (VP (VBZ barks)))")


def test_label_and_child_patterns():
    assert match_count(DOG, "VP") == 1
    assert match_count(DOG, "S < VP") == 1
    assert match_count(DOG, "NP < VP") == 0
    assert match_count(DOG, "__") == DOG.node_count() == 9


def test_dominance_and_negation():
    flat = parse_bracketed("(NP (DT the) (JJ big) (NN dog))")
    assert match_count(flat, "NP << (CC)") == 0
    assert match_count(flat, "NP !<< CC") == 1
    assert match_count(DOG, "S << DT") == 1
    assert match_count(DOG, "S < DT") == 0
    assert match_count(DOG, "S !< DT") == 1
    assert match_count(DOG, "__ < NN") == 1


def test_alternation_nesting_and_conjunction():
    t = parse_bracketed("(S (NP (NP (NNS a)) (CC and) (NP (NNS b))) (VP (VBD ran) (SBAR (IN if) (S (VP (VBD x))))))")
    assert match_count(t, "NP|VP") == 5
    assert match_count(t, "S < NP < VP") == 1
    assert match_count(t, "S < VP !< NP") == 1
    assert match_count(t, "VP << (SBAR < (S < VP))") == 1
    assert match_count(t, "(NP < CC)") == 1


def test_matches_in_preorder():
    paths = find_matches(DOG, "__ < __")
    assert paths == [(), (0,), (0, 0), (0, 1), (1,), (1, 0)]
    assert node_at(DOG, (1, 0)).label == "VBZ"


@pytest.mark.parametrize("text, message", [
    ("", "empty pattern"),
    ("S > VP", "unknown relation operator '>'"),
    ("S <", "expected node label"),
    ("S < (VP", "expected ')'"),
    ("S VP", "missing relation"),
    ("S $ NP", "unknown relation operator"),
])
def test_pattern_errors(text, message):
    with pytest.raises(PatternSyntaxError, match=re.escape(message)):
        compile_pattern(text)


def test_pattern_error_position():
    with pytest.raises(PatternSyntaxError) as err:
        compile_pattern("S < NP > VP")
    assert err.value.position == 7


def test_compiled_pattern_is_reusable_and_immutable():
    pat = compile_pattern("S < VP")
    assert match_count(DOG, pat) == match_count(DOG, pat) == 1
    with pytest.raises(Exception):
        pat.labels = frozenset()


def test_example_profile():
    v = complexity_profile([DOG])
    assert v.counts() == {"W": 3, "S": 1, "C": 1, "DC": 0, "T": 1, "CP": 0, "VP": 1}
    assert v.ratios()["MLS"] == 3.0
    assert v.ratios()["C_per_S"] == 1.0


def test_empty_profile_is_zero():
    v = complexity_profile([])
    assert all(x == 0 for x in v.as_dict().values())


def test_profile_rows():
    rows = list(iter_profile_rows([("r1", [DOG]), ("r2", [])]))
    assert rows[0][:3] == ["review_id", "W", "S"]
    assert rows[1][:4] == ["r1", 3, 1, 1]
    assert rows[2][1:8] == [0] * 7


@settings(max_examples=200, deadline=None)
@given(trees)
def test_wildcard_counts_all_nodes(tree):
    assert match_count(tree, "__") == tree.node_count()


@settings(max_examples=200, deadline=None)
@given(trees, trees)
def test_profile_invariants(a, b):
    pa, pb, both = complexity_profile([a]), complexity_profile([b]), complexity_profile([a, b])
    assert both.counts() == (pa + pb).counts()
    assert both.counts() == direct_counts([a, b])
    assert both.DC <= both.C
    if both.C:
        assert both.T <= both.C
    assert all(math.isfinite(r) and r >= 0 for r in both.ratios().values())


@settings(max_examples=100, deadline=None)
@given(trees)
def test_clause_pattern_matches_definition(tree):
    by_pattern = [node_at(tree, p) for p in find_matches(tree, "S|SINV|SQ|SBARQ < VP")]
    by_walk = [n for n, _ in walk(tree) if not n.is_leaf and is_clause(n)]
    assert by_pattern == by_walk


def test_zero_denominators():
    v = ComplexityVector(W=5, S=1)
    assert v.ratios()["MLC"] == 0.0 and v.ratios()["DC_per_T"] == 0.0
