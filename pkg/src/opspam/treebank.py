"""Penn-Treebank style bracketed trees: reader, writer, tags and production rules.

Leaves are nodes too: a leaf carries its word in ``token`` and uses the word as
its label, so a preterminal such as ``(NN dog)`` is an ``NN`` node with one leaf
child.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional

# labels that legitimately start with or contain "-"
KEEP_LABELS = frozenset({"-LRB-", "-RRB-", "-NONE-", "-LCB-", "-RCB-"})
WRAPPER_LABELS = frozenset({"ROOT", "TOP", ""})


class TreeParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Tree:
    label: str
    children: tuple["Tree", ...] = ()
    token: Optional[str] = None

    @classmethod
    def leaf(cls, word: str) -> "Tree":
        return cls(word, (), word)

    @property
    def is_leaf(self) -> bool:
        return self.token is not None

    @property
    def is_preterminal(self) -> bool:
        return len(self.children) == 1 and self.children[0].is_leaf

    def __iter__(self) -> Iterator["Tree"]:
        return iter(self.children)

    def subtrees(self) -> Iterator["Tree"]:
        """Pre-order walk over every node, leaves included."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> list[str]:
        return [n.token for n in self.subtrees() if n.is_leaf]

    def node_count(self) -> int:
        return sum(1 for _ in self.subtrees())

    def __str__(self) -> str:
        return render_bracketed(self)


@dataclass(frozen=True, order=True)
class ProductionRule:
    lhs: str
    rhs: tuple[str, ...]
    lexical: bool = False

    def __str__(self) -> str:
        return f"{self.lhs} -> {' '.join(self.rhs)}"


def bare_label(label: str) -> str:
    """Strip functional tags and co-index suffixes (NP-SBJ-1 -> NP, NP=2 -> NP)."""
    if label in KEEP_LABELS:
        return label
    head = re.split(r"[-=]", label, maxsplit=1)[0]
    return head or label


_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


def _tokenize(text: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start()) for m in _TOKEN_RE.finditer(text)]


def parse_bracketed(text: str) -> Tree:
    """Parse a single bracketed tree.

    ROOT/TOP/empty-label wrappers are removed, functional tags are stripped and
    ``-NONE-`` empty elements are dropped along with any node left childless.
    Raises :class:`TreeParseError` with a character offset on malformed input.
    """
    toks = _tokenize(text)
    if not toks:
        raise TreeParseError("empty input", 0)
    if toks[0][0] != "(":
        raise TreeParseError(f"bare token {toks[0][0]!r} outside brackets", toks[0][1])

    pos = 0

    def node() -> Optional[Tree]:
        nonlocal pos
        open_offset = toks[pos][1]
        pos += 1  # "("
        if pos >= len(toks):
            raise TreeParseError("unbalanced", len(text))
        label = ""
        if toks[pos][0] not in ("(", ")"):
            label = toks[pos][0]
            pos += 1
        children: list[Optional[Tree]] = []
        words: list[tuple[str, int]] = []
        while True:
            if pos >= len(toks):
                raise TreeParseError("unbalanced", len(text))
            tok, off = toks[pos]
            if tok == ")":
                pos += 1
                break
            if tok == "(":
                children.append(node())
            else:
                words.append((tok, off))
                pos += 1
        if not children and not words:
            raise TreeParseError("empty node", open_offset)
        if words and children:
            raise TreeParseError("node mixes a word with subtrees", words[0][1])
        if len(words) > 1:
            raise TreeParseError("preterminal with more than one word", words[1][1])
        if words:
            if label == "":
                raise TreeParseError("word without a tag", words[0][1])
            if label == "-NONE-":
                return None
            return Tree(bare_label(label), (Tree.leaf(words[0][0]),))
        kept = tuple(c for c in children if c is not None)
        if not kept:
            return None
        if label in WRAPPER_LABELS and len(kept) == 1:
            return kept[0]
        if label == "":
            raise TreeParseError("unlabeled node with several children", open_offset)
        return Tree(bare_label(label), kept)

    tree = node()
    if pos != len(toks):
        tok, off = toks[pos]
        if tok == ")":
            raise TreeParseError("unbalanced", off)
        raise TreeParseError("trailing material after tree", off)
    if tree is None:
        raise TreeParseError("tree contains only empty elements", 0)
    return tree


parse_cached = lru_cache(maxsize=500_000)(parse_bracketed)


def render_bracketed(tree: Tree) -> str:
    if tree.is_leaf:
        return tree.token
    return "(" + tree.label + " " + " ".join(render_bracketed(c) for c in tree.children) + ")"


def normalize_whitespace(text: str) -> str:
    """Canonical spacing for a bracketed string: one space between items, none inside parens."""
    text = re.sub(r"\s+", " ", text.strip())
    text = re.sub(r"\(\s+", "(", text)
    text = re.sub(r"\s+\)", ")", text)
    text = re.sub(r"\)\s*\(", ") (", text)
    return text


def pos_tags(tree: Tree) -> list[str]:
    return [n.label for n in tree.subtrees() if n.is_preterminal]


def production_rules(tree: Tree, lexicalized: bool = True) -> Counter:
    """Multiset of CFG productions, one per internal node.

    With ``lexicalized=False`` the preterminal -> word rules are left out (the
    unlexicalized rule set).
    """
    rules: Counter = Counter()
    for node in tree.subtrees():
        if node.is_leaf:
            continue
        if node.is_preterminal:
            if lexicalized:
                rules[ProductionRule(node.label, (node.children[0].token,), True)] += 1
        else:
            rules[ProductionRule(node.label, tuple(c.label for c in node.children))] += 1
    return rules
