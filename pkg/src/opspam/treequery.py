"""A small Tregex-like pattern language and the syntactic complexity profile.

Pattern grammar::

    pattern   := node relation*
    node      := labels | "(" pattern ")"
    labels    := label ("|" label)*          # "__" matches any node
    relation  := ["!"] ("<" | "<<") node

``A < B``: A has a child matching B.  ``A << B``: A has a proper descendant
matching B.  Several relations on one head are conjoined.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from typing import Iterable, Iterator, Optional

from .treebank import Tree

WILDCARD = "__"
PUNCT_TAGS = frozenset({".", ",", ":", "''", "``", "-LRB-", "-RRB-", "#", "$"})
CLAUSE_LABELS = ("S", "SINV", "SQ", "SBARQ")
COORD_LABELS = ("NP", "VP", "ADJP", "ADVP")


class PatternSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class Relation:
    op: str  # "<" or "<<"
    negated: bool
    target: "TreePattern"


@dataclass(frozen=True)
class TreePattern:
    labels: Optional[frozenset]  # None = wildcard
    relations: tuple[Relation, ...] = ()
    source: str = ""

    def head_matches(self, node: Tree) -> bool:
        return self.labels is None or node.label in self.labels

    def matches(self, node: Tree) -> bool:
        if not self.head_matches(node):
            return False
        for rel in self.relations:
            if rel.op == "<":
                found = any(rel.target.matches(c) for c in node.children)
            else:
                found = any(rel.target.matches(d) for c in node.children for d in c.subtrees())
            if found == rel.negated:
                return False
        return True

    def __str__(self) -> str:
        return self.source


_RELATION_CHARS = ">$.,=~@%!"


def _lex(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
        elif text.startswith(("!<<", "<<"), pos):
            op = "!<<" if ch == "!" else "<<"
            out.append(("rel", op, pos))
            pos += len(op)
        elif text.startswith(("!<", "<"), pos):
            op = "!<" if ch == "!" else "<"
            out.append(("rel", op, pos))
            pos += len(op)
        elif ch in "()|":
            out.append(("punct", ch, pos))
            pos += 1
        else:
            word = re.match(r"[^\s()|<]+", text[pos:]).group()
            out.append(("word", word, pos))
            pos += len(word)
    return out


def compile_pattern(text: str) -> TreePattern:
    toks = _lex(text)
    i = 0

    def peek():
        return toks[i] if i < len(toks) else ("eof", "", len(text))

    def take():
        nonlocal i
        tok = peek()
        i += 1
        return tok

    def parse_node() -> TreePattern:
        kind, val, pos = peek()
        if kind == "punct" and val == "(":
            take()
            inner = parse_pattern()
            kind, val, pos = take()
            if (kind, val) != ("punct", ")"):
                raise PatternSyntaxError("expected ')'", pos)
            return inner
        if kind != "word":
            raise PatternSyntaxError(f"expected node label, got {val or 'end of pattern'!r}", pos)
        take()
        labels = [val]
        while peek()[:2] == ("punct", "|"):
            take()
            kind, val, pos = take()
            if kind != "word":
                raise PatternSyntaxError("expected label after '|'", pos)
            labels.append(val)
        if WILDCARD in labels:
            return TreePattern(None)
        return TreePattern(frozenset(labels))

    def parse_pattern() -> TreePattern:
        start = peek()[2]
        head = parse_node()
        rels = list(head.relations)
        while True:
            kind, val, pos = peek()
            if kind == "rel":
                take()
                target = parse_node()
                rels.append(Relation(val.lstrip("!"), val.startswith("!"), target))
            elif kind == "word" and val[0] in _RELATION_CHARS:
                raise PatternSyntaxError(f"unknown relation operator {val!r}", pos)
            else:
                break
        end = peek()[2]
        return TreePattern(head.labels, tuple(rels), text[start:end].strip())

    if not toks:
        raise PatternSyntaxError("empty pattern", 0)
    pattern = parse_pattern()
    kind, val, pos = peek()
    if kind != "eof":
        if kind == "word":
            raise PatternSyntaxError(f"unexpected label {val!r} (missing relation?)", pos)
        raise PatternSyntaxError(f"unexpected {val!r}", pos)
    return TreePattern(pattern.labels, pattern.relations, text.strip())


def _coerce(pattern) -> TreePattern:
    return compile_pattern(pattern) if isinstance(pattern, str) else pattern


def find_matches(tree: Tree, pattern) -> list[tuple[int, ...]]:
    """Paths (child-index tuples from the root) of all matching nodes, pre-order."""
    pattern = _coerce(pattern)
    out = []
    stack: list[tuple[Tree, tuple[int, ...]]] = [(tree, ())]
    while stack:
        node, path = stack.pop()
        if pattern.matches(node):
            out.append(path)
        for k in range(len(node.children) - 1, -1, -1):
            stack.append((node.children[k], path + (k,)))
    return out


def match_count(tree: Tree, pattern) -> int:
    pattern = _coerce(pattern)
    return sum(1 for node in tree.subtrees() if pattern.matches(node))


def node_at(tree: Tree, path: tuple[int, ...]) -> Tree:
    for k in path:
        tree = tree.children[k]
    return tree


# compiled once; patterns are immutable
CLAUSE = compile_pattern("S|SINV|SQ|SBARQ < VP")
COORD_PHRASE = compile_pattern("NP|VP|ADJP|ADVP < CC")
VERB_PHRASE = compile_pattern("VP")


@dataclass
class ComplexityVector:
    W: int = 0
    S: int = 0
    C: int = 0
    DC: int = 0
    T: int = 0
    CP: int = 0
    VP: int = 0

    RATIOS = (
        ("MLS", "W", "S"),
        ("MLC", "W", "C"),
        ("C_per_S", "C", "S"),
        ("C_per_T", "C", "T"),
        ("DC_per_C", "DC", "C"),
        ("DC_per_T", "DC", "T"),
        ("CP_per_C", "CP", "C"),
        ("CP_per_T", "CP", "T"),
        ("VP_per_T", "VP", "T"),
        ("T_per_S", "T", "S"),
    )
    COUNTS = ("W", "S", "C", "DC", "T", "CP", "VP")

    def counts(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def ratios(self) -> dict[str, float]:
        out = {}
        for name, num, den in self.RATIOS:
            d = getattr(self, den)
            out[name] = getattr(self, num) / d if d else 0.0
        return out

    def __add__(self, other: "ComplexityVector") -> "ComplexityVector":
        return ComplexityVector(**{k: v + getattr(other, k) for k, v in self.counts().items()})

    def as_dict(self) -> dict[str, float]:
        return {**self.counts(), **self.ratios()}


def _tree_counts(tree: Tree) -> ComplexityVector:
    words = sum(
        1 for n in tree.subtrees() if n.is_preterminal and n.label not in PUNCT_TAGS
    )
    clause_paths = find_matches(tree, CLAUSE)
    clause_set = set(clause_paths)
    dc = 0
    t_units = 0
    for path in clause_paths:
        if path and node_at(tree, path[:-1]).label == "SBAR":
            dc += 1
        if not any(path[:k] in clause_set for k in range(len(path))):
            t_units += 1
    return ComplexityVector(
        W=words,
        S=1,
        C=len(clause_paths),
        DC=dc,
        T=t_units,
        CP=match_count(tree, COORD_PHRASE),
        VP=match_count(tree, VERB_PHRASE),
    )


def complexity_profile(trees: Iterable[Tree]) -> ComplexityVector:
    total = ComplexityVector()
    for tree in trees:
        total = total + _tree_counts(tree)
    return total


def iter_profile_rows(named_trees: Iterable[tuple[str, list[Tree]]]) -> Iterator[list]:
    """CSV rows (header first) of per-review complexity vectors."""
    names = list(ComplexityVector.COUNTS) + [r[0] for r in ComplexityVector.RATIOS]
    yield ["review_id"] + names
    for rid, trees in named_trees:
        d = complexity_profile(trees).as_dict()
        yield [rid] + [d[n] if isinstance(d[n], int) else f"{d[n]:.6f}" for n in names]
