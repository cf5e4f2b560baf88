"""Constituency-tree helpers over bracketed parses from the sidecar layer."""

import logging
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

from nltk.tree import ParentedTree, Tree

log = logging.getLogger(__name__)

Position = Tuple[int, ...]

# Simplified head percolation table: (search direction, priority list)
HEAD_RULES: Dict[str, Tuple[str, List[str]]] = {
    "ADJP": ("left", ["NNS", "QP", "NN", "$", "ADVP", "JJ", "VBN", "VBG", "ADJP", "JJR", "NP",
                      "JJS", "DT", "FW", "RBR", "RBS", "SBAR", "RB"]),
    "ADVP": ("right", ["RB", "RBR", "RBS", "FW", "ADVP", "TO", "CD", "JJR", "JJ", "IN", "NP", "JJS", "NN"]),
    "CONJP": ("right", ["CC", "RB", "IN"]),
    "FRAG": ("right", []),
    "INTJ": ("left", []),
    "LST": ("right", ["LS", ":"]),
    "NP": ("right", ["NN", "NNP", "NNPS", "NNS", "NX", "POS", "JJR", "NP", "PRP", "CD", "JJ", "QP"]),
    "PP": ("left", ["IN", "TO", "VBG", "VBN", "RP", "FW"]),
    "PRN": ("left", []),
    "PRT": ("right", ["RP"]),
    "QP": ("left", ["$", "IN", "NNS", "NN", "JJ", "RB", "DT", "CD", "QP", "JJR", "JJS"]),
    "RRC": ("right", ["VP", "NP", "ADVP", "ADJP", "PP"]),
    "S": ("left", ["TO", "IN", "VP", "S", "SBAR", "ADJP", "UCP", "NP"]),
    "SBAR": ("left", ["WHNP", "WHPP", "WHADVP", "WHADJP", "IN", "DT", "S", "SQ", "SINV", "SBAR", "FRAG"]),
    "SBARQ": ("left", ["SQ", "S", "SINV", "SBARQ", "FRAG"]),
    "SINV": ("left", ["VBZ", "VBD", "VBP", "VB", "MD", "VP", "S", "SINV", "ADJP", "NP"]),
    "SQ": ("left", ["VBZ", "VBD", "VBP", "VB", "MD", "VP", "SQ"]),
    "UCP": ("right", []),
    "VP": ("left", ["TO", "VBD", "VBN", "MD", "VBZ", "VB", "VBG", "VBP", "VP", "ADJP", "NN", "NNS", "NP"]),
    "WHADJP": ("left", ["CC", "WRB", "JJ", "ADJP"]),
    "WHADVP": ("right", ["CC", "WRB"]),
    "WHNP": ("left", ["WDT", "WP", "WP$", "WHADJP", "WHPP", "WHNP"]),
    "WHPP": ("right", ["IN", "TO", "FW"]),
}


def base_label(label: str) -> str:
    """Strip function tags and indices: NP-SBJ-1 -> NP, but keep -LRB-"""
    if label.startswith("-"):
        return label
    return label.split("-")[0].split("=")[0]


class SyntaxTree:
    """A parse tree with lexical heads and leaf spans precomputed for every node"""

    def __init__(self, tree: ParentedTree):
        self.tree = tree
        self.depth = tree.height() - 1
        self.leaves: List[str] = tree.leaves()
        self.leaf_positions: List[Position] = [tree.leaf_treeposition(i) for i in range(len(self.leaves))]
        self.heads: Dict[Position, int] = {}
        self.spans: Dict[Position, Tuple[int, int]] = {}
        leaf_index = {pos: i for i, pos in enumerate(self.leaf_positions)}
        self._lexicalize((), leaf_index)

    def __len__(self) -> int:
        return len(self.leaf_positions)

    def _lexicalize(self, pos: Position, leaf_index: Dict[Position, int]) -> Tuple[int, Tuple[int, int]]:
        node = self.tree[pos] if pos else self.tree
        if not isinstance(node, Tree):
            i = leaf_index[pos]
            return i, (i, i + 1)
        child_heads = []
        start, end = None, None
        for k in range(len(node)):
            head, (s, e) = self._lexicalize(pos + (k,), leaf_index)
            child_heads.append(head)
            start = s if start is None else min(start, s)
            end = e if end is None else max(end, e)
        head = child_heads[self._head_child(node)]
        self.heads[pos] = head
        self.spans[pos] = (start, end)
        return head, (start, end)

    @staticmethod
    def _head_child(node: Tree) -> int:
        if len(node) == 1:
            return 0
        labels = [base_label(c.label()) if isinstance(c, Tree) else c for c in node]
        direction, priorities = HEAD_RULES.get(base_label(node.label()), ("left", []))
        order = list(range(len(node))) if direction == "left" else list(reversed(range(len(node))))
        for category in priorities:
            for k in order:
                if labels[k] == category:
                    return k
        return order[0]

    def label(self, pos: Position) -> str:
        node = self.tree[pos] if pos else self.tree
        return base_label(node.label())

    def word(self, i: int) -> str:
        return self.leaves[i]

    # --- lowest common ancestor ---------------------------------------------

    def lca(self, i: int, j: int) -> Position:
        a, b = self.leaf_positions[i], self.leaf_positions[j]
        k = 0
        while k < min(len(a), len(b)) and a[k] == b[k]:
            k += 1
        return a[:k]

    def lca_ratio(self, i: int, j: int) -> float:
        """Length of the path from leaf i up to LCA(i, j), normalised by tree depth"""
        if self.depth <= 0:
            return 0.0
        return (len(self.leaf_positions[i]) - len(self.lca(i, j))) / self.depth

    def lca_label(self, i: int, j: int) -> str:
        return self.label(self.lca(i, j))

    # --- head projections ---------------------------------------------------

    def maximal_projection(self, i: int) -> Position:
        """Uppermost node whose lexical head is leaf i"""
        pos = self.leaf_positions[i][:-1]
        while pos and self.heads.get(pos[:-1]) == i:
            pos = pos[:-1]
        return pos

    def head_word(self, pos: Position) -> str:
        return self.word(self.heads[pos])

    def lexico_syntactic(self, i: int) -> List[str]:
        """Head-projection features: the word with its maximal projection, the
        projection's child on the path to the word and that child's right sibling"""
        word = self.word(i).lower()
        n = self.maximal_projection(i)
        n_label = self.label(n)
        feats = [f"{word}|{n_label}"]
        path = self.leaf_positions[i]
        if len(path) - len(n) >= 2:
            child = path[:len(n) + 1]
            feats.append(f"{n_label}>{self.label(child)}|{self.head_word(child).lower()}")
            node = self.tree[n] if n else self.tree
            sibling = n + (child[-1] + 1,)
            if child[-1] + 1 < len(node) and isinstance(node[child[-1] + 1], Tree):
                feats.append(f"{self.label(child)}+{self.label(sibling)}|{self.head_word(sibling).lower()}")
        return feats

    # --- productions, phrases, clauses ----------------------------------------

    def productions(self, start: int = 0, end: Optional[int] = None) -> List[str]:
        """Non-lexical productions of nodes lying completely inside leaves [start, end)"""
        end = len(self) if end is None else end
        rules = []
        for pos, (s, e) in sorted(self.spans.items()):
            if s < start or e > end:
                continue
            node = self.tree[pos] if pos else self.tree
            if all(isinstance(c, Tree) for c in node):
                rhs = " ".join(base_label(c.label()) for c in node)
                rules.append(f"{base_label(node.label())}->{rhs}")
        return rules

    def phrases(self, category: str, start: int = 0, end: Optional[int] = None) -> List[str]:
        end = len(self) if end is None else end
        leaves = self.leaves
        found = []
        for pos, (s, e) in sorted(self.spans.items()):
            if s >= start and e <= end and self.label(pos) == category:
                found.append(" ".join(leaves[s:e]).lower())
        return found

    def count_label(self, prefix: str) -> int:
        return sum(1 for pos in self.spans if self.label(pos).startswith(prefix))


@lru_cache(maxsize=8192)
def parse_tree(bracketed: str) -> Optional[SyntaxTree]:
    """Read a bracketed parse; None when it cannot be read"""
    try:
        tree = ParentedTree.fromstring(bracketed)
    except ValueError as e:
        log.warning("unreadable parse tree: %s", e)
        return None
    # A bare "(ROOT (S ...))" wrapper adds nothing but depth
    if tree.label() in ("", "ROOT", "TOP") and len(tree) == 1 and isinstance(tree[0], Tree):
        tree = tree[0].copy(deep=True)
    return SyntaxTree(tree)
