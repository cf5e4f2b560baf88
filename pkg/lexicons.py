"""Lexical resources: argumentative indicator lists, first-person pronouns,
subjectivity lexicon and word-embedding loaders."""

import csv
import logging
import os
from typing import Dict, List, Optional, Sequence

import numpy as np

from config import ConfigError

log = logging.getLogger(__name__)

# Matched case-sensitively, entries exactly as collected from the training essays
FORWARD_INDICATORS: List[str] = [
    "As a result", "As the consequence", "Because", "Clearly", "Consequently",
    "Considering this subject", "Furthermore", "Hence", "leading to the consequence",
    "so", "So", "taking account on this fact", "That is the reason why",
    "The reason is that", "Therefore", "therefore", "This means that", "This shows that",
    "This will result", "Thus", "thus", "Thus, it is clearly seen that", "Thus, it is seen",
    "Thus, the example shows",
]

BACKWARD_INDICATORS: List[str] = [
    "Additionally", "As a matter of fact", "because", "Besides", "due to", "Finally",
    "First of all", "Firstly", "for example", "For example", "For instance", "for instance",
    "Furthermore", "has proved it", "In addition", "In addition to this", "In the first place",
    "is due to the fact that", "It should also be noted", "Moreover", "On one hand",
    "On the one hand", "On the other hand", "One of the main reasons", "Secondly", "Similarly",
    "since", "Since", "So", "The reason", "To begin with", "To offer an instance", "What is more",
]

THESIS_INDICATORS: List[str] = [
    "All in all", "All things considered", "As far as I am concerned", "Based on some reasons",
    "by analyzing both the views", "considering both the previous fact", "Finally",
    "For the reasons mentioned above", "From explanation above", "From this point of view",
    "I agree that", "I agree with", "I agree with the statement that", "I believe",
    "I believe that", "I do not agree with this statement", "I firmly believe that",
    "I highly advocate that", "I highly recommend", "I strongly believe that", "I think that",
    "I think the view is", "I totally agree", "I totally agree to this opinion",
    "I would have to argue that", "I would reaffirm my position that", "In conclusion",
    "in conclusion", "in my opinion", "In my opinion", "In my personal point of view",
    "in my point of view", "In my point of view", "In summary",
    "In the light of the facts outlined above", "it can be said that", "it is clear that",
    "it seems to me that", "my deep conviction", "My sentiments", "Overall", "Personally",
    "the above explanations and example shows that", "This, however", "To conclude",
    "To my way of thinking", "To sum up", "Ultimately",
]

REBUTTAL_INDICATORS: List[str] = [
    "Admittedly", "although", "Although", "besides these advantages", "but", "But",
    "Even though", "even though", "However", "Otherwise",
]

FIRST_PERSON: List[str] = ["I", "me", "my", "mine", "myself"]

INDICATOR_LISTS: Dict[str, List[str]] = {
    "forward": FORWARD_INDICATORS,
    "backward": BACKWARD_INDICATORS,
    "thesis": THESIS_INDICATORS,
    "rebuttal": REBUTTAL_INDICATORS,
}


class IndicatorLexicon:
    """Token-level matcher for the multi-word indicator lists"""

    def __init__(self, lists: Optional[Dict[str, List[str]]] = None):
        self.lists = lists or INDICATOR_LISTS
        self._patterns = {
            kind: [tuple(_split_entry(entry)) for entry in entries]
            for kind, entries in self.lists.items()
        }

    def matches(self, surfaces: Sequence[str]) -> Dict[str, List[str]]:
        """Indicators of each kind occurring as contiguous token runs in `surfaces`"""
        found = {}
        for kind, patterns in self._patterns.items():
            hits = []
            for entry, pattern in zip(self.lists[kind], patterns):
                if _contains(surfaces, pattern):
                    hits.append(entry)
            found[kind] = hits
        return found

    @staticmethod
    def first_person(surfaces: Sequence[str]) -> bool:
        return any(s in FIRST_PERSON for s in surfaces)


def _split_entry(entry: str) -> List[str]:
    return entry.replace(",", " ,").split()


def _contains(surfaces: Sequence[str], pattern: Sequence[str]) -> bool:
    n = len(pattern)
    if n == 0 or n > len(surfaces):
        return False
    first = pattern[0]
    for i in range(len(surfaces) - n + 1):
        if surfaces[i] == first and tuple(surfaces[i:i + n]) == tuple(pattern):
            return True
    return False


def load_subjectivity_lexicon(path: Optional[str]) -> Dict[str, str]:
    """`word,polarity` CSV; polarity is positive, negative or neutral"""
    if not path:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"subjectivity lexicon '{path}' not found")
    lexicon = {}
    with open(path, 'r', encoding='utf-8', newline='') as f:
        for row in csv.reader(f):
            if len(row) < 2 or row[0].startswith('#'):
                continue
            word, polarity = row[0].strip().lower(), row[1].strip().lower()
            if polarity in ("positive", "negative", "neutral"):
                lexicon[word] = polarity
    log.info("loaded %d subjectivity entries from %s", len(lexicon), path)
    return lexicon


class Embeddings:
    """Word vectors in the word2vec text format `word v1 ... vd`"""

    def __init__(self, vectors: Dict[str, np.ndarray], dim: int):
        self.vectors = vectors
        self.dim = dim

    @classmethod
    def load(cls, path: Optional[str]) -> Optional["Embeddings"]:
        if not path:
            return None
        if not os.path.exists(path):
            raise ConfigError(f"embedding file '{path}' not found")
        vectors = {}
        dim = 0
        with open(path, 'r', encoding='utf-8') as f:
            for line_no, line in enumerate(f, start=1):
                parts = line.rstrip().split(' ')
                if line_no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                    continue  # header "count dim"
                if len(parts) < 2:
                    continue
                vec = np.asarray(parts[1:], dtype=np.float64)
                if dim == 0:
                    dim = len(vec)
                elif len(vec) != dim:
                    raise ConfigError(f"{path}:{line_no}: expected {dim} dimensions, got {len(vec)}")
                vectors[parts[0]] = vec
        log.info("loaded %d embeddings (dim %d) from %s", len(vectors), dim, path)
        return cls(vectors, dim)

    def sum(self, words: Sequence[str]) -> np.ndarray:
        total = np.zeros(self.dim)
        for word in words:
            vec = self.vectors.get(word)
            if vec is None:
                vec = self.vectors.get(word.lower())
            if vec is not None:
                total += vec
        return total
