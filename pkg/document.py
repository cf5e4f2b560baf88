"""Document object model of a persuasive essay.

Documents are built once by the corpus loader and treated as immutable
afterwards; predictions produce new documents through `with_annotations`.
"""

import bisect
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from config import ComponentType, RelationType, Stance

Span = Tuple[int, int]


@dataclass
class Token:
    surface: str
    char_start: int
    char_end: int
    sent_index: int
    para_index: int
    index: int = 0
    pos: Optional[str] = None
    lemma: Optional[str] = None

    @property
    def norm(self) -> str:
        """Lemma when a lemma layer was supplied, lowercased surface otherwise"""
        return (self.lemma or self.surface).lower()

    @property
    def is_punct(self) -> bool:
        return not any(ch.isalnum() for ch in self.surface)


@dataclass
class Sentence:
    index: int
    para_index: int
    char_start: int
    char_end: int
    tokens: List[Token] = None
    tree: Optional[str] = None
    dependencies: List[Dict] = None
    sentiment: Optional[List[float]] = None

    def __post_init__(self):
        if self.tokens is None:
            self.tokens = []
        if self.dependencies is None:
            self.dependencies = []


@dataclass
class Paragraph:
    index: int
    char_start: int
    char_end: int
    sentences: List[Sentence] = None

    def __post_init__(self):
        if self.sentences is None:
            self.sentences = []

    @property
    def tokens(self) -> List[Token]:
        return [t for s in self.sentences for t in s.tokens]


@dataclass
class ArgumentComponent:
    id: str
    ctype: ComponentType
    start: int
    end: int
    stance: Optional[Stance] = None
    preceding_span: Optional[Span] = None
    text: str = ""

    @property
    def span(self) -> Span:
        return (self.start, self.end)

    def overlaps(self, start: int, end: int) -> bool:
        return self.start < end and start < self.end


@dataclass
class ArgumentativeRelation:
    id: str
    source: str
    target: str
    rtype: RelationType = RelationType.SUPPORT


@dataclass
class DiscourseRelation:
    """PDTB-style relation triple from the sidecar discourse layer"""
    rtype: str
    explicit: bool
    arg1: Span
    arg2: Span


@dataclass
class Document:
    essay_id: str
    text: str
    paragraphs: List[Paragraph] = None
    components: List[ArgumentComponent] = None
    relations: List[ArgumentativeRelation] = None
    title: Optional[Span] = None
    discourse: List[DiscourseRelation] = None
    layers: Tuple[str, ...] = ()

    _tokens: Optional[List[Token]] = field(default=None, init=False, repr=False, compare=False)
    _starts: Optional[List[int]] = field(default=None, init=False, repr=False, compare=False)
    _by_id: Optional[Dict[str, ArgumentComponent]] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.paragraphs is None:
            self.paragraphs = []
        if self.components is None:
            self.components = []
        if self.relations is None:
            self.relations = []
        if self.discourse is None:
            self.discourse = []
        self.components = sorted(self.components, key=lambda c: (c.start, c.end))

    # --- containers -------------------------------------------------------

    @property
    def sentences(self) -> List[Sentence]:
        return [s for p in self.paragraphs for s in p.sentences]

    @property
    def tokens(self) -> List[Token]:
        if self._tokens is None:
            self._tokens = [t for p in self.paragraphs for s in p.sentences for t in s.tokens]
            self._starts = [t.char_start for t in self._tokens]
        return self._tokens

    def has_layer(self, name: str) -> bool:
        return name in self.layers

    def sentence(self, index: int) -> Sentence:
        return self.sentences[index]

    # --- components -------------------------------------------------------

    def component(self, cid: str) -> ArgumentComponent:
        if self._by_id is None:
            self._by_id = {c.id: c for c in self.components}
        return self._by_id[cid]

    def token_range(self, start: int, end: int) -> Tuple[int, int]:
        """Essay-wide token indices [first, last) overlapping the character span"""
        tokens = self.tokens
        first = bisect.bisect_right(self._starts, start) - 1
        if first < 0 or tokens[first].char_end <= start:
            first += 1
        last = bisect.bisect_left(self._starts, end)
        return max(first, 0), max(last, first)

    def component_tokens(self, comp: ArgumentComponent) -> List[Token]:
        first, last = self.token_range(comp.start, comp.end)
        return self.tokens[first:last]

    def paragraph_index(self, comp: ArgumentComponent) -> int:
        for para in self.paragraphs:
            if para.char_start <= comp.start < para.char_end:
                return para.index
        return -1

    def sentence_index(self, comp: ArgumentComponent) -> int:
        toks = self.component_tokens(comp)
        return toks[0].sent_index if toks else -1

    def paragraph_components(self, para_index: int) -> List[ArgumentComponent]:
        para = self.paragraphs[para_index]
        return [c for c in self.components if para.char_start <= c.start < para.char_end]

    def components_by_paragraph(self) -> List[List[ArgumentComponent]]:
        return [self.paragraph_components(p.index) for p in self.paragraphs]

    def preceding_tokens(self, comp: ArgumentComponent) -> List[Token]:
        """Tokens of the covering sentence before the component, after any earlier component"""
        toks = self.component_tokens(comp)
        if not toks:
            return []
        sent = self.sentences[toks[0].sent_index]
        floor = sent.char_start
        for other in self.components:
            if other is comp or other.end > comp.start:
                continue
            if other.end > floor:
                floor = other.end
        return [t for t in sent.tokens if t.char_start >= floor and t.char_end <= comp.start]

    def outgoing(self, cid: str) -> List[ArgumentativeRelation]:
        return [r for r in self.relations if r.source == cid]

    def incoming(self, cid: str) -> List[ArgumentativeRelation]:
        return [r for r in self.relations if r.target == cid]

    def covered_text(self, start: int, end: int) -> str:
        return self.text[start:end]

    def with_annotations(self, components: List[ArgumentComponent],
                         relations: List[ArgumentativeRelation]) -> "Document":
        """Copy of the document carrying another annotation layer over the same text"""
        return replace(self, components=list(components), relations=list(relations))
