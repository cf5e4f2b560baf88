"""Feature extraction for the four parsing stages.

Every feature name is prefixed by the value of its FeatureGroup ("struct:",
"syn:", ...), so disabling a group removes exactly its prefixed names. Binary
features are present only when they fire; numeric features are always present.
Token counts enter as log1p values to keep them on the scale of the binary
features.
"""

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from config import (
    ComponentType,
    ContractError,
    FeatureGroup,
    IobLabel,
    PipelineConfig,
    Task,
)
from corpus import encode_iob
from document import ArgumentComponent, Document, Sentence, Token
from lexicons import Embeddings, IndicatorLexicon
from syntax import SyntaxTree, parse_tree

log = logging.getLogger(__name__)

FeatureVector = Dict[str, float]

INCOMING = "incoming"
OUTGOING = "outgoing"
DIRECTIONS = (INCOMING, OUTGOING)

KEY_SEP = "\t"

# Used to pick nouns when no POS layer is available
FUNCTION_WORDS = frozenset("""
a about above after again against all also am an and any are as at be because been before being
below between both but by can could did do does doing down during each few for from further had has
have having he her here hers herself him himself his how i if in into is it its itself just me more
most my myself no nor not now of off on once only or other our ours ourselves out over own same she
should so some such than that the their theirs them themselves then there these they this those
through to too under until up very was we were what when where which while who whom why will with
would you your yours yourself yourselves
""".split())

STRUCT = FeatureGroup.STRUCTURAL
SYN = FeatureGroup.SYNTACTIC
LEXSYN = FeatureGroup.LEXSYN
PROB = FeatureGroup.PROBABILITY
LEX = FeatureGroup.LEXICAL
IND = FeatureGroup.INDICATOR
CTX = FeatureGroup.CONTEXTUAL
DISC = FeatureGroup.DISCOURSE
EMB = FeatureGroup.EMBEDDING
PMI = FeatureGroup.PMI
SHNO = FeatureGroup.SHARED_NOUNS
SENTI = FeatureGroup.SENTIMENT


def _key(tokens: Sequence[str]) -> str:
    return KEY_SEP.join(tokens)


def _log1p(count: int) -> float:
    return math.log1p(count)


def most_frequent(counts: Counter, k: int) -> List[str]:
    """Top-k keys by count, ties broken lexicographically"""
    return [key for key, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]


# --- trainable tables -------------------------------------------------------

def estimate_argb_probabilities(docs: Iterable[Document]) -> Dict[str, float]:
    """P(Arg-B | preceding n tokens) for n = 1..3, over essay-wide token sequences"""
    seen: Counter = Counter()
    begins: Counter = Counter()
    for doc in docs:
        labels = encode_iob(doc)
        norms = [t.norm for t in doc.tokens]
        for i, label in enumerate(labels):
            for n in (1, 2, 3):
                if i - n < 0:
                    break
                key = _key(norms[i - n:i])
                seen[key] += 1
                if label is IobLabel.ARG_B:
                    begins[key] += 1
    return {key: begins[key] / total for key, total in seen.items()}


def estimate_type_probabilities(docs: Iterable[Document]) -> Dict[str, Dict[str, float]]:
    """P(type | preceding tokens) keyed by the full preceding-token sequence"""
    counts: Dict[str, Counter] = defaultdict(Counter)
    for doc in docs:
        for comp in doc.components:
            preceding = doc.preceding_tokens(comp)
            if not preceding:
                continue
            counts[_key([t.norm for t in preceding])][comp.ctype.value] += 1
    table = {}
    for key, by_type in counts.items():
        total = sum(by_type.values())
        table[key] = {ctype: n / total for ctype, n in by_type.items()}
    return table


def estimate_pmi(docs: Iterable[Document]) -> Dict[str, float]:
    """PMI between a lemma and a relation direction, over components.

    p(t) and p(d) are the shares of components containing t and having at least one
    relation of direction d; unseen (t, d) combinations are absent (read as 0).
    """
    n_components = 0
    with_term: Counter = Counter()
    with_direction: Counter = Counter()
    joint: Counter = Counter()
    for doc in docs:
        sources = {r.source for r in doc.relations}
        targets = {r.target for r in doc.relations}
        for comp in doc.components:
            n_components += 1
            lemmas = {t.norm for t in doc.component_tokens(comp) if not t.is_punct}
            directions = []
            if comp.id in targets:
                directions.append(INCOMING)
            if comp.id in sources:
                directions.append(OUTGOING)
            for d in directions:
                with_direction[d] += 1
            for lemma in lemmas:
                with_term[lemma] += 1
                for d in directions:
                    joint[(lemma, d)] += 1
    table = {}
    for (lemma, d), n in joint.items():
        p_td = n / n_components
        p_t = with_term[lemma] / n_components
        p_d = with_direction[d] / n_components
        table[_key([lemma, d])] = math.log(p_td / (p_t * p_d))
    return table


@dataclass
class FeatureTables:
    """Statistics fitted on training essays only"""
    argb: Dict[str, float] = field(default_factory=dict)
    type_probs: Dict[str, Dict[str, float]] = field(default_factory=dict)
    pmi: Dict[str, float] = field(default_factory=dict)
    dependency_vocab: List[str] = field(default_factory=list)
    unigram_vocab: List[str] = field(default_factory=list)
    production_vocab: List[str] = field(default_factory=list)

    def __post_init__(self):
        self._dep_set = set(self.dependency_vocab)
        self._uni_set = set(self.unigram_vocab)
        self._prod_set = set(self.production_vocab)

    def argb_probability(self, preceding: Sequence[str]) -> float:
        best = 0.0
        for n in (1, 2, 3):
            if len(preceding) < n:
                break
            best = max(best, self.argb.get(_key(preceding[-n:]), 0.0))
        return best

    def type_probability(self, preceding: Sequence[str]) -> Dict[str, float]:
        if not preceding:
            return {}
        return self.type_probs.get(_key(preceding), {})

    def pmi_of(self, lemma: str, direction: str) -> float:
        return self.pmi.get(_key([lemma, direction]), 0.0)

    def in_dependency_vocab(self, key: str) -> bool:
        return key in self._dep_set

    def in_unigram_vocab(self, key: str) -> bool:
        return key in self._uni_set

    def in_production_vocab(self, key: str) -> bool:
        return key in self._prod_set

    @classmethod
    def fit(cls, docs: Sequence[Document], config: PipelineConfig) -> "FeatureTables":
        dep_counts: Counter = Counter()
        uni_counts: Counter = Counter()
        prod_counts: Counter = Counter()
        for doc in docs:
            for comp in doc.components:
                toks = doc.component_tokens(comp)
                if not toks:
                    continue
                words = ([] if config.microtext else doc.preceding_tokens(comp)) + toks
                uni_counts.update(t.norm for t in words if not t.is_punct)
                sent = doc.sentences[toks[0].sent_index]
                start, end = _local_span(sent, toks)
                dep_counts.update(_dependency_keys(sent, start, end))
                tree = sentence_tree(sent)
                if tree is not None:
                    prod_counts.update(tree.productions(start, end))
        tables = cls(
            argb=estimate_argb_probabilities(docs),
            type_probs=estimate_type_probabilities(docs),
            pmi=estimate_pmi(docs),
            dependency_vocab=most_frequent(dep_counts, config.dependency_cutoff),
            unigram_vocab=most_frequent(uni_counts, config.unigram_cutoff),
            production_vocab=most_frequent(prod_counts, config.production_cutoff),
        )
        log.info("fitted feature tables: %d Arg-B n-grams, %d type contexts, %d PMI entries",
                 len(tables.argb), len(tables.type_probs), len(tables.pmi))
        return tables

    def to_dict(self) -> Dict:
        return {
            "argb": self.argb,
            "type_probs": self.type_probs,
            "pmi": self.pmi,
            "dependency_vocab": self.dependency_vocab,
            "unigram_vocab": self.unigram_vocab,
            "production_vocab": self.production_vocab,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "FeatureTables":
        return cls(**{k: data.get(k) or v for k, v in cls().to_dict().items()})


# --- sentence helpers -------------------------------------------------------

def sentence_tree(sent: Sentence) -> Optional[SyntaxTree]:
    if not sent.tree:
        return None
    tree = parse_tree(sent.tree)
    if tree is None or len(tree) != len(sent.tokens):
        return None
    return tree


def _local_span(sent: Sentence, toks: Sequence[Token]) -> Tuple[int, int]:
    base = sent.tokens[0].index
    return toks[0].index - base, toks[-1].index - base + 1


def _dependency_keys(sent: Sentence, start: int, end: int) -> List[str]:
    keys = []
    for edge in sent.dependencies:
        gov, dep = edge.get("gov", -1), edge.get("dep", -1)
        if start <= gov < end and start <= dep < end:
            keys.append(f"{sent.tokens[gov].norm}>{sent.tokens[dep].norm}")
    return keys


def _tokens_between(doc: Document, para_index: int, start: int, end: int) -> List[Token]:
    return [t for t in doc.paragraphs[para_index].tokens if t.char_start >= start and t.char_end <= end]


class _DocContext:
    """Per-document precomputations shared by all extractors"""

    def __init__(self, doc: Document):
        self.doc = doc
        self.trees = [sentence_tree(s) for s in doc.sentences]
        self.para_comps = doc.components_by_paragraph()
        self.comp_para: Dict[str, int] = {}
        self.comp_rank: Dict[str, int] = {}
        for p, comps in enumerate(self.para_comps):
            for k, comp in enumerate(comps):
                self.comp_para[comp.id] = p
                self.comp_rank[comp.id] = k
        self.last_para = len(doc.paragraphs) - 1
        para_tokens = [p.tokens for p in doc.paragraphs]
        self.para_token_counts = [len(t) for t in para_tokens]
        self.para_first_token = [t[0].index if t else 0 for t in para_tokens]
        # (category, text, char_start, char_end, paragraph) of every NP and VP
        self.phrases: List[Tuple[str, str, int, int, int]] = []
        for sent, tree in zip(doc.sentences, self.trees):
            if tree is None:
                continue
            for pos, (s, e) in tree.spans.items():
                category = tree.label(pos)
                if category in ("NP", "VP"):
                    text = " ".join(tree.leaves[s:e]).lower()
                    self.phrases.append((category, text, sent.tokens[s].char_start,
                                         sent.tokens[e - 1].char_end, sent.para_index))

    def has_trees(self) -> bool:
        return any(t is not None for t in self.trees)


class FeatureExtractor:
    """Binds fitted tables and lexical resources to the per-stage extractors"""

    def __init__(self, config: PipelineConfig, tables: Optional[FeatureTables] = None,
                 lexicon: Optional[IndicatorLexicon] = None, embeddings: Optional[Embeddings] = None,
                 subjectivity: Optional[Dict[str, str]] = None):
        self.config = config
        self.tables = tables or FeatureTables()
        self.lexicon = lexicon or IndicatorLexicon()
        self.embeddings = embeddings
        self.subjectivity = subjectivity or {}
        self._ctx: Optional[_DocContext] = None
        self._warned: Set[Tuple[str, str]] = set()

    # --- plumbing ---------------------------------------------------------

    def _context(self, doc: Document) -> _DocContext:
        if self._ctx is None or self._ctx.doc is not doc:
            self._ctx = _DocContext(doc)
        return self._ctx

    def _groups(self, task: Task, groups: Optional[Iterable[FeatureGroup]]) -> Set[FeatureGroup]:
        return set(groups) if groups is not None else set(self.config.groups_for(task))

    def _available(self, ok: bool, layer: str, group: FeatureGroup) -> bool:
        if not ok and (layer, group.value) not in self._warned:
            self._warned.add((layer, group.value))
            log.warning("no %s layer: %s features that need it are disabled", layer, group.value)
        return ok

    def _genre(self) -> bool:
        return not self.config.microtext

    def _words(self, doc: Document, comp: ArgumentComponent) -> Tuple[List[Token], List[Token]]:
        toks = doc.component_tokens(comp)
        pre = [] if self.config.microtext else doc.preceding_tokens(comp)
        return pre, toks

    def _indicators(self, prefix: str, tokens: Sequence[Token], name: str, f: FeatureVector):
        for kind, hits in self.lexicon.matches([t.surface for t in tokens]).items():
            if hits:
                f[f"{prefix}{name}{kind}"] = 1.0

    def _discourse_triples(self, doc: Document, comp: ArgumentComponent) -> List[str]:
        triples = []
        for rel in doc.discourse:
            mode = "exp" if rel.explicit else "imp"
            if comp.overlaps(*rel.arg1):
                triples.append(f"{rel.rtype}_{mode}_Arg1")
            if comp.overlaps(*rel.arg2):
                triples.append(f"{rel.rtype}_{mode}_Arg2")
        return triples

    def _pos_distribution(self, toks: Sequence[Token], prefix: str, f: FeatureVector):
        tags = Counter(t.pos for t in toks if t.pos)
        total = sum(tags.values())
        for tag, n in sorted(tags.items()):
            f[f"{prefix}{tag}"] = n / total

    def _embedding(self, words: Sequence[Token], prefix: str, f: FeatureVector):
        vec = self.embeddings.sum([t.surface for t in words])
        for k, value in enumerate(vec):
            if value:
                f[f"{prefix}{k}"] = float(value)

    def _productions(self, ctx: _DocContext, toks: Sequence[Token]) -> List[str]:
        sent = ctx.doc.sentences[toks[0].sent_index]
        tree = ctx.trees[toks[0].sent_index]
        if tree is None:
            return []
        start, end = _local_span(sent, toks)
        return sorted(set(tree.productions(start, end)))

    # --- identification ---------------------------------------------------

    def sequence_features(self, doc: Document, groups: Optional[Iterable[FeatureGroup]] = None) -> List[FeatureVector]:
        """One feature vector per essay token, in essay order"""
        enabled = self._groups(Task.IDENTIFY, groups)
        ctx = self._context(doc)
        return [self._token_features(ctx, s_idx, k, enabled)
                for s_idx, sent in enumerate(doc.sentences) for k in range(len(sent.tokens))]

    def token_features(self, doc: Document, index: int, groups: Optional[Iterable[FeatureGroup]] = None) -> FeatureVector:
        tok = doc.tokens[index]
        sent = doc.sentences[tok.sent_index]
        return self._token_features(self._context(doc), tok.sent_index, tok.index - sent.tokens[0].index,
                                    self._groups(Task.IDENTIFY, groups))

    def _token_features(self, ctx: _DocContext, s_idx: int, k: int, groups: Set[FeatureGroup]) -> FeatureVector:
        doc = ctx.doc
        sent = doc.sentences[s_idx]
        toks = sent.tokens
        tok = toks[k]
        n = len(toks)
        prev_tok = toks[k - 1] if k > 0 else None
        next_tok = toks[k + 1] if k + 1 < n else None
        f: FeatureVector = {}

        if STRUCT in groups:
            para = doc.paragraphs[tok.para_index]
            para_first = ctx.para_first_token[tok.para_index]
            if self._genre():
                if tok.para_index == 0:
                    f["struct:in_intro"] = 1.0
                if tok.para_index == ctx.last_para:
                    f["struct:in_concl"] = 1.0
            if k == 0:
                f["struct:first_in_sent"] = 1.0
            if k == n - 1:
                f["struct:last_in_sent"] = 1.0
            f["struct:tok_doc_rel"] = tok.index / max(1, len(doc.tokens))
            f["struct:tok_para_rel"] = (tok.index - para_first) / max(1, ctx.para_token_counts[tok.para_index])
            f["struct:tok_sent_rel"] = k / max(1, n)
            f["struct:tok_doc_abs"] = _log1p(tok.index)
            f["struct:tok_para_abs"] = _log1p(tok.index - para_first)
            f[f"struct:tok_sent_abs={min(k, 10)}"] = 1.0
            if tok.is_punct:
                f["struct:is_punct"] = 1.0
            if tok.surface == ".":
                f["struct:is_fullstop"] = 1.0
            for side, other in (("before", next_tok), ("after", prev_tok)):
                if other is None:
                    continue
                if other.is_punct:
                    f[f"struct:{side}_punct"] = 1.0
                if other.surface == ".":
                    f[f"struct:{side}_fullstop"] = 1.0
                if other.surface == ",":
                    f[f"struct:{side}_comma"] = 1.0
                if other.surface == ";":
                    f[f"struct:{side}_semicolon"] = 1.0
            para_sents = para.sentences
            rank = next((i for i, s in enumerate(para_sents) if s.index == sent.index), 0)
            f["struct:sent_doc_abs"] = _log1p(sent.index)
            f["struct:sent_doc_rel"] = sent.index / max(1, len(doc.sentences))
            f[f"struct:sent_para_abs={min(rank, 5)}"] = 1.0
            f["struct:sent_para_rel"] = rank / max(1, len(para_sents))
            if rank == 0:
                f["struct:first_sent_in_para"] = 1.0
            if rank == len(para_sents) - 1:
                f["struct:last_sent_in_para"] = 1.0

        tree = ctx.trees[s_idx]
        if SYN in groups:
            if tok.pos:
                f[f"syn:pos={tok.pos}"] = 1.0
            if self._available(tree is not None, "constituency", SYN):
                if k == 0:
                    f["syn:lcapre"] = -1.0
                else:
                    f["syn:lcapre"] = tree.lca_ratio(k, k - 1)
                    f[f"syn:lcapre_type={tree.lca_label(k, k - 1)}"] = 1.0
                if k == n - 1:
                    f["syn:lcafol"] = -1.0
                else:
                    f["syn:lcafol"] = tree.lca_ratio(k, k + 1)
                    f[f"syn:lcafol_type={tree.lca_label(k, k + 1)}"] = 1.0

        if LEXSYN in groups:
            f[f"lexsyn:w={tok.surface.lower()}"] = 1.0
            if tree is not None:
                for feat in tree.lexico_syntactic(k):
                    f[f"lexsyn:{feat}"] = 1.0

        if PROB in groups:
            start = max(0, tok.index - 3)
            f["prob:argb"] = self.tables.argb_probability([t.norm for t in doc.tokens[start:tok.index]])
        return f

    # --- component classification ------------------------------------------

    def component_features(self, doc: Document, comp: ArgumentComponent,
                           groups: Optional[Iterable[FeatureGroup]] = None) -> FeatureVector:
        enabled = self._groups(Task.CLASSIFY, groups)
        ctx = self._context(doc)
        pre, toks = self._words(doc, comp)
        if not toks:
            return {}
        words = pre + toks
        sent = doc.sentences[toks[0].sent_index]
        p = ctx.comp_para[comp.id]
        rank = ctx.comp_rank[comp.id]
        n_comps = len(ctx.para_comps[p])
        f: FeatureVector = {}

        if LEX in enabled:
            for lemma in sorted({t.norm for t in words if not t.is_punct}):
                f[f"lex:uni={lemma}"] = 1.0
            start, end = _local_span(sent, toks)
            for key in _dependency_keys(sent, start, end):
                if self.tables.in_dependency_vocab(key):
                    f[f"lex:dep={key}"] = 1.0

        if STRUCT in enabled:
            self._component_structure(ctx, comp, toks, sent, p, rank, n_comps, f)
            f["struct:para_tokens"] = _log1p(ctx.para_token_counts[p])
            if self._genre():
                if p == 0:
                    f["struct:in_intro"] = 1.0
                if p == ctx.last_para:
                    f["struct:in_concl"] = 1.0

        if IND in enabled:
            self._indicators("ind:", words, "", f)
            if IndicatorLexicon.first_person([t.surface for t in words]):
                f["ind:first_person"] = 1.0

        if CTX in enabled:
            para = doc.paragraphs[p]
            self._indicators("ctx:", _tokens_between(doc, p, para.char_start, comp.start), "before_", f)
            self._indicators("ctx:", _tokens_between(doc, p, comp.end, para.char_end), "after_", f)
            if self._genre() and self._available(ctx.has_trees(), "constituency", CTX):
                self._shared_phrases(ctx, comp, f)

        if SYN in enabled:
            self._pos_distribution(toks, "syn:pos_dist=", f)
            tree = ctx.trees[toks[0].sent_index]
            if self._available(tree is not None, "constituency", SYN):
                f["syn:subclauses"] = float(tree.count_label("SBAR"))
                f["syn:tree_depth"] = float(tree.depth)
            verbs = [t.pos for t in toks if t.pos and (t.pos.startswith("VB") or t.pos == "MD")]
            if verbs:
                f[f"syn:tense={_tense(verbs[0])}"] = 1.0
            if any(t.pos == "MD" for t in toks):
                f["syn:modal"] = 1.0

        if PROB in enabled and not self.config.microtext:
            probs = self.tables.type_probability([t.norm for t in doc.preceding_tokens(comp)])
            for ctype in (ComponentType.MAJOR_CLAIM, ComponentType.CLAIM, ComponentType.PREMISE):
                f[f"prob:type={ctype.value}"] = probs.get(ctype.value, 0.0)

        if DISC in enabled and self._available(doc.has_layer("discourse"), "discourse", DISC):
            for triple in self._discourse_triples(doc, comp):
                f[f"disc:{triple}"] = 1.0

        if EMB in enabled and self._available(self.embeddings is not None, "embedding", EMB):
            self._embedding(words, "emb:", f)
        return f

    def _component_structure(self, ctx: _DocContext, comp: ArgumentComponent, toks: Sequence[Token],
                             sent: Sentence, p: int, rank: int, n_comps: int, f: FeatureVector):
        before = sum(1 for t in sent.tokens if t.char_end <= comp.start)
        after = sum(1 for t in sent.tokens if t.char_start >= comp.end)
        f["struct:comp_tokens"] = _log1p(len(toks))
        f["struct:sent_tokens"] = _log1p(len(sent.tokens))
        f["struct:sent_preceding_tokens"] = _log1p(before)
        f["struct:sent_following_tokens"] = _log1p(after)
        f["struct:comp_sent_ratio"] = len(toks) / max(1, len(sent.tokens))
        f["struct:para_comps"] = float(n_comps)
        f["struct:preceding_comps"] = float(rank)
        f["struct:following_comps"] = float(n_comps - rank - 1)
        f["struct:para_rel_pos"] = (rank + 1) / n_comps
        if rank == 0:
            f["struct:first_in_para"] = 1.0
        if rank == n_comps - 1:
            f["struct:last_in_para"] = 1.0

    def _shared_phrases(self, ctx: _DocContext, comp: ArgumentComponent, f: FeatureVector):
        own = [(cat, text) for cat, text, s, e, _ in ctx.phrases if comp.start <= s and e <= comp.end]
        for where, para_index in (("intro", 0), ("concl", ctx.last_para)):
            for category in ("NP", "VP"):
                pool = {text for cat, text, s, e, p in ctx.phrases
                        if p == para_index and cat == category and not (comp.start <= s and e <= comp.end)}
                shared = sum(1 for cat, text in own if cat == category and text in pool)
                name = category.lower()
                f[f"ctx:shared_{name}_{where}"] = float(shared)
                if shared:
                    f[f"ctx:has_shared_{name}_{where}"] = 1.0

    # --- relation identification --------------------------------------------

    def pair_features(self, doc: Document, source: ArgumentComponent, target: ArgumentComponent,
                      groups: Optional[Iterable[FeatureGroup]] = None) -> FeatureVector:
        if source.id == target.id:
            raise ContractError(f"{doc.essay_id}: pair with identical source and target {source.id}")
        ctx = self._context(doc)
        p = ctx.comp_para.get(source.id)
        if p is None or p != ctx.comp_para.get(target.id):
            raise ContractError(f"{doc.essay_id}: {source.id} and {target.id} are not in the same paragraph")
        enabled = self._groups(Task.RELATIONS, groups)
        sides = {"src": source, "tgt": target}
        words = {name: self._words(doc, comp) for name, comp in sides.items()}
        if not words["src"][1] or not words["tgt"][1]:
            return {}
        n_comps = len(ctx.para_comps[p])
        f: FeatureVector = {}

        if LEX in enabled:
            for name, (pre, toks) in words.items():
                for lemma in sorted({t.norm for t in pre + toks if not t.is_punct}):
                    if self.tables.in_unigram_vocab(lemma):
                        f[f"lex:{name}_uni={lemma}"] = 1.0

        if SYN in enabled:
            for name, (_, toks) in words.items():
                for tag in sorted({t.pos for t in toks if t.pos}):
                    f[f"syn:{name}_pos={tag}"] = 1.0
                for rule in self._productions(ctx, toks):
                    if self.tables.in_production_vocab(rule):
                        f[f"syn:{name}_prod={rule}"] = 1.0

        if STRUCT in enabled:
            rank_s, rank_t = ctx.comp_rank[source.id], ctx.comp_rank[target.id]
            f["struct:src_tokens"] = _log1p(len(words["src"][1]))
            f["struct:tgt_tokens"] = _log1p(len(words["tgt"][1]))
            f["struct:comps_between"] = float(abs(rank_s - rank_t) - 1)
            f["struct:para_comps"] = float(n_comps)
            if words["src"][1][0].sent_index == words["tgt"][1][0].sent_index:
                f["struct:same_sentence"] = 1.0
            if target.start < source.start:
                f["struct:target_before_source"] = 1.0
            for name, rank in (("src", rank_s), ("tgt", rank_t)):
                if rank == 0:
                    f[f"struct:{name}_first"] = 1.0
                if rank == n_comps - 1:
                    f[f"struct:{name}_last"] = 1.0
            if self._genre():
                if p == 0:
                    f["struct:in_intro"] = 1.0
                if p == ctx.last_para:
                    f["struct:in_concl"] = 1.0

        if IND in enabled:
            para = doc.paragraphs[p]
            for name, (pre, toks) in words.items():
                self._indicators("ind:", pre + toks, f"{name}_", f)
                comp = sides[name]
                self._indicators("ind:", _tokens_between(doc, p, para.char_start, comp.start), f"{name}_preceded_", f)
                self._indicators("ind:", _tokens_between(doc, p, comp.end, para.char_end), f"{name}_followed_", f)
            first, second = sorted((source, target), key=lambda c: c.start)
            self._indicators("ind:", _tokens_between(doc, p, first.end, second.start), "between_", f)

        if DISC in enabled and self._available(doc.has_layer("discourse"), "discourse", DISC):
            for name, comp in sides.items():
                for triple in self._discourse_triples(doc, comp):
                    f[f"disc:{name}_{triple}"] = 1.0

        if PMI in enabled:
            for name, (pre, toks) in words.items():
                lemmas = sorted({t.norm for t in pre + toks if not t.is_punct})
                for d in DIRECTIONS:
                    values = [self.tables.pmi_of(lemma, d) for lemma in lemmas]
                    positive = sum(1 for v in values if v > 0)
                    negative = sum(1 for v in values if v < 0)
                    f[f"pmi:{name}_pos_{d}"] = positive / max(1, len(values))
                    f[f"pmi:{name}_neg_{d}"] = negative / max(1, len(values))
                    if positive:
                        f[f"pmi:{name}_has_pos_{d}"] = 1.0
                    if negative:
                        f[f"pmi:{name}_has_neg_{d}"] = 1.0

        if SHNO in enabled:
            shared = _nouns(words["src"][1]) & _nouns(words["tgt"][1])
            f["shno:count"] = float(len(shared))
            if shared:
                f["shno:shared"] = 1.0
        return f

    # --- stance recognition -------------------------------------------------

    def stance_features(self, doc: Document, comp: ArgumentComponent,
                        groups: Optional[Iterable[FeatureGroup]] = None) -> FeatureVector:
        enabled = self._groups(Task.STANCE, groups)
        ctx = self._context(doc)
        pre, toks = self._words(doc, comp)
        if not toks:
            return {}
        words = pre + toks
        sent = doc.sentences[toks[0].sent_index]
        p = ctx.comp_para[comp.id]
        f: FeatureVector = {}

        if LEX in enabled:
            for lemma in sorted({t.norm for t in words if not t.is_punct}):
                f[f"lex:uni={lemma}"] = 1.0

        if SENTI in enabled:
            polarity = Counter(self.subjectivity.get(t.surface.lower()) or self.subjectivity.get(t.norm)
                               for t in toks)
            f["senti:positive"] = float(polarity["positive"])
            f["senti:negative"] = float(polarity["negative"])
            f["senti:neutral"] = float(polarity["neutral"])
            f["senti:pos_minus_neg"] = float(polarity["positive"] - polarity["negative"])
            if polarity["negative"]:
                f["senti:has_negative"] = 1.0
            if sent.sentiment:
                for k, score in enumerate(sent.sentiment):
                    f[f"senti:score{k}"] = score

        if SYN in enabled:
            self._pos_distribution(toks, "syn:pos_dist=", f)
            for rule in self._productions(ctx, toks):
                if self.tables.in_production_vocab(rule):
                    f[f"syn:prod={rule}"] = 1.0

        if STRUCT in enabled:
            self._component_structure(ctx, comp, toks, sent, p, ctx.comp_rank[comp.id],
                                      len(ctx.para_comps[p]), f)

        if DISC in enabled and self._available(doc.has_layer("discourse"), "discourse", DISC):
            for triple in self._discourse_triples(doc, comp):
                f[f"disc:{triple}"] = 1.0

        if EMB in enabled and self._available(self.embeddings is not None, "embedding", EMB):
            self._embedding(words, "emb:", f)
        return f


def _tense(tag: str) -> str:
    if tag == "MD":
        return "modal"
    if tag in ("VBD", "VBN"):
        return "past"
    if tag in ("VBZ", "VBP"):
        return "present"
    return "base"


def _nouns(tokens: Sequence[Token]) -> Set[str]:
    if tokens and all(t.pos for t in tokens):
        return {t.norm for t in tokens if t.pos.startswith("NN")}
    return {t.norm for t in tokens if t.surface.isalpha() and len(t.surface) > 2 and t.norm not in FUNCTION_WORDS}
