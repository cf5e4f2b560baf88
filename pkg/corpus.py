"""Brat-standoff essay corpora: parsing, segmentation, IOB coding, statistics, splits."""

import csv
import io
import json
import logging
import os
import random
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config import (
    BratParseError,
    ComponentType,
    ConfigError,
    CorpusError,
    DanglingReferenceError,
    IobLabel,
    LINKED,
    NOT_LINKED,
    OverlapError,
    RelationType,
    SplitSet,
    Stance,
)
from document import (
    ArgumentComponent,
    ArgumentativeRelation,
    DiscourseRelation,
    Document,
    Paragraph,
    Sentence,
    Span,
    Token,
)

log = logging.getLogger(__name__)

TEXTBOUND_RE = re.compile(r'^(T\d+)\t(\S+) (\d+) (\d+)\t(.*)$')
ATTRIBUTE_RE = re.compile(r'^(A\d+)\t(\S+) (T\d+)(?: (\S+))?$')
RELATION_RE = re.compile(r'^(R\d+)\t(\S+) Arg1:(T\d+) Arg2:(T\d+)\s*$')

# Fallback segmentation, used only when no sidecar segmentation is supplied
SENTENCE_RE = re.compile(r'\S.*?(?:[.!?]+["\')\]]*(?=\s|$)|$)')
TOKEN_RE = re.compile(r"\w+(?:['’]\w+)*|[^\w\s]")

SIDECAR_LAYERS = ("pos", "lemma", "trees", "dependencies", "discourse", "sentiment")


# --- segmentation ---------------------------------------------------------

def _lines(text: str) -> List[Span]:
    spans = []
    offset = 0
    for line in text.split("\n"):
        if line.strip():
            lead = len(line) - len(line.lstrip())
            spans.append((offset + lead, offset + len(line.rstrip())))
        offset += len(line) + 1
    return spans


def split_sentences(text: str, start: int, end: int) -> List[Span]:
    """Rule-based sentence spans inside text[start:end]"""
    spans = []
    for m in SENTENCE_RE.finditer(text, start, end):
        s_text = m.group(0).rstrip()
        if s_text:
            spans.append((m.start(), m.start() + len(s_text)))
    return spans


def tokenize(text: str, start: int, end: int) -> List[Span]:
    return [(m.start(), m.end()) for m in TOKEN_RE.finditer(text, start, end)]


def segment(text: str, components: Sequence[ArgumentComponent] = ()) -> Tuple[Optional[Span], List[Span]]:
    """Split an essay into an optional title line and paragraph spans.

    Paragraphs are the non-empty lines. The first line is the title when the
    essay has more than one non-empty line and no component starts in it.
    """
    lines = _lines(text)
    title = None
    if len(lines) > 1:
        first = lines[0]
        if not any(first[0] <= c.start < first[1] for c in components):
            title = first
            lines = lines[1:]
    return title, lines


# --- sidecar layers -------------------------------------------------------

def load_sidecar(path: str) -> Dict:
    if not path or not os.path.exists(path):
        return {}
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise CorpusError(f"sidecar {path} must hold a JSON object")
    return data


def _build_paragraphs(text: str, title: Optional[Span], para_spans: List[Span],
                      sidecar: Dict) -> Tuple[List[Paragraph], List[str]]:
    layers = []
    sent_spans = sidecar.get("sentences")
    tok_records = sidecar.get("tokens")
    if sent_spans and tok_records:
        layers.append("segmentation")
        sent_spans = [tuple(s) for s in sent_spans]
        tok_records = sorted(tok_records, key=lambda t: t["start"])
    else:
        sent_spans = [s for p in para_spans for s in split_sentences(text, *p)]
        tok_records = None

    trees = sidecar.get("trees") or []
    deps = sidecar.get("dependencies") or []
    senti = sidecar.get("sentiment") or []
    has_pos = bool(tok_records) and all("pos" in t for t in tok_records)
    has_lemma = bool(tok_records) and all("lemma" in t for t in tok_records)

    paragraphs = [Paragraph(index=i, char_start=s, char_end=e) for i, (s, e) in enumerate(para_spans)]
    sent_index = 0
    tok_index = 0
    tok_cursor = 0
    for raw_i, (s_start, s_end) in enumerate(sent_spans):
        if title and title[0] <= s_start < title[1]:
            continue
        para = next((p for p in paragraphs if p.char_start <= s_start < p.char_end), None)
        if para is None:
            continue
        sentence = Sentence(index=sent_index, para_index=para.index, char_start=s_start, char_end=s_end)
        if tok_records is not None:
            while tok_cursor < len(tok_records) and tok_records[tok_cursor]["start"] < s_start:
                tok_cursor += 1
            spans = []
            while tok_cursor < len(tok_records) and tok_records[tok_cursor]["end"] <= s_end:
                spans.append(tok_records[tok_cursor])
                tok_cursor += 1
        else:
            spans = [{"start": a, "end": b} for a, b in tokenize(text, s_start, s_end)]
        for rec in spans:
            sentence.tokens.append(Token(
                surface=text[rec["start"]:rec["end"]],
                char_start=rec["start"],
                char_end=rec["end"],
                sent_index=sent_index,
                para_index=para.index,
                index=tok_index,
                pos=rec.get("pos"),
                lemma=rec.get("lemma"),
            ))
            tok_index += 1
        if raw_i < len(trees) and trees[raw_i]:
            sentence.tree = trees[raw_i]
        if raw_i < len(deps) and deps[raw_i]:
            sentence.dependencies = list(deps[raw_i])
        if raw_i < len(senti) and senti[raw_i]:
            sentence.sentiment = [float(v) for v in senti[raw_i]]
        para.sentences.append(sentence)
        sent_index += 1

    if has_pos:
        layers.append("pos")
    if has_lemma:
        layers.append("lemma")
    if trees:
        layers.append("trees")
    if deps:
        layers.append("dependencies")
    if sidecar.get("discourse"):
        layers.append("discourse")
    if senti:
        layers.append("sentiment")
    return paragraphs, layers


# --- brat -----------------------------------------------------------------

def parse_brat(essay_text: str, ann_text: str, essay_id: str = "essay",
               sidecar: Optional[Dict] = None) -> Document:
    """Parse one essay and its .ann records into a Document"""
    components: Dict[str, ArgumentComponent] = {}
    stances: List[Tuple[int, str, str]] = []
    relation_lines: List[Tuple[int, ArgumentativeRelation]] = []

    for line_no, raw in enumerate(ann_text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        if line.startswith("T"):
            m = TEXTBOUND_RE.match(line)
            if not m:
                raise BratParseError(f"malformed textbound record: {line!r}", line_no)
            tid, label, start, end, covered = m.groups()
            start, end = int(start), int(end)
            if not (0 <= start < end <= len(essay_text)):
                raise BratParseError(f"offsets {start}-{end} outside essay of length {len(essay_text)}", line_no)
            try:
                ctype = ComponentType(label)
            except ValueError:
                raise BratParseError(f"unknown component type '{label}'", line_no)
            components[tid] = ArgumentComponent(id=tid, ctype=ctype, start=start, end=end, text=covered)
        elif line.startswith("A"):
            m = ATTRIBUTE_RE.match(line)
            if not m:
                raise BratParseError(f"malformed attribute record: {line!r}", line_no)
            _, name, ref, value = m.groups()
            if name != "Stance":
                log.warning("line %d: ignoring attribute '%s'", line_no, name)
                continue
            stances.append((line_no, ref, value or ""))
        elif line.startswith("R"):
            m = RELATION_RE.match(line)
            if not m:
                raise BratParseError(f"malformed relation record: {line!r}", line_no)
            rid, label, src, tgt = m.groups()
            try:
                rtype = RelationType.from_brat(label)
            except ValueError as e:
                raise BratParseError(str(e), line_no)
            relation_lines.append((line_no, ArgumentativeRelation(id=rid, source=src, target=tgt, rtype=rtype)))
        else:
            raise BratParseError(f"unsupported record: {line!r}", line_no)

    for line_no, ref, value in stances:
        if ref not in components:
            raise DanglingReferenceError(f"line {line_no}: stance refers to unknown component {ref}")
        try:
            stance = Stance(value)
        except ValueError:
            raise BratParseError(f"unknown stance value '{value}'", line_no)
        comp = components[ref]
        if comp.ctype is not ComponentType.CLAIM:
            log.warning("%s: stance attribute on %s component %s ignored", essay_id, comp.ctype.value, ref)
            continue
        comp.stance = stance

    relations = []
    for line_no, rel in relation_lines:
        for end_id in (rel.source, rel.target):
            if end_id not in components:
                raise DanglingReferenceError(f"line {line_no}: relation {rel.id} refers to unknown component {end_id}")
        relations.append(rel)

    ordered = sorted(components.values(), key=lambda c: (c.start, c.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.end > b.start:
            raise OverlapError(f"{essay_id}: components {a.id} and {b.id} overlap")

    return build_document(essay_id, essay_text, ordered, relations, sidecar or {})


def build_document(essay_id: str, text: str, components: List[ArgumentComponent],
                   relations: List[ArgumentativeRelation], sidecar: Dict) -> Document:
    title, para_spans = segment(text, components)
    paragraphs, layers = _build_paragraphs(text, title, para_spans, sidecar)
    for comp in components:
        inside = [p for p in para_spans if p[0] <= comp.start and comp.end <= p[1]]
        if len(inside) != 1:
            raise CorpusError(f"{essay_id}: component {comp.id} does not lie inside exactly one paragraph")
    discourse = [
        DiscourseRelation(rtype=d["type"], explicit=bool(d.get("explicit", False)),
                          arg1=tuple(d["arg1"]), arg2=tuple(d["arg2"]))
        for d in sidecar.get("discourse") or []
    ]
    doc = Document(essay_id=essay_id, text=text, paragraphs=paragraphs, components=components,
                   relations=relations, title=title, discourse=discourse, layers=tuple(layers))
    for comp in doc.components:
        preceding = doc.preceding_tokens(comp)
        if preceding:
            comp.preceding_span = (preceding[0].char_start, comp.start)
    return doc


def to_brat(doc: Document) -> str:
    """Serialize the annotation layer of a document back to brat standoff"""
    lines = []
    for comp in doc.components:
        covered = doc.text[comp.start:comp.end]
        lines.append(f"{comp.id}\t{comp.ctype.value} {comp.start} {comp.end}\t{covered}")
    attr = 1
    for comp in doc.components:
        if comp.stance is not None:
            lines.append(f"A{attr}\tStance {comp.id} {comp.stance.value}")
            attr += 1
    for rel in doc.relations:
        lines.append(f"{rel.id}\t{rel.rtype.brat_name} Arg1:{rel.source} Arg2:{rel.target}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_essay(txt_path: str, ann_path: Optional[str] = None, sidecar_path: Optional[str] = None) -> Document:
    with open(txt_path, 'r', encoding='utf-8') as f:
        text = f.read()
    ann_text = ""
    if ann_path and os.path.exists(ann_path):
        with open(ann_path, 'r', encoding='utf-8') as f:
            ann_text = f.read()
    if sidecar_path is None:
        sidecar_path = os.path.splitext(txt_path)[0] + ".json"
    essay_id = os.path.splitext(os.path.basename(txt_path))[0]
    return parse_brat(text, ann_text, essay_id=essay_id, sidecar=load_sidecar(sidecar_path))


def load_corpus(corpus_dir: str) -> List[Document]:
    """Load every <id>.txt with a sibling <id>.ann, in essay id order"""
    if not os.path.isdir(corpus_dir):
        raise CorpusError(f"corpus directory '{corpus_dir}' not found")
    docs = []
    for name in sorted(os.listdir(corpus_dir)):
        if not name.endswith(".ann") or name.count(".") > 1:
            continue
        stem = name[:-4]
        txt = os.path.join(corpus_dir, stem + ".txt")
        if not os.path.exists(txt):
            log.warning("skipping %s: no matching .txt", name)
            continue
        docs.append(load_essay(txt, os.path.join(corpus_dir, name)))
    log.info("loaded %d essays from %s", len(docs), corpus_dir)
    return docs


def load_annotation_sets(corpus_dir: str) -> Tuple[List[str], List[List[Document]]]:
    """Every <id>.txt with several <id>.<annotator>.ann files.

    Returns the annotator names and, per essay, one Document per annotator in
    name order. Essays missing any annotator are skipped.
    """
    if not os.path.isdir(corpus_dir):
        raise CorpusError(f"corpus directory '{corpus_dir}' not found")
    found: Dict[str, Dict[str, str]] = {}
    for name in sorted(os.listdir(corpus_dir)):
        parts = name.split(".")
        if len(parts) == 3 and parts[2] == "ann":
            found.setdefault(parts[0], {})[parts[1]] = os.path.join(corpus_dir, name)
    annotators = sorted({a for per_essay in found.values() for a in per_essay})
    if len(annotators) < 2:
        raise CorpusError(f"'{corpus_dir}' holds no essays with annotations by two or more annotators")
    essays = []
    for stem, per_essay in sorted(found.items()):
        txt = os.path.join(corpus_dir, stem + ".txt")
        if set(per_essay) != set(annotators) or not os.path.exists(txt):
            log.warning("skipping %s: annotated by %s only", stem, ", ".join(sorted(per_essay)))
            continue
        sidecar = os.path.join(corpus_dir, stem + ".json")
        essays.append([load_essay(txt, per_essay[a], sidecar) for a in annotators])
    return annotators, essays


# --- IOB ------------------------------------------------------------------

def encode_iob(doc: Document) -> List[IobLabel]:
    """Essay-wide IOB labels, one per token"""
    labels = [IobLabel.O] * len(doc.tokens)
    for comp in doc.components:
        first, last = doc.token_range(comp.start, comp.end)
        if first >= last:
            log.warning("%s: component %s covers no token", doc.essay_id, comp.id)
            continue
        if doc.tokens[first].char_start != comp.start or doc.tokens[last - 1].char_end != comp.end:
            log.warning("%s: component %s snapped to token boundaries", doc.essay_id, comp.id)
        labels[first] = IobLabel.ARG_B
        for i in range(first + 1, last):
            labels[i] = IobLabel.ARG_I
    return labels


def decode_iob_tokens(labels: Sequence[IobLabel]) -> List[Tuple[int, int]]:
    """Token ranges [first, last) of the components encoded in a label sequence.

    An Arg-I run without a preceding Arg-B opens a component at the run start.
    """
    spans = []
    start = None
    for i, label in enumerate(labels):
        if label is IobLabel.ARG_B:
            if start is not None:
                spans.append((start, i))
            start = i
        elif label is IobLabel.ARG_I:
            if start is None:
                start = i
        else:
            if start is not None:
                spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(labels)))
    return spans


def decode_iob(labels: Sequence[IobLabel], tokens: Sequence[Token]) -> List[Span]:
    if len(labels) != len(tokens):
        raise ValueError(f"{len(labels)} labels for {len(tokens)} tokens")
    return [(tokens[a].char_start, tokens[b - 1].char_end) for a, b in decode_iob_tokens(labels)]


# --- pairs, splits, validation -------------------------------------------

def component_pairs(components: Sequence[ArgumentComponent]) -> List[Tuple[ArgumentComponent, ArgumentComponent]]:
    """All ordered pairs (source, target) with source != target, source-major order"""
    return [(a, b) for i, a in enumerate(components) for j, b in enumerate(components) if i != j]


def document_pairs(doc: Document, include_major: bool = True) -> List[Tuple[ArgumentComponent, ArgumentComponent]]:
    pairs = []
    for comps in doc.components_by_paragraph():
        if not include_major:
            comps = [c for c in comps if c.ctype is not ComponentType.MAJOR_CLAIM]
        pairs.extend(component_pairs(comps))
    return pairs


def link_labels(doc: Document, include_major: bool = True) -> Dict[Tuple[str, str], str]:
    """Linked / Not-Linked for every same-paragraph ordered pair"""
    linked = {(r.source, r.target) for r in doc.relations}
    return {(s.id, t.id): LINKED if (s.id, t.id) in linked else NOT_LINKED
            for s, t in document_pairs(doc, include_major)}


def stance_labels(doc: Document) -> Dict[str, RelationType]:
    """Support/Attack per claim (from its stance) and premise (from its outgoing relation)"""
    labels = {}
    for comp in doc.components:
        if comp.ctype is ComponentType.CLAIM:
            labels[comp.id] = RelationType.ATTACK if comp.stance is Stance.AGAINST else RelationType.SUPPORT
        elif comp.ctype is ComponentType.PREMISE:
            outgoing = doc.outgoing(comp.id)
            labels[comp.id] = outgoing[0].rtype if outgoing else RelationType.SUPPORT
    return labels


def load_split(csv_text: str, corpus: Sequence[Document]) -> Tuple[List[Document], List[Document]]:
    """Partition a corpus by an `ID;SET` split file"""
    reader = csv.reader(io.StringIO(csv_text), delimiter=';')
    rows = [r for r in reader if r and any(cell.strip() for cell in r)]
    if not rows or [c.strip().strip('"').upper() for c in rows[0][:2]] != ["ID", "SET"]:
        raise ConfigError("split file must start with the header 'ID;SET'")
    assignment: Dict[str, SplitSet] = {}
    for row in rows[1:]:
        if len(row) < 2:
            raise ConfigError(f"malformed split row: {';'.join(row)}")
        essay_id = row[0].strip().strip('"')
        try:
            part = SplitSet(row[1].strip().strip('"').upper())
        except ValueError:
            raise ConfigError(f"unknown split set '{row[1]}' for {essay_id}")
        if essay_id in assignment:
            raise ConfigError(f"essay {essay_id} assigned twice in split file")
        assignment[essay_id] = part
    ids = {d.essay_id for d in corpus}
    unknown = sorted(set(assignment) - ids)
    if unknown:
        raise ConfigError(f"split file names essays absent from the corpus: {', '.join(unknown[:5])}")
    missing = sorted(ids - set(assignment))
    if missing:
        raise ConfigError(f"essays missing from split file: {', '.join(missing[:5])}")
    train = [d for d in corpus if assignment[d.essay_id] is SplitSet.TRAIN]
    test = [d for d in corpus if assignment[d.essay_id] is SplitSet.TEST]
    log.info("split: %d train / %d test", len(train), len(test))
    return train, test


def make_split(corpus: Sequence[Document], test_share: float = 0.2, seed: int = 0) -> str:
    """Random essay-level `ID;SET` split, deterministic for a seed"""
    if not 0.0 < test_share < 1.0:
        raise ConfigError(f"test share must lie strictly between 0 and 1, got {test_share}")
    ids = sorted(d.essay_id for d in corpus)
    random.Random(seed).shuffle(ids)
    n_test = int(test_share * len(ids) + 0.5)
    test = set(ids[:n_test])
    lines = ["ID;SET"]
    lines += [f"{eid};{(SplitSet.TEST if eid in test else SplitSet.TRAIN).value}" for eid in sorted(ids)]
    return "\n".join(lines) + "\n"


def relation_graph(doc: Document) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(c.id for c in doc.components)
    for rel in doc.relations:
        graph.add_edge(rel.source, rel.target)
    return graph


def validate_document(doc: Document) -> List[str]:
    """Forest violations of the relation structure; empty when the document is well-formed"""
    violations = []
    para_of = {c.id: doc.paragraph_index(c) for c in doc.components}
    for rel in doc.relations:
        if rel.source == rel.target:
            violations.append(f"{doc.essay_id}:{rel.id}: self relation")
        elif para_of.get(rel.source) != para_of.get(rel.target):
            violations.append(f"{doc.essay_id}:{rel.id}: relation crosses paragraphs")
    graph = relation_graph(doc)
    for comp in doc.components:
        out_degree = graph.out_degree(comp.id)
        if comp.ctype is ComponentType.PREMISE and out_degree != 1:
            violations.append(f"{doc.essay_id}:{comp.id}: premise out-degree {out_degree}")
        elif comp.ctype is not ComponentType.PREMISE and out_degree != 0:
            violations.append(f"{doc.essay_id}:{comp.id}: {comp.ctype.value.lower()} out-degree {out_degree}")
    for cycle in nx.simple_cycles(graph):
        if len(cycle) > 1:
            violations.append(f"{doc.essay_id}: cycle {' -> '.join(cycle + cycle[:1])}")
    return violations


# --- statistics -----------------------------------------------------------

STAT_FIELDS = [
    "sentences", "tokens", "paragraphs", "components", "major_claims", "claims", "premises",
    "claims_for", "claims_against", "supports", "attacks", "arguments", "arguments_with_attack",
    "serial_arguments", "nonarg_tokens", "nonarg_sentences", "multi_component_sentences",
    "paragraphs_with_unlinked",
]


@dataclass
class CorpusStats:
    essays: int = 0
    per_essay: Dict[str, List[int]] = field(default_factory=lambda: {k: [] for k in STAT_FIELDS})

    def total(self, name: str) -> int:
        return int(sum(self.per_essay[name]))

    def mean(self, name: str) -> float:
        values = self.per_essay[name]
        return float(np.mean(values)) if values else 0.0

    def std(self, name: str) -> float:
        values = self.per_essay[name]
        return float(np.std(values)) if values else 0.0

    def as_rows(self) -> List[Tuple[str, int, float, float]]:
        rows = [("essays", self.essays, 1.0 if self.essays else 0.0, 0.0)]
        rows += [(k, self.total(k), self.mean(k), self.std(k)) for k in STAT_FIELDS]
        return rows


def _argument_depth(graph: nx.DiGraph, claim_id: str) -> int:
    """Longest incoming chain ending at a claim"""
    depth = 0
    frontier = [(claim_id, 0)]
    seen = {claim_id}
    while frontier:
        node, d = frontier.pop()
        depth = max(depth, d)
        for pred in graph.predecessors(node):
            if pred not in seen:
                seen.add(pred)
                frontier.append((pred, d + 1))
    return depth


def essay_stats(doc: Document) -> Dict[str, int]:
    counts = {k: 0 for k in STAT_FIELDS}
    counts["sentences"] = len(doc.sentences)
    counts["tokens"] = len(doc.tokens)
    counts["paragraphs"] = len(doc.paragraphs)
    counts["components"] = len(doc.components)
    for comp in doc.components:
        if comp.ctype is ComponentType.MAJOR_CLAIM:
            counts["major_claims"] += 1
        elif comp.ctype is ComponentType.CLAIM:
            counts["claims"] += 1
            if comp.stance is Stance.FOR:
                counts["claims_for"] += 1
            elif comp.stance is Stance.AGAINST:
                counts["claims_against"] += 1
        else:
            counts["premises"] += 1
    for rel in doc.relations:
        counts["supports" if rel.rtype is RelationType.SUPPORT else "attacks"] += 1

    graph = relation_graph(doc)
    for comp in doc.components:
        if comp.ctype is not ComponentType.CLAIM or graph.in_degree(comp.id) == 0:
            continue
        counts["arguments"] += 1
        members = nx.ancestors(graph, comp.id)
        if any(r.rtype is RelationType.ATTACK for r in doc.relations if r.target in members | {comp.id}):
            counts["arguments_with_attack"] += 1
        if _argument_depth(graph, comp.id) > 1:
            counts["serial_arguments"] += 1

    labels = encode_iob(doc)
    counts["nonarg_tokens"] = sum(1 for label in labels if label is IobLabel.O)
    for sent in doc.sentences:
        inside = [c for c in doc.components if c.overlaps(sent.char_start, sent.char_end)]
        if not inside:
            counts["nonarg_sentences"] += 1
        elif len(inside) > 1:
            counts["multi_component_sentences"] += 1
    for comps in doc.components_by_paragraph():
        if any(c.ctype is not ComponentType.MAJOR_CLAIM and graph.degree(c.id) == 0 for c in comps):
            counts["paragraphs_with_unlinked"] += 1
    return counts


def corpus_stats(corpus: Sequence[Document]) -> CorpusStats:
    stats = CorpusStats(essays=len(corpus))
    for doc in corpus:
        for key, value in essay_stats(doc).items():
            stats.per_essay[key].append(value)
    return stats
