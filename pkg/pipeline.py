"""Argumentation structure parser.

Stages run in fixed order: component identification, component classification,
relation identification, tree generation (joint model) and stance recognition.
Each stage is answered by a StagePredictor; trained models and the gold-standard
oracle are two implementations of it.
"""

import logging
import threading
import time
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from baselines import heuristic_classify
from config import (
    ComponentType,
    ConfigError,
    ContractError,
    IobLabel,
    LINKED,
    NOT_LINKED,
    PipelineConfig,
    RelationType,
    Stance,
    Task,
)
from corpus import decode_iob_tokens, document_pairs, encode_iob, link_labels, stance_labels, validate_document
from document import ArgumentComponent, ArgumentativeRelation, Document
from features import FeatureExtractor, FeatureTables
from joint import joint_paragraph
from learners import BIAS, ClassifierModel, SequenceModel, train_classifier, train_sequence
from lexicons import Embeddings, IndicatorLexicon, load_subjectivity_lexicon
from utils import parallel_map

log = logging.getLogger(__name__)

Pair = Tuple[str, str]

RELATION_CLASSES = [NOT_LINKED, LINKED]
STANCE_CLASSES = [RelationType.SUPPORT.value, RelationType.ATTACK.value]


def component_label(comp: ArgumentComponent, config: PipelineConfig) -> str:
    """Training label of a component; without major claims they fold into claims"""
    if config.microtext and comp.ctype is ComponentType.MAJOR_CLAIM:
        return ComponentType.CLAIM.value
    return comp.ctype.value


def components_from_iob(doc: Document, labels: Sequence[IobLabel]) -> List[ArgumentComponent]:
    """Components of a label sequence; a run crossing a paragraph break is cut there"""
    tokens = doc.tokens
    if len(labels) != len(tokens):
        raise ContractError(f"{doc.essay_id}: {len(labels)} labels for {len(tokens)} tokens")
    ranges = []
    for first, last in decode_iob_tokens(labels):
        start = first
        for i in range(first + 1, last):
            if tokens[i].para_index != tokens[i - 1].para_index:
                ranges.append((start, i))
                start = i
        ranges.append((start, last))
    comps = []
    for first, last in ranges:
        start, end = tokens[first].char_start, tokens[last - 1].char_end
        comps.append(ArgumentComponent(id=f"T{len(comps) + 1}", ctype=ComponentType.PREMISE,
                                       start=start, end=end, text=doc.text[start:end]))
    return comps


# --- stage predictors -------------------------------------------------------

class StagePredictor(ABC):
    @abstractmethod
    def supports(self, task: Task) -> bool: ...

    @abstractmethod
    def identify(self, doc: Document) -> List[IobLabel]: ...

    @abstractmethod
    def classify(self, doc: Document, comps: Sequence[ArgumentComponent]) -> Dict[str, ComponentType]: ...

    @abstractmethod
    def link(self, doc: Document, pairs: Sequence[Tuple[ArgumentComponent, ArgumentComponent]]) -> Dict[Pair, bool]: ...

    @abstractmethod
    def stance(self, doc: Document, comps: Sequence[ArgumentComponent]) -> Dict[str, RelationType]: ...


@dataclass
class ParserModels(StagePredictor):
    """Trained stage models with the feature tables they were trained against"""
    config: PipelineConfig
    tables: FeatureTables = None
    identify_model: Optional[SequenceModel] = None
    classify_model: Optional[ClassifierModel] = None
    relations_model: Optional[ClassifierModel] = None
    stance_model: Optional[ClassifierModel] = None

    def __post_init__(self):
        if self.tables is None:
            self.tables = FeatureTables()
        self._local = threading.local()
        self._lock = threading.Lock()
        self._resources = None

    def model_for(self, task: Task):
        return getattr(self, f"{task.value}_model")

    def set_model(self, task: Task, model):
        setattr(self, f"{task.value}_model", model)

    def supports(self, task: Task) -> bool:
        return self.model_for(task) is not None

    def extractor(self) -> FeatureExtractor:
        """One extractor per thread; resources are loaded once and shared"""
        with self._lock:
            if self._resources is None:
                self._resources = (
                    IndicatorLexicon(),
                    Embeddings.load(self.config.embeddings_path),
                    load_subjectivity_lexicon(self.config.subjectivity_lexicon_path),
                )
        extractor = getattr(self._local, "extractor", None)
        if extractor is None:
            lexicon, embeddings, subjectivity = self._resources
            extractor = FeatureExtractor(self.config, self.tables, lexicon, embeddings, subjectivity)
            self._local.extractor = extractor
        return extractor

    def identify(self, doc: Document) -> List[IobLabel]:
        return self.identify_model.decode(self.extractor().sequence_features(doc))

    def classify(self, doc: Document, comps: Sequence[ArgumentComponent]) -> Dict[str, ComponentType]:
        extractor = self.extractor()
        return {c.id: ComponentType(self.classify_model.predict(extractor.component_features(doc, c)))
                for c in comps}

    def link(self, doc: Document, pairs: Sequence[Tuple[ArgumentComponent, ArgumentComponent]]) -> Dict[Pair, bool]:
        extractor = self.extractor()
        return {(s.id, t.id): self.relations_model.predict(extractor.pair_features(doc, s, t)) == LINKED
                for s, t in pairs}

    def stance(self, doc: Document, comps: Sequence[ArgumentComponent]) -> Dict[str, RelationType]:
        extractor = self.extractor()
        return {c.id: RelationType(self.stance_model.predict(extractor.stance_features(doc, c)))
                for c in comps}


class GoldPredictor(StagePredictor):
    """Answers every stage from the gold annotations, matched by exact span"""

    def __init__(self, corpus: Sequence[Document], config: Optional[PipelineConfig] = None):
        self.config = config or PipelineConfig()
        self.gold = {doc.essay_id: doc for doc in corpus}

    def supports(self, task: Task) -> bool:
        return True

    def _gold(self, doc: Document) -> Document:
        if doc.essay_id not in self.gold:
            raise ConfigError(f"no gold annotation for essay {doc.essay_id}")
        return self.gold[doc.essay_id]

    def _by_span(self, doc: Document) -> Dict[Tuple[int, int], ArgumentComponent]:
        return {c.span: c for c in self._gold(doc).components}

    def identify(self, doc: Document) -> List[IobLabel]:
        return encode_iob(self._gold(doc))

    def classify(self, doc: Document, comps: Sequence[ArgumentComponent]) -> Dict[str, ComponentType]:
        by_span = self._by_span(doc)
        types = {}
        for comp in comps:
            gold = by_span.get(comp.span)
            types[comp.id] = ComponentType(component_label(gold, self.config)) if gold else ComponentType.PREMISE
        return types

    def link(self, doc: Document, pairs: Sequence[Tuple[ArgumentComponent, ArgumentComponent]]) -> Dict[Pair, bool]:
        gold_doc = self._gold(doc)
        by_span = self._by_span(doc)
        linked = {(r.source, r.target) for r in gold_doc.relations}
        out = {}
        for s, t in pairs:
            gs, gt = by_span.get(s.span), by_span.get(t.span)
            out[(s.id, t.id)] = bool(gs and gt and (gs.id, gt.id) in linked)
        return out

    def stance(self, doc: Document, comps: Sequence[ArgumentComponent]) -> Dict[str, RelationType]:
        by_span = self._by_span(doc)
        labels = stance_labels(self._gold(doc))
        out = {}
        for comp in comps:
            gold = by_span.get(comp.span)
            out[comp.id] = labels.get(gold.id, RelationType.SUPPORT) if gold else RelationType.SUPPORT
        return out


# --- training -----------------------------------------------------------------

def _fit_classifier(task: Task, instances: List[Tuple[Dict[str, float], str]], classes: List[str],
                    config: PipelineConfig) -> ClassifierModel:
    present = Counter(label for _, label in instances)
    if len(present) == 1:
        # A single observed class gives a constant model
        label = next(iter(present))
        log.warning("%s training data holds only '%s': constant model", task.value, label)
        weights = {BIAS: np.array([1.0 if c == label else 0.0 for c in classes])}
        return ClassifierModel(classes, weights, config.degree)
    return train_classifier(instances, epochs=config.epochs, degree=config.degree, seed=config.seed,
                            margin=config.margin, classes=classes)


def train_models(docs: Sequence[Document], config: PipelineConfig) -> ParserModels:
    """Fit feature tables and every enabled stage on the training essays"""
    docs = list(docs)
    if not docs:
        raise ConfigError("no training essays")
    models = ParserModels(config, FeatureTables.fit(docs, config))

    if config.stage_enabled(Task.IDENTIFY):
        sequences = parallel_map(lambda d: (models.extractor().sequence_features(d), encode_iob(d)),
                                 docs, config.jobs)
        models.identify_model = train_sequence(sequences, epochs=config.epochs, seed=config.seed)
        log.info("identification model: %d features", len(models.identify_model.emission))

    if config.stage_enabled(Task.CLASSIFY):
        def classify_instances(doc):
            ex = models.extractor()
            return [(ex.component_features(doc, c), component_label(c, config)) for c in doc.components]
        instances = [x for chunk in parallel_map(classify_instances, docs, config.jobs) for x in chunk]
        models.classify_model = _fit_classifier(Task.CLASSIFY, instances,
                                                [t.value for t in config.component_labels()], config)

    if config.stage_enabled(Task.RELATIONS):
        def relation_instances(doc):
            ex = models.extractor()
            gold = link_labels(doc, include_major=False)
            return [(ex.pair_features(doc, s, t), gold[(s.id, t.id)])
                    for s, t in document_pairs(doc, include_major=False)]
        instances = [x for chunk in parallel_map(relation_instances, docs, config.jobs) for x in chunk]
        models.relations_model = _fit_classifier(Task.RELATIONS, instances, RELATION_CLASSES, config)

    if config.stage_enabled(Task.STANCE):
        def stance_instances(doc):
            ex = models.extractor()
            gold = stance_labels(doc)
            return [(ex.stance_features(doc, doc.component(cid)), label.value) for cid, label in gold.items()]
        instances = [x for chunk in parallel_map(stance_instances, docs, config.jobs) for x in chunk]
        models.stance_model = _fit_classifier(Task.STANCE, instances, STANCE_CLASSES, config)
    return models


# --- tree generation ------------------------------------------------------------

def joint_structure(doc: Document, types: Dict[str, ComponentType], links: Dict[Pair, bool],
                    config: PipelineConfig) -> Tuple[Dict[str, ComponentType], List[ArgumentativeRelation], List[Dict]]:
    """Per paragraph joint model over claims and premises; major claims pass through"""
    final = dict(types)
    relations: List[ArgumentativeRelation] = []
    diagnostics = []
    last = len(doc.paragraphs) - 1
    for p, comps in enumerate(doc.components_by_paragraph()):
        members = [c for c in comps if types[c.id] is not ComponentType.MAJOR_CLAIM]
        if not members:
            continue
        n = len(members)
        R = np.zeros((n, n), dtype=int)
        for i, s in enumerate(members):
            for j, t in enumerate(members):
                if i != j and links.get((s.id, t.id)):
                    R[i, j] = 1
        body = config.microtext or 0 < p < last
        result = joint_paragraph(members, R, {c.id: types[c.id] for c in members}, config.phi,
                                 body=body, fallback=config.base_heuristic_fallback)
        final.update(result.types)
        for rel in result.relations:
            relations.append(replace(rel, id=f"R{len(relations) + 1}"))
        diagnostics.append(dict(result.diagnostics, paragraph=p))
    return final, relations, diagnostics


def base_structure(doc: Document, types: Dict[str, ComponentType],
                   links: Dict[Pair, bool]) -> Tuple[Dict[str, ComponentType], List[ArgumentativeRelation]]:
    """Base classifier output taken as is"""
    relations = []
    for s, t in document_pairs(doc):
        if links.get((s.id, t.id)):
            relations.append(ArgumentativeRelation(id=f"R{len(relations) + 1}", source=s.id, target=t.id))
    return dict(types), relations


# --- parsing --------------------------------------------------------------------

@dataclass
class ParsedEssay:
    document: Document
    base_types: Dict[str, ComponentType] = field(default_factory=dict)
    links: Dict[Pair, bool] = field(default_factory=dict)
    stances: Dict[str, RelationType] = field(default_factory=dict)
    provenance: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    paragraphs: List[Dict] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)

    @property
    def essay_id(self) -> str:
        return self.document.essay_id

    def to_dict(self, verbose: bool = False) -> Dict:
        doc = self.document
        data = {
            "essay_id": doc.essay_id,
            "components": [
                {"id": c.id, "type": c.ctype.value, "start": c.start, "end": c.end, "text": c.text,
                 "stance": c.stance.value if c.stance else None}
                for c in doc.components
            ],
            "relations": [
                {"id": r.id, "source": r.source, "target": r.target, "type": r.rtype.value}
                for r in doc.relations
            ],
            "provenance": dict(self.provenance),
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
            "violations": list(self.violations),
        }
        if verbose:
            data["base_types"] = {cid: t.value for cid, t in sorted(self.base_types.items())}
            data["paragraphs"] = [dict(d) for d in self.paragraphs]
        return data


class ArgumentStructureParser:
    """Runs the parsing stages over essays with one shared predictor"""

    def __init__(self, config: PipelineConfig, predictor: Optional[StagePredictor] = None):
        self.config = config
        self.predictor = predictor

    def _require(self, task: Task) -> StagePredictor:
        if self.predictor is None or not self.predictor.supports(task):
            raise ConfigError(f"stage '{task.value}' is enabled but no model for it is loaded")
        return self.predictor

    def check(self):
        """Fail before any work when an enabled stage has no model"""
        for task in self.config.stages:
            if task is Task.IDENTIFY and self.config.use_gold_components:
                continue
            self._require(task)

    def parse(self, doc: Document) -> ParsedEssay:
        config = self.config
        result = ParsedEssay(document=doc)
        clock = time.perf_counter()

        def lap(stage: str):
            nonlocal clock
            now = time.perf_counter()
            result.timings[stage] = now - clock
            clock = now

        # identification
        gold_components = config.use_gold_components or not config.stage_enabled(Task.IDENTIFY)
        if gold_components:
            comps = [replace(c, stance=None) for c in doc.components]
            result.provenance["identify"] = "gold"
        else:
            comps = components_from_iob(doc, self._require(Task.IDENTIFY).identify(doc))
            result.provenance["identify"] = "model"
        work = doc.with_annotations(comps, [])
        lap("identify")

        # classification
        if config.stage_enabled(Task.CLASSIFY):
            types = self._require(Task.CLASSIFY).classify(work, work.components)
            result.provenance["classify"] = "model"
        elif gold_components:
            types = {c.id: c.ctype for c in work.components}
            result.provenance["classify"] = "gold"
        else:
            types = heuristic_classify(work)
            result.provenance["classify"] = "heuristic"
        if config.microtext:
            types = {cid: ComponentType.CLAIM if t is ComponentType.MAJOR_CLAIM else t for cid, t in types.items()}
        result.base_types = dict(types)
        work = doc.with_annotations([replace(c, ctype=types[c.id]) for c in work.components], [])
        lap("classify")

        # relation identification
        pairs = document_pairs(work, include_major=False)
        if config.stage_enabled(Task.RELATIONS):
            links = self._require(Task.RELATIONS).link(work, pairs)
            result.provenance["relations"] = "model"
        elif gold_components:
            gold_links = {(r.source, r.target) for r in doc.relations}
            links = {(s.id, t.id): (s.id, t.id) in gold_links for s, t in pairs}
            result.provenance["relations"] = "gold"
        else:
            links = {(s.id, t.id): False for s, t in pairs}
            result.provenance["relations"] = "skipped"
        result.links = links
        lap("relations")

        # tree generation
        if config.use_joint:
            types, relations, result.paragraphs = joint_structure(work, types, links, config)
            result.provenance["joint"] = "ilp"
        else:
            types, relations = base_structure(work, types, links)
            result.provenance["joint"] = "base"
        work = doc.with_annotations([replace(c, ctype=types[c.id]) for c in work.components], relations)
        lap("joint")

        # stance recognition
        targets = [c for c in work.components if c.ctype is not ComponentType.MAJOR_CLAIM]
        if config.stage_enabled(Task.STANCE):
            stances = self._require(Task.STANCE).stance(work, targets)
            result.provenance["stance"] = "model"
        elif gold_components:
            gold = stance_labels(doc)
            stances = {c.id: gold.get(c.id, RelationType.SUPPORT) for c in targets}
            result.provenance["stance"] = "gold"
        else:
            stances = {}
            result.provenance["stance"] = "skipped"
        result.stances = stances
        result.document = self._apply_stances(work, stances)
        lap("stance")

        result.violations = validate_document(result.document)
        if result.violations:
            if config.use_joint:
                raise ContractError(f"{doc.essay_id}: parsed structure is not a forest: {result.violations[0]}")
            log.warning("%s: %d structure violations in base output", doc.essay_id, len(result.violations))
        return result

    @staticmethod
    def _apply_stances(doc: Document, stances: Dict[str, RelationType]) -> Document:
        comps = []
        for comp in doc.components:
            label = stances.get(comp.id)
            if comp.ctype is ComponentType.CLAIM and label is not None:
                comp = replace(comp, stance=Stance.AGAINST if label is RelationType.ATTACK else Stance.FOR)
            comps.append(comp)
        relations = []
        for rel in doc.relations:
            label = stances.get(rel.source)
            relations.append(replace(rel, rtype=label) if label is not None else rel)
        return doc.with_annotations(comps, relations)

    def parse_all(self, docs: Sequence[Document]) -> List[ParsedEssay]:
        self.check()
        return parallel_map(self.parse, docs, self.config.jobs)


def run_pipeline(doc: Document, models: StagePredictor, config: PipelineConfig) -> ParsedEssay:
    parser = ArgumentStructureParser(config, models)
    parser.check()
    return parser.parse(doc)
