"""Evaluation harness: confusion matrices accumulated over folds, macro scores,
McNemar tests, the base-classifier improvement simulation and tree statistics."""

import logging
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from statsmodels.stats.contingency_tables import mcnemar as _statsmodels_mcnemar

from config import (
    ComponentType,
    ConfigError,
    IOB_LABELS,
    LINKED,
    MCNEMAR_CRITICAL_VALUE,
    NOT_LINKED,
    PHI_PRESETS,
    PipelineConfig,
    RelationType,
    Task,
)
from corpus import document_pairs, encode_iob, link_labels, stance_labels
from document import ArgumentComponent, Document
from joint import validate_solution
from pipeline import (
    ArgumentStructureParser,
    ParsedEssay,
    StagePredictor,
    base_structure,
    component_label,
    joint_structure,
    train_models,
)

log = logging.getLogger(__name__)

# Predicted label of a gold markable the prediction has no counterpart for
NONE_LABEL = "None"

Prediction = Union[List[str], Dict]


def task_labels(task: Task, config: Optional[PipelineConfig] = None) -> List[str]:
    config = config or PipelineConfig()
    if task is Task.IDENTIFY:
        return [y.value for y in IOB_LABELS]
    if task is Task.CLASSIFY:
        return [t.value for t in config.component_labels()]
    if task is Task.RELATIONS:
        return [LINKED, NOT_LINKED]
    return [RelationType.SUPPORT.value, RelationType.ATTACK.value]


# --- confusion matrices -------------------------------------------------------

class ConfusionMatrix:
    """Counts with gold labels on the rows and predicted labels on the columns"""

    def __init__(self, labels: Sequence[str], counts: Optional[np.ndarray] = None):
        self.labels = list(labels)
        self._index = {label: i for i, label in enumerate(self.labels)}
        k = len(self.labels)
        self.counts = np.zeros((k, k), dtype=np.int64) if counts is None else np.asarray(counts, dtype=np.int64)
        if self.counts.shape != (k, k):
            raise ValueError(f"counts of shape {self.counts.shape} for {k} labels")

    def _col(self, label: str) -> int:
        if label not in self._index:
            self.labels.append(label)
            self._index[label] = len(self.labels) - 1
            self.counts = np.pad(self.counts, ((0, 1), (0, 1)))
        return self._index[label]

    def add(self, gold: str, predicted: str, count: int = 1):
        # _col may grow the array, so resolve both indices before indexing
        i = self._col(gold)
        j = self._col(predicted)
        self.counts[i, j] += count

    def update(self, pairs: Iterable[Tuple[str, str]]):
        for gold, predicted in pairs:
            self.add(gold, predicted)
        return self

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        result = ConfusionMatrix(self.labels, self.counts.copy())
        for i, gold in enumerate(other.labels):
            for j, predicted in enumerate(other.labels):
                if other.counts[i, j]:
                    result.add(gold, predicted, int(other.counts[i, j]))
        return result

    def count(self, gold: str, predicted: str) -> int:
        if gold not in self._index or predicted not in self._index:
            return 0
        return int(self.counts[self._index[gold], self._index[predicted]])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> Dict:
        return {"labels": list(self.labels), "counts": self.counts.tolist()}


@dataclass
class ClassScore:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MacroScores:
    precision: float
    recall: float
    f1: float
    per_class: Dict[str, ClassScore] = field(default_factory=dict)

    def f1_of(self, label: str) -> float:
        return self.per_class[label].f1


def macro_prf(cm: ConfusionMatrix, classes: Optional[Sequence[str]] = None) -> MacroScores:
    """Per-class P/R/F1 (zero on empty denominators) and their unweighted means.

    `classes` defaults to all labels except the no-counterpart label.
    """
    classes = list(classes) if classes else [c for c in cm.labels if c != NONE_LABEL]
    per_class = {}
    for label in classes:
        tp = cm.count(label, label)
        predicted = sum(cm.count(g, label) for g in cm.labels)
        gold = sum(cm.count(label, p) for p in cm.labels)
        p = tp / predicted if predicted else 0.0
        r = tp / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        per_class[label] = ClassScore(p, r, f, gold)
    n = len(classes) or 1
    return MacroScores(
        precision=sum(s.precision for s in per_class.values()) / n,
        recall=sum(s.recall for s in per_class.values()) / n,
        f1=sum(s.f1 for s in per_class.values()) / n,
        per_class=per_class,
    )


# --- instances ----------------------------------------------------------------

def gold_labels(task: Task, gold: Document, config: Optional[PipelineConfig] = None) -> Prediction:
    config = config or PipelineConfig()
    if task is Task.IDENTIFY:
        return [y.value for y in encode_iob(gold)]
    if task is Task.CLASSIFY:
        return {c.id: component_label(c, config) for c in gold.components}
    if task is Task.RELATIONS:
        return link_labels(gold, include_major=False)
    return {cid: label.value for cid, label in stance_labels(gold).items()}


def normalize_prediction(task: Task, prediction) -> Prediction:
    """Enum-valued baseline output to plain label strings"""
    if task is Task.IDENTIFY:
        return [getattr(y, "value", y) for y in prediction]
    return {k: getattr(v, "value", v) for k, v in prediction.items()}


def predictions_from_document(task: Task, gold: Document, predicted: Document,
                              config: Optional[PipelineConfig] = None) -> Prediction:
    """Predicted labels keyed by gold markables; components are matched by exact span"""
    config = config or PipelineConfig()
    if task is Task.IDENTIFY:
        return [y.value for y in encode_iob(predicted)]
    by_span = {c.span: c for c in predicted.components}
    matched = {g.id: by_span[g.span] for g in gold.components if g.span in by_span}
    if task is Task.CLASSIFY:
        return {gid: component_label(p, config) for gid, p in matched.items()}
    if task is Task.RELATIONS:
        linked = {(r.source, r.target) for r in predicted.relations}
        out = {}
        for s, t in document_pairs(gold, include_major=False):
            ps, pt = matched.get(s.id), matched.get(t.id)
            out[(s.id, t.id)] = LINKED if ps and pt and (ps.id, pt.id) in linked else NOT_LINKED
        return out
    labels = stance_labels(predicted)
    return {gid: labels[p.id].value for gid, p in matched.items() if p.id in labels}


def base_document(parsed: ParsedEssay) -> Document:
    """The parsed essay as the base classifiers left it, before tree generation"""
    doc = parsed.document
    comps = [replace(c, ctype=parsed.base_types.get(c.id, c.ctype)) for c in doc.components]
    typed = doc.with_annotations(comps, [])
    _, relations = base_structure(typed, parsed.base_types, parsed.links)
    return doc.with_annotations(comps, relations)


def instance_pairs(task: Task, gold: Document, prediction: Prediction,
                   config: Optional[PipelineConfig] = None) -> List[Tuple[str, str]]:
    """(gold, predicted) per markable: tokens, gold components, gold pairs or claims and premises"""
    expected = gold_labels(task, gold, config)
    if task is Task.IDENTIFY:
        if len(prediction) != len(expected):
            raise ValueError(f"{gold.essay_id}: {len(prediction)} token labels for {len(expected)} tokens")
        return list(zip(expected, prediction))
    return [(label, prediction.get(key, NONE_LABEL)) for key, label in expected.items()]


def confusion(task: Task, gold: Document, prediction: Prediction,
              config: Optional[PipelineConfig] = None) -> ConfusionMatrix:
    return ConfusionMatrix(task_labels(task, config)).update(instance_pairs(task, gold, prediction, config))


# --- cross-validation ---------------------------------------------------------

def fold_splits(docs: Sequence[Document], folds: int, seed: int = 0) -> List[List[Document]]:
    """Essay-level folds, deterministic for a seed"""
    if folds < 2:
        raise ConfigError(f"cross-validation needs at least 2 folds, got {folds}")
    if folds > len(docs):
        raise ConfigError(f"{folds} folds for {len(docs)} essays")
    ordered = sorted(docs, key=lambda d: d.essay_id)
    random.Random(seed).shuffle(ordered)
    return [ordered[i::folds] for i in range(folds)]


@dataclass
class CrossValidation:
    matrices: Dict[Task, ConfusionMatrix]
    fold_matrices: List[Dict[Task, ConfusionMatrix]] = field(default_factory=list)
    parsed: Dict[str, ParsedEssay] = field(default_factory=dict)

    @property
    def matrix(self) -> ConfusionMatrix:
        return next(iter(self.matrices.values()))

    def scores(self, task: Optional[Task] = None) -> MacroScores:
        return macro_prf(self.matrices[task] if task else self.matrix)


def _score_parsed(parser: ArgumentStructureParser, held_out: Sequence[Document], tasks: Sequence[Task],
                  config: PipelineConfig, system: str, result: "CrossValidation") -> Dict[Task, ConfusionMatrix]:
    fold = {t: ConfusionMatrix(task_labels(t, config)) for t in tasks}
    for gold, parsed in zip(held_out, parser.parse_all(held_out)):
        result.parsed[gold.essay_id] = parsed
        predicted = parsed.document if system == "final" else base_document(parsed)
        for t in tasks:
            fold[t] = fold[t] + confusion(t, gold, predictions_from_document(t, gold, predicted, config), config)
    for t in tasks:
        result.matrices[t] = result.matrices[t] + fold[t]
    result.fold_matrices.append(fold)
    return fold


def cross_validate(docs: Sequence[Document], task: Union[Task, Sequence[Task]], config: PipelineConfig,
                   folds: int = 5, seed: int = 0, system: str = "final",
                   fit: Optional[Callable[[List[Document]], StagePredictor]] = None) -> CrossValidation:
    """Train on k-1 folds, parse the held-out fold, and sum the confusion matrices.

    `system` is "final" for the parser output or "base" for the base classifiers
    before tree generation.
    """
    tasks = [task] if isinstance(task, Task) else list(task)
    fit = fit or (lambda train: train_models(train, config))
    splits = fold_splits(docs, folds, seed)
    result = CrossValidation({t: ConfusionMatrix(task_labels(t, config)) for t in tasks})
    for k, held_out in enumerate(splits):
        train = [d for i, split in enumerate(splits) if i != k for d in split]
        _score_parsed(ArgumentStructureParser(config, fit(train)), held_out, tasks, config, system, result)
        log.info("fold %d/%d: %d train / %d test essays", k + 1, folds, len(train), len(held_out))
    return result


def holdout_evaluate(train: Sequence[Document], test: Sequence[Document], task: Union[Task, Sequence[Task]],
                     config: PipelineConfig, system: str = "final",
                     fit: Optional[Callable[[List[Document]], StagePredictor]] = None) -> CrossValidation:
    """Train once on `train` and score the parse of `test`"""
    tasks = [task] if isinstance(task, Task) else list(task)
    if not test:
        raise ConfigError("no test essays to evaluate")
    predictor = fit(list(train)) if fit else train_models(train, config)
    result = CrossValidation({t: ConfusionMatrix(task_labels(t, config)) for t in tasks})
    _score_parsed(ArgumentStructureParser(config, predictor), test, tasks, config, system, result)
    return result


# --- significance ---------------------------------------------------------------

@dataclass
class McNemarResult:
    statistic: float
    significant: bool
    b: int
    c: int


def paired_outcomes(task: Task, gold_docs: Sequence[Document], a: Sequence[Prediction], b: Sequence[Prediction],
                    config: Optional[PipelineConfig] = None) -> List[Tuple[bool, bool]]:
    """Per markable: (system A correct, system B correct)"""
    outcomes = []
    for gold, pa, pb in zip(gold_docs, a, b):
        for (g, x), (_, y) in zip(instance_pairs(task, gold, pa, config), instance_pairs(task, gold, pb, config)):
            outcomes.append((g == x, g == y))
    return outcomes


def mcnemar(outcomes: Sequence[Tuple[bool, bool]]) -> McNemarResult:
    """Continuity-corrected McNemar test on the discordant pairs"""
    b = sum(1 for x, y in outcomes if x and not y)
    c = sum(1 for x, y in outcomes if y and not x)
    if b + c == 0:
        return McNemarResult(0.0, False, 0, 0)
    both = sum(1 for x, y in outcomes if x and y)
    neither = len(outcomes) - both - b - c
    table = [[both, b], [c, neither]]
    statistic = float(_statsmodels_mcnemar(table, exact=False, correction=True).statistic)
    return McNemarResult(statistic, statistic > MCNEMAR_CRITICAL_VALUE, b, c)


def compare_systems(cv: CrossValidation, gold_docs: Sequence[Document], task: Task,
                    config: PipelineConfig) -> Tuple[MacroScores, MacroScores, McNemarResult]:
    """Base classifiers against the final parse of the same run, with McNemar on the markables"""
    base, final = [], []
    for gold in gold_docs:
        parsed = cv.parsed[gold.essay_id]
        base.append(predictions_from_document(task, gold, base_document(parsed), config))
        final.append(predictions_from_document(task, gold, parsed.document, config))

    def score(predictions):
        cm = ConfusionMatrix(task_labels(task, config))
        for gold, prediction in zip(gold_docs, predictions):
            cm = cm + confusion(task, gold, prediction, config)
        return macro_prf(cm)

    return score(base), score(final), mcnemar(paired_outcomes(task, gold_docs, base, final, config))


# --- joint model over base predictions ----------------------------------------

@dataclass
class BasePrediction:
    """Base classifier output over the gold components of one essay"""
    gold: Document
    types: Dict[str, ComponentType]
    links: Dict[Tuple[str, str], bool]

    def gold_types(self, config: PipelineConfig) -> Dict[str, ComponentType]:
        return {c.id: ComponentType(component_label(c, config)) for c in self.gold.components}

    def gold_links(self, config: Optional[PipelineConfig] = None) -> Dict[Tuple[str, str], bool]:
        """Gold link of every same-paragraph pair of gold claims and premises"""
        config = config or PipelineConfig()
        types = self.gold_types(config)
        linked = {(r.source, r.target) for r in self.gold.relations}
        pairs = {}
        for comps in self.gold.components_by_paragraph():
            members = [c for c in comps if types[c.id] is not ComponentType.MAJOR_CLAIM]
            for s in members:
                for t in members:
                    if s.id != t.id:
                        pairs[(s.id, t.id)] = (s.id, t.id) in linked
        return pairs


def joint_document(item: BasePrediction, types: Dict[str, ComponentType],
                   links: Dict[Tuple[str, str], bool], config: PipelineConfig) -> Document:
    gold = item.gold
    final, relations, _ = joint_structure(gold, types, links, config)
    return gold.with_annotations([replace(c, ctype=final[c.id]) for c in gold.components], relations)


def base_predictions(cv: CrossValidation, gold_docs: Sequence[Document]) -> List[BasePrediction]:
    """Out-of-fold base output of a gold-components cross-validation"""
    items = []
    for gold in gold_docs:
        parsed = cv.parsed[gold.essay_id]
        items.append(BasePrediction(gold, dict(parsed.base_types), dict(parsed.links)))
    return items


@dataclass
class SimulationPoint:
    which: str
    fraction: float
    task: Task
    mean_f1: float


def _score_joint(items: Sequence[BasePrediction], types: List[Dict], links: List[Dict],
                 config: PipelineConfig) -> Dict[Task, float]:
    matrices = {t: ConfusionMatrix(task_labels(t, config)) for t in (Task.CLASSIFY, Task.RELATIONS)}
    for item, t_pred, l_pred in zip(items, types, links):
        predicted = joint_document(item, t_pred, l_pred, config)
        for task in matrices:
            matrices[task] = matrices[task] + confusion(
                task, item.gold, predictions_from_document(task, item.gold, predicted, config), config)
    return {task: macro_prf(cm).f1 for task, cm in matrices.items()}


def improvement_simulation(items: Sequence[BasePrediction], fractions: Sequence[float], which: str,
                           config: PipelineConfig, seed: int = 0, repeats: int = 10) -> List[SimulationPoint]:
    """Correct a random share of the wrong base predictions, rerun the joint model
    and record macro F1 of components and relations, averaged over repeats.

    Each repeat draws one random order of the wrong predictions; a fraction f
    corrects its first round(f * n) entries.

    Wrong relations are counted over the gold pairs of claims and premises, so a
    link whose end the base read as a major claim is corrected with that type.
    """
    if which not in ("types", "relations", "both"):
        raise ConfigError(f"unknown simulation target '{which}'")
    gold_types_of = [item.gold_types(config) for item in items]
    gold_links_of = [item.gold_links(config) for item in items]
    wrong = []
    for i, item in enumerate(items):
        gold_types = gold_types_of[i]
        gold_links = gold_links_of[i]
        if which in ("types", "both"):
            wrong += [("t", i, cid) for cid, t in sorted(item.types.items()) if gold_types.get(cid) is not t]
        if which in ("relations", "both"):
            wrong += [("r", i, key) for key, v in sorted(gold_links.items()) if item.links.get(key, False) != v]

    totals = {(f, task): 0.0 for f in fractions for task in (Task.CLASSIFY, Task.RELATIONS)}
    for r in range(repeats):
        order = random.Random(seed * 1000003 + r).sample(wrong, len(wrong))
        for f in fractions:
            corrected = set(order[:int(f * len(order) + 0.5)])
            types = [dict(item.types) for item in items]
            links = [dict(item.links) for item in items]
            for kind, i, key in corrected:
                if kind == "t":
                    types[i][key] = gold_types_of[i][key]
                else:
                    links[i][key] = gold_links_of[i][key]
            for task, f1 in _score_joint(items, types, links, config).items():
                totals[(f, task)] += f1
    return [SimulationPoint(which, f, task, totals[(f, task)] / repeats)
            for f in fractions for task in (Task.CLASSIFY, Task.RELATIONS)]


# --- tree statistics ------------------------------------------------------------

@dataclass
class TreeStatistics:
    claims_to_premises: int = 0
    premises_to_claims: int = 0
    paragraphs: int = 0
    valid_trees: int = 0
    correct_trees: int = 0

    @property
    def valid_share(self) -> float:
        return self.valid_trees / self.paragraphs if self.paragraphs else 0.0

    @property
    def correct_share(self) -> float:
        return self.correct_trees / self.paragraphs if self.paragraphs else 0.0


def _paragraph_structure(doc: Document, comps: Sequence[ArgumentComponent]):
    members = {c.id for c in comps}
    spans = {c.id: c.span for c in comps}
    typed = frozenset((c.span, c.ctype) for c in comps)
    edges = frozenset((spans[r.source], spans[r.target]) for r in doc.relations
                      if r.source in members and r.target in members)
    return typed, edges


def tree_statistics(gold_docs: Sequence[Document], parsed: Sequence[ParsedEssay]) -> TreeStatistics:
    """Type conversions made by tree generation, valid forests and exactly recovered trees per paragraph"""
    stats = TreeStatistics()
    for gold, result in zip(gold_docs, parsed):
        doc = result.document
        for comp in doc.components:
            before = result.base_types.get(comp.id)
            if before is ComponentType.CLAIM and comp.ctype is ComponentType.PREMISE:
                stats.claims_to_premises += 1
            elif before is ComponentType.PREMISE and comp.ctype is ComponentType.CLAIM:
                stats.premises_to_claims += 1
        gold_paras = gold.components_by_paragraph()
        for p, comps in enumerate(doc.components_by_paragraph()):
            members = [c for c in comps if c.ctype is not ComponentType.MAJOR_CLAIM]
            stats.paragraphs += 1
            index = {c.id: i for i, c in enumerate(members)}
            x = np.zeros((len(members), len(members)), dtype=int)
            valid = True
            for rel in doc.relations:
                if rel.source in index and rel.target in index:
                    x[index[rel.source], index[rel.target]] += 1
                elif rel.source in index or rel.target in index:
                    valid = False
            out_degree = x.sum(axis=1) if len(members) else []
            typed_ok = all((c.ctype is ComponentType.PREMISE) == bool(out_degree[i]) for i, c in enumerate(members))
            if valid and typed_ok and not validate_solution(x):
                stats.valid_trees += 1
            gold_members = [c for c in gold_paras[p] if c.ctype is not ComponentType.MAJOR_CLAIM] \
                if p < len(gold_paras) else []
            if _paragraph_structure(doc, members) == _paragraph_structure(gold, gold_members):
                stats.correct_trees += 1
    return stats


@dataclass
class PhiGridRow:
    preset: str
    components_f1: float
    relations_f1: float
    stats: TreeStatistics


def phi_grid(items: Sequence[BasePrediction], config: PipelineConfig,
             presets: Optional[Dict] = None) -> List[PhiGridRow]:
    """Rerun the joint model over fixed base predictions for every φ preset"""
    rows = []
    for name, phi in (presets or PHI_PRESETS).items():
        run_config = replace(config, phi=phi)
        types = [dict(item.types) for item in items]
        links = [dict(item.links) for item in items]
        scores = _score_joint(items, types, links, run_config)
        parsed = []
        for item in items:
            final, relations, diagnostics = joint_structure(item.gold, item.types, item.links, run_config)
            comps = [replace(c, ctype=final[c.id]) for c in item.gold.components]
            parsed.append(ParsedEssay(document=item.gold.with_annotations(comps, relations),
                                      base_types=dict(item.types), links=dict(item.links),
                                      paragraphs=diagnostics))
        rows.append(PhiGridRow(name, scores[Task.CLASSIFY], scores[Task.RELATIONS],
                               tree_statistics([item.gold for item in items], parsed)))
    return rows


# --- annotator pairs ------------------------------------------------------------

def pairwise_average(annotations: Dict[str, Sequence[Document]], task: Task,
                     config: Optional[PipelineConfig] = None) -> Tuple[float, Dict[Tuple[str, str], float]]:
    """Macro F1 averaged over all annotator pairs, one annotator taken as gold"""
    names = sorted(annotations)
    if len(names) < 2:
        raise ConfigError("pairwise averaging needs at least two annotators")
    per_pair = {}
    for a, b in combinations(names, 2):
        cm = ConfusionMatrix(task_labels(task, config))
        for gold, other in zip(annotations[a], annotations[b]):
            cm = cm + confusion(task, gold, predictions_from_document(task, gold, other, config), config)
        per_pair[(a, b)] = macro_prf(cm).f1
    return float(np.mean(list(per_pair.values()))), per_pair


def score_rows(task: Task, system: str, scores: MacroScores) -> List[Tuple]:
    """`task,system,class,P,R,F1` rows; the macro row comes first"""
    rows = [(task.value, system, "macro", scores.precision, scores.recall, scores.f1)]
    for label, s in scores.per_class.items():
        rows.append((task.value, system, label, s.precision, s.recall, s.f1))
    return rows


def label_distribution(task: Task, docs: Sequence[Document], config: Optional[PipelineConfig] = None) -> Counter:
    counts = Counter()
    for doc in docs:
        labels = gold_labels(task, doc, config)
        counts.update(labels if task is Task.IDENTIFY else labels.values())
    return counts
