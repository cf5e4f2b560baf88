"""Heuristic and majority-class baselines for the four parsing tasks."""

from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple, Union

from config import (
    ComponentType,
    IobLabel,
    LINKED,
    NOT_LINKED,
    RelationType,
    Task,
)
from corpus import document_pairs
from document import Document

Prediction = Union[List[IobLabel], Dict[str, ComponentType], Dict[Tuple[str, str], str], Dict[str, RelationType]]


def heuristic_identify(doc: Document) -> List[IobLabel]:
    """Every sentence except the first two and the last is one component; the
    sentence-final full stop stays outside"""
    labels = [IobLabel.O] * len(doc.tokens)
    sentences = doc.sentences
    for sent in sentences[2:-1]:
        toks = list(sent.tokens)
        if toks and toks[-1].surface == ".":
            toks = toks[:-1]
        for k, tok in enumerate(toks):
            labels[tok.index] = IobLabel.ARG_B if k == 0 else IobLabel.ARG_I
    return labels


def heuristic_classify(doc: Document) -> Dict[str, ComponentType]:
    """Body paragraphs: first component Claim, others Premise. Introduction: last
    component MajorClaim. Conclusion: first component MajorClaim. Others Claim."""
    types = {}
    last = len(doc.paragraphs) - 1
    for p, comps in enumerate(doc.components_by_paragraph()):
        for k, comp in enumerate(comps):
            if p == 0:
                types[comp.id] = ComponentType.MAJOR_CLAIM if k == len(comps) - 1 else ComponentType.CLAIM
            elif p == last:
                types[comp.id] = ComponentType.MAJOR_CLAIM if k == 0 else ComponentType.CLAIM
            else:
                types[comp.id] = ComponentType.CLAIM if k == 0 else ComponentType.PREMISE
    return types


def heuristic_relations(doc: Document) -> Dict[Tuple[str, str], str]:
    """A pair is linked iff its target opens a body paragraph"""
    body_firsts = set()
    last = len(doc.paragraphs) - 1
    for p, comps in enumerate(doc.components_by_paragraph()):
        if 0 < p < last and comps:
            body_firsts.add(comps[0].id)
    return {(s.id, t.id): LINKED if t.id in body_firsts else NOT_LINKED for s, t in document_pairs(doc)}


def heuristic_stance(doc: Document) -> Dict[str, RelationType]:
    """Components in the second-last paragraph attack, all others support"""
    second_last = len(doc.paragraphs) - 2
    stances = {}
    for p, comps in enumerate(doc.components_by_paragraph()):
        for comp in comps:
            if comp.ctype is ComponentType.MAJOR_CLAIM:
                continue
            stances[comp.id] = RelationType.ATTACK if p == second_last else RelationType.SUPPORT
    return stances


HEURISTICS = {
    Task.IDENTIFY: heuristic_identify,
    Task.CLASSIFY: heuristic_classify,
    Task.RELATIONS: heuristic_relations,
    Task.STANCE: heuristic_stance,
}


def heuristic_baseline(task: Task, doc: Document) -> Prediction:
    return HEURISTICS[task](doc)


class MajorityBaseline:
    """Predicts the most frequent training label; ties go to the earlier class"""

    def __init__(self, distribution: Dict[str, int], classes: Optional[Sequence[str]] = None):
        self.distribution = dict(distribution)
        order = list(classes) if classes else sorted(self.distribution)
        self.label = max(order, key=lambda c: (self.distribution.get(c, 0), -order.index(c)))

    @classmethod
    def fit(cls, labels: Sequence[str], classes: Optional[Sequence[str]] = None) -> "MajorityBaseline":
        return cls(Counter(labels), classes)

    def predict(self, n: int) -> List[str]:
        return [self.label] * n


def majority_baseline(task: Task, train_distribution: Dict[str, int],
                      classes: Optional[Sequence[str]] = None) -> MajorityBaseline:
    return MajorityBaseline(train_distribution, classes)
