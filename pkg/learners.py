"""Linear learners over sparse named features.

SequenceModel: first-order sequence labeler trained with the averaged structured
perceptron and decoded with Viterbi.
ClassifierModel: averaged multiclass margin perceptron with explicit degree-2
conjunctions of binary features.

Averaging follows the lazy scheme: with c completed instance visits, an update
d adds d to w and c*d to u; the averaged weights are w - u/c, the mean of the
weight vectors seen after every visit.
"""

import hashlib
import json
import logging
import random
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import DEFAULT_EPOCHS, IOB_LABELS, MODEL_FORMAT_VERSION, IobLabel, ModelError

log = logging.getLogger(__name__)

FeatureVector = Dict[str, float]

BIAS = "__bias__"


def _fingerprint(payload) -> str:
    return hashlib.sha1(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _canonical_order(keys: Sequence[str]) -> List[int]:
    """Instance indices sorted by content hash, independent of input order"""
    return sorted(range(len(keys)), key=lambda i: (keys[i], i))


class _AveragedWeights:
    """Sparse feature -> vector weights with lazy averaging accumulators"""

    def __init__(self, width: int):
        self.width = width
        self.w: Dict[str, np.ndarray] = {}
        self.u: Dict[str, np.ndarray] = {}
        self.visits = 0

    def row(self, name: str) -> Optional[np.ndarray]:
        return self.w.get(name)

    def update(self, name: str, col: int, delta: float):
        if name not in self.w:
            self.w[name] = np.zeros(self.width)
            self.u[name] = np.zeros(self.width)
        self.w[name][col] += delta
        self.u[name][col] += self.visits * delta

    def averaged(self) -> Dict[str, np.ndarray]:
        if self.visits == 0:
            return {k: v.copy() for k, v in self.w.items()}
        out = {}
        for name, w in self.w.items():
            avg = w - self.u[name] / self.visits
            if np.any(avg):
                out[name] = avg
        return out


# --- sequence labeling ------------------------------------------------------

class SequenceModel:
    """Emission, transition and start weights over the IOB label set"""

    START = "__start__"

    def __init__(self, labels: Optional[List[IobLabel]] = None,
                 emission: Optional[Dict[str, np.ndarray]] = None,
                 transition: Optional[np.ndarray] = None, start: Optional[np.ndarray] = None):
        self.labels = list(labels or IOB_LABELS)
        k = len(self.labels)
        self.emission = emission or {}
        self.transition = transition if transition is not None else np.zeros((k, k))
        self.start = start if start is not None else np.zeros(k)

    def emission_scores(self, features: Sequence[FeatureVector]) -> np.ndarray:
        scores = np.zeros((len(features), len(self.labels)))
        for t, vec in enumerate(features):
            for name, value in vec.items():
                row = self.emission.get(name)
                if row is not None:
                    scores[t] += value * row
        return scores

    def path_score(self, features: Sequence[FeatureVector], path: Sequence[IobLabel]) -> float:
        em = self.emission_scores(features)
        idx = [self.labels.index(y) for y in path]
        total = 0.0
        for t, y in enumerate(idx):
            total += em[t, y] + (self.start[y] if t == 0 else self.transition[idx[t - 1], y])
        return float(total)

    def decode(self, features: Sequence[FeatureVector]) -> List[IobLabel]:
        """Viterbi; ties resolve to the earlier label in ArgB < ArgI < O order,
        deciding from the last token backwards"""
        n = len(features)
        if n == 0:
            return []
        k = len(self.labels)
        em = self.emission_scores(features)
        delta = self.start + em[0]
        back = np.zeros((n, k), dtype=int)
        for t in range(1, n):
            new = np.empty(k)
            for y in range(k):
                cand = delta + self.transition[:, y]
                best = int(np.argmax(cand))  # first maximum wins
                back[t, y] = best
                new[y] = cand[best] + em[t, y]
            delta = new
        y = int(np.argmax(delta))
        path = [y]
        for t in range(n - 1, 0, -1):
            y = int(back[t, y])
            path.append(y)
        return [self.labels[i] for i in reversed(path)]

    def to_dict(self) -> Dict:
        return {
            "format": MODEL_FORMAT_VERSION,
            "kind": "sequence",
            "labels": [y.value for y in self.labels],
            "emission": {k: v.tolist() for k, v in sorted(self.emission.items())},
            "transition": self.transition.tolist(),
            "start": self.start.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SequenceModel":
        _check_format(data, "sequence")
        return cls(
            labels=[IobLabel(v) for v in data["labels"]],
            emission={k: np.asarray(v, dtype=float) for k, v in data["emission"].items()},
            transition=np.asarray(data["transition"], dtype=float),
            start=np.asarray(data["start"], dtype=float),
        )


def train_sequence(sequences: Sequence[Tuple[Sequence[FeatureVector], Sequence[IobLabel]]],
                   epochs: int = DEFAULT_EPOCHS, seed: int = 0) -> SequenceModel:
    """Averaged structured perceptron over essay-wide token sequences"""
    sequences = [(list(x), list(y)) for x, y in sequences if len(y) > 0]
    if not sequences:
        raise ModelError("cannot train a sequence model on an empty training set")
    for x, y in sequences:
        if len(x) != len(y):
            raise ModelError(f"{len(x)} feature vectors for {len(y)} labels")

    labels = list(IOB_LABELS)
    k = len(labels)
    index = {y: i for i, y in enumerate(labels)}
    emission = _AveragedWeights(k)
    trans = _AveragedWeights(k)  # rows keyed by previous label name, plus START

    model = SequenceModel(labels)
    keys = [_fingerprint([x, [lab.value for lab in y]]) for x, y in sequences]
    order = _canonical_order(keys)
    rng = random.Random(seed)
    mistakes = 0
    for epoch in range(epochs):
        rng.shuffle(order)
        mistakes = 0
        for i in order:
            x, gold = sequences[i]
            model.emission = emission.w
            model.transition = _transition_matrix(trans, labels)
            model.start = _start_vector(trans, k)
            pred = model.decode(x)
            if pred != gold:
                mistakes += 1
                g = [index[lab] for lab in gold]
                p = [index[lab] for lab in pred]
                for t in range(len(x)):
                    if g[t] != p[t]:
                        for name, value in x[t].items():
                            emission.update(name, g[t], value)
                            emission.update(name, p[t], -value)
                    prev_g = SequenceModel.START if t == 0 else labels[g[t - 1]].value
                    prev_p = SequenceModel.START if t == 0 else labels[p[t - 1]].value
                    if (prev_g, g[t]) != (prev_p, p[t]):
                        trans.update(prev_g, g[t], 1.0)
                        trans.update(prev_p, p[t], -1.0)
            emission.visits += 1
            trans.visits += 1
        log.debug("sequence epoch %d: %d/%d sequences mislabeled", epoch + 1, mistakes, len(sequences))

    avg_trans = _AveragedWeights(k)
    avg_trans.w = trans.averaged()
    return SequenceModel(labels, emission=emission.averaged(),
                         transition=_transition_matrix(avg_trans, labels),
                         start=_start_vector(avg_trans, k))


def _transition_matrix(trans: _AveragedWeights, labels: List[IobLabel]) -> np.ndarray:
    k = len(labels)
    matrix = np.zeros((k, k))
    for i, y in enumerate(labels):
        row = trans.w.get(y.value)
        if row is not None:
            matrix[i] = row
    return matrix


def _start_vector(trans: _AveragedWeights, k: int) -> np.ndarray:
    row = trans.w.get(SequenceModel.START)
    return row.copy() if row is not None else np.zeros(k)


# --- classification ---------------------------------------------------------

def expand(vector: FeatureVector, degree: int = 1) -> FeatureVector:
    """Add a bias and, for degree 2, pairwise conjunctions "a&b" (a < b) of binary features"""
    out = dict(vector)
    out[BIAS] = 1.0
    if degree >= 2:
        binary = sorted(name for name, value in vector.items() if value == 1.0)
        for a, b in combinations(binary, 2):
            out[f"{a}&{b}"] = 1.0
    return out


class ClassifierModel:
    """Per-class linear weights; classes keep the order given at training time"""

    def __init__(self, classes: List[str], weights: Optional[Dict[str, np.ndarray]] = None, degree: int = 1):
        self.classes = list(classes)
        self.weights = weights or {}
        self.degree = degree

    def scores(self, vector: FeatureVector, expanded: bool = False) -> np.ndarray:
        x = vector if expanded else expand(vector, self.degree)
        total = np.zeros(len(self.classes))
        for name, value in x.items():
            row = self.weights.get(name)
            if row is not None:
                total += value * row
        return total

    def classify(self, vector: FeatureVector) -> Tuple[str, Dict[str, float]]:
        s = self.scores(vector)
        best = int(np.argmax(s))  # first maximum wins
        return self.classes[best], {c: float(v) for c, v in zip(self.classes, s)}

    def predict(self, vector: FeatureVector) -> str:
        return self.classify(vector)[0]

    def to_dict(self) -> Dict:
        return {
            "format": MODEL_FORMAT_VERSION,
            "kind": "classifier",
            "classes": self.classes,
            "degree": self.degree,
            "weights": {k: v.tolist() for k, v in sorted(self.weights.items())},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ClassifierModel":
        _check_format(data, "classifier")
        return cls(classes=list(data["classes"]),
                   weights={k: np.asarray(v, dtype=float) for k, v in data["weights"].items()},
                   degree=int(data.get("degree", 1)))


def train_classifier(instances: Sequence[Tuple[FeatureVector, str]], epochs: int = DEFAULT_EPOCHS,
                     degree: int = 2, seed: int = 0, margin: float = 1.0,
                     classes: Optional[List[str]] = None) -> ClassifierModel:
    """Averaged multiclass perceptron; updates whenever the gold score does not beat
    the best rival by at least `margin`"""
    if not instances:
        raise ModelError("cannot train a classifier on an empty training set")
    present = sorted({y for _, y in instances})
    if len(present) < 2:
        raise ModelError(f"classifier needs at least two classes, training data only has {present}")
    classes = list(classes) if classes else present
    unknown = [y for y in present if y not in classes]
    if unknown:
        raise ModelError(f"training labels {unknown} are not among the classes {classes}")
    col = {c: i for i, c in enumerate(classes)}

    weights = _AveragedWeights(len(classes))
    model = ClassifierModel(classes, weights.w, degree)
    keys = [_fingerprint([x, y]) for x, y in instances]
    order = _canonical_order(keys)
    rng = random.Random(seed)
    for epoch in range(epochs):
        rng.shuffle(order)
        errors = 0
        for i in order:
            x = expand(instances[i][0], degree)
            gold = col[instances[i][1]]
            s = model.scores(x, expanded=True)
            rival_scores = s.copy()
            rival_scores[gold] = -np.inf
            rival = int(np.argmax(rival_scores))
            if s[gold] - s[rival] < margin:
                if s[gold] <= s[rival]:
                    errors += 1
                for name, value in x.items():
                    weights.update(name, gold, value)
                    weights.update(name, rival, -value)
            weights.visits += 1
        log.debug("classifier epoch %d: %d/%d errors", epoch + 1, errors, len(instances))
    return ClassifierModel(classes, weights.averaged(), degree)


def _check_format(data: Dict, kind: str):
    if data.get("format") != MODEL_FORMAT_VERSION:
        raise ModelError(f"unsupported model format {data.get('format')!r}, expected {MODEL_FORMAT_VERSION}")
    if data.get("kind") != kind:
        raise ModelError(f"expected a {kind} model, got {data.get('kind')!r}")
