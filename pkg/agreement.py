"""Inter-annotator agreement.

Markable tables (observed agreement, Fleiss' kappa), Krippendorff's unitized
alpha over token continua, and confusion probability matrices. Builders turn
several annotations of the same essays into sentence-level and pair-level
markables.
"""

import bisect
import logging
from dataclasses import dataclass, field
from itertools import permutations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from statsmodels.stats.inter_rater import aggregate_raters
from statsmodels.stats.inter_rater import fleiss_kappa as _statsmodels_fleiss_kappa

from config import AgreementError, ComponentType, RelationType, NOT_LINKED
from corpus import component_pairs
from document import Document

log = logging.getLogger(__name__)

NO_LABEL = "None"


@dataclass
class AgreementTable:
    """N markables x k categories; entry (i, j) counts raters choosing j for markable i"""
    counts: np.ndarray
    categories: List[str] = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.ndim != 2:
            raise AgreementError("agreement table must be two-dimensional")
        if self.categories is None:
            self.categories = [str(j) for j in range(self.counts.shape[1])]

    @classmethod
    def from_labels(cls, ratings: Sequence[Sequence[str]], categories: Sequence[str]) -> "AgreementTable":
        """One row per markable holding every rater's label"""
        categories = list(categories)
        index = {c: j for j, c in enumerate(categories)}
        if not ratings:
            return cls(np.zeros((0, len(categories))), categories)
        if len({len(labels) for labels in ratings}) != 1:
            raise AgreementError("every markable needs the same number of ratings")
        for labels in ratings:
            for label in labels:
                if label not in index:
                    raise AgreementError(f"label '{label}' is not a category of {categories}")
        codes = np.array([[index[label] for label in labels] for labels in ratings], dtype=int)
        counts, _ = aggregate_raters(codes, n_cat=len(categories))
        return cls(counts, categories)

    @property
    def markables(self) -> int:
        return self.counts.shape[0]

    def raters(self) -> int:
        if self.markables == 0:
            raise AgreementError("agreement table has no markables")
        sums = self.counts.sum(axis=1)
        if not np.all(sums == sums[0]):
            raise AgreementError("every markable needs the same number of ratings")
        n = int(sums[0])
        if n < 2:
            raise AgreementError(f"agreement needs at least two raters, got {n}")
        return n


def _item_agreement(table: AgreementTable) -> np.ndarray:
    n = table.raters()
    return (np.square(table.counts).sum(axis=1) - n) / (n * (n - 1))


def observed_agreement(table: AgreementTable) -> float:
    """Mean share of agreeing rater pairs per markable"""
    return float(_item_agreement(table).mean())


def chance_agreement(table: AgreementTable) -> float:
    n = table.raters()
    p = table.counts.sum(axis=0) / (table.markables * n)
    return float(np.square(p).sum())


def fleiss_kappa(table: AgreementTable) -> float:
    if table.counts.shape[1] < 2:
        raise AgreementError("Fleiss' kappa needs at least two categories")
    if np.isclose(chance_agreement(table), 1.0):
        raise AgreementError("all ratings fall into one category; kappa is undefined")
    return float(_statsmodels_fleiss_kappa(table.counts, method="fleiss"))


# --- unitized alpha -------------------------------------------------------------

@dataclass
class Continuum:
    """One annotator's typed units [start, end) over `length` tokens"""
    length: int
    units: List[Tuple[int, int, str]] = field(default_factory=list)

    def validate(self):
        last_end = 0
        for start, end, _ in sorted(self.units):
            if not (0 <= start < end <= self.length):
                raise AgreementError(f"unit [{start}, {end}) outside continuum of length {self.length}")
            if start < last_end:
                raise AgreementError(f"unit [{start}, {end}) overlaps a preceding unit")
            last_end = end

    def sections(self, category: str) -> List[Tuple[int, int, bool]]:
        """(begin, length, is_unit) covering [0, length); other categories count as gap"""
        sections = []
        cursor = 0
        for start, end, label in sorted(self.units):
            if label != category:
                continue
            if start > cursor:
                sections.append((cursor, start - cursor, False))
            sections.append((start, end - start, True))
            cursor = end
        if cursor < self.length:
            sections.append((cursor, self.length - cursor, False))
        return sections


def _section_distance(g: Tuple[int, int, bool], h: Tuple[int, int, bool]) -> float:
    bg, lg, ug = g
    bh, lh, uh = h
    if ug and uh:
        if bg < bh + lh and bh < bg + lg:
            return float((bg - bh) ** 2 + (bg + lg - bh - lh) ** 2)
        return 0.0
    if ug and not uh and lh - lg >= bg - bh >= 0:
        return float(lg ** 2)
    if uh and not ug and lg - lh >= bh - bg >= 0:
        return float(lh ** 2)
    return 0.0


def _category_disagreement(continua: Sequence[Continuum], category: str) -> Tuple[float, float]:
    m = len(continua)
    L = continua[0].length
    sections = [c.sections(category) for c in continua]

    # Sections tile [0, L), so only sections overlapping g can be at a distance from it
    begins = [[b for b, _, _ in secs] for secs in sections]
    observed = 0.0
    for i, j in permutations(range(m), 2):
        for g in sections[i]:
            lo = max(bisect.bisect_right(begins[j], g[0]) - 1, 0)
            hi = bisect.bisect_left(begins[j], g[0] + g[1])
            for h in sections[j][lo:hi]:
                observed += _section_distance(g, h)
    observed /= m * (m - 1) * L * L

    units = [l for secs in sections for _, l, is_unit in secs if is_unit]
    gaps = np.sort(np.array([l for secs in sections for _, l, is_unit in secs if not is_unit], dtype=float))
    suffix = np.concatenate([np.cumsum(gaps[::-1])[::-1], [0.0]])
    n_c = len(units)
    total = 0.0
    for l in units:
        total += (n_c - 1) / 3.0 * (2 * l ** 3 - 3 * l ** 2 + l)
        k = int(np.searchsorted(gaps, l, side="left"))
        total += l ** 2 * (suffix[k] - (l - 1) * (len(gaps) - k))
    denominator = m * L * (m * L - 1) - sum(l * (l - 1) for l in units)
    expected = (2.0 / L) * total / denominator if denominator else 0.0
    return observed, expected


def krippendorff_alpha_u(continua: Sequence[Continuum], category: Optional[str] = None) -> float:
    """Unitized alpha for one category, or jointly over all categories when `category` is None"""
    if len(continua) < 2:
        raise AgreementError("unitized alpha needs at least two annotators")
    lengths = {c.length for c in continua}
    if len(lengths) != 1:
        raise AgreementError(f"continua differ in length: {sorted(lengths)}")
    if continua[0].length <= 0:
        raise AgreementError("continuum is empty")
    for c in continua:
        c.validate()
    if category is None:
        categories = sorted({label for c in continua for _, _, label in c.units})
    else:
        categories = [category]
    observed = expected = 0.0
    for cat in categories:
        d_o, d_e = _category_disagreement(continua, cat)
        observed += d_o
        expected += d_e
    if expected == 0:
        raise AgreementError(f"no units of {category or 'any category'}; alpha is undefined")
    return 1.0 - observed / expected


# --- confusion probability matrix -------------------------------------------------

@dataclass
class ConfusionProbabilities:
    categories: List[str]
    matrix: np.ndarray
    undefined: List[str] = field(default_factory=list)

    def row(self, category: str) -> Dict[str, float]:
        i = self.categories.index(category)
        return {c: float(v) for c, v in zip(self.categories, self.matrix[i])}


def confusion_probability_matrix(ratings: Sequence[Sequence[str]], categories: Sequence[str]) -> ConfusionProbabilities:
    """P(other rater chose the column | one rater chose the row), over all ordered rater pairs.

    Rows of categories nobody used stay zero and are listed in `undefined`.
    """
    categories = list(categories)
    index = {c: j for j, c in enumerate(categories)}
    counts = np.zeros((len(categories), len(categories)))
    for labels in ratings:
        if len(labels) < 2:
            raise AgreementError("confusion probabilities need at least two raters per markable")
        for a, b in permutations(range(len(labels)), 2):
            counts[index[labels[a]], index[labels[b]]] += 1
    totals = counts.sum(axis=1)
    undefined = [c for c, t in zip(categories, totals) if t == 0]
    if undefined:
        log.warning("categories never used by any rater: %s", ", ".join(undefined))
    matrix = np.divide(counts, totals[:, np.newaxis], out=np.zeros_like(counts), where=totals[:, np.newaxis] > 0)
    return ConfusionProbabilities(categories, matrix, undefined)


# --- markables from annotated essays ----------------------------------------------

def _check_aligned(versions: Sequence[Document]):
    if len(versions) < 2:
        raise AgreementError("agreement needs at least two annotations per essay")
    texts = {v.text for v in versions}
    if len(texts) != 1:
        raise AgreementError(f"annotations of {versions[0].essay_id} are over different texts")


def sentence_presence_ratings(essays: Sequence[Sequence[Document]], ctype: ComponentType) -> List[List[str]]:
    """Per sentence and rater: "yes" when a component of the type overlaps the sentence"""
    ratings = []
    for versions in essays:
        _check_aligned(versions)
        for sent in versions[0].sentences:
            row = []
            for doc in versions:
                hit = any(c.ctype is ctype and c.overlaps(sent.char_start, sent.char_end) for c in doc.components)
                row.append("yes" if hit else "no")
            ratings.append(row)
    return ratings


def sentence_type_ratings(essays: Sequence[Sequence[Document]]) -> List[List[str]]:
    """Per sentence and rater: type of the first overlapping component, or None"""
    ratings = []
    for versions in essays:
        _check_aligned(versions)
        for sent in versions[0].sentences:
            row = []
            for doc in versions:
                comp = next((c for c in doc.components if c.overlaps(sent.char_start, sent.char_end)), None)
                row.append(comp.ctype.value if comp else NO_LABEL)
            ratings.append(row)
    return ratings


def sentence_stance_ratings(essays: Sequence[Sequence[Document]]) -> Tuple[List[List[str]], int]:
    """Claim sentences recoded as For / Against / None; returns the ratings and the
    number of sentences whose claims carry mixed stances (the first claim decides)"""
    ratings = []
    mixed = 0
    for versions in essays:
        _check_aligned(versions)
        for sent in versions[0].sentences:
            row = []
            for doc in versions:
                claims = [c for c in doc.components
                          if c.ctype is ComponentType.CLAIM and c.overlaps(sent.char_start, sent.char_end)]
                stances = {c.stance for c in claims if c.stance is not None}
                if len(stances) > 1:
                    mixed += 1
                    log.warning("%s: sentence %d has claims with mixed stances", doc.essay_id, sent.index)
                first = claims[0].stance if claims else None
                row.append(first.value if first else NO_LABEL)
            ratings.append(row)
    return ratings, mixed


def relation_ratings(essays: Sequence[Sequence[Document]]) -> List[List[str]]:
    """Per ordered same-paragraph pair of components all raters share: Support / Attack / Not-Linked"""
    ratings = []
    for versions in essays:
        _check_aligned(versions)
        spans = [{c.span: c for c in doc.components} for doc in versions]
        shared = set(spans[0])
        for s in spans[1:]:
            shared &= set(s)
        base = versions[0]
        for comps in base.components_by_paragraph():
            members = [c for c in comps if c.span in shared]
            for src, tgt in component_pairs(members):
                row = []
                for doc, by_span in zip(versions, spans):
                    a, b = by_span[src.span], by_span[tgt.span]
                    rel = next((r for r in doc.relations if r.source == a.id and r.target == b.id), None)
                    row.append(rel.rtype.value if rel else NOT_LINKED)
                ratings.append(row)
    return ratings


def binary_ratings(ratings: Sequence[Sequence[str]], positive: str) -> List[List[str]]:
    return [["yes" if label == positive else "no" for label in row] for row in ratings]


def token_continua(essays: Sequence[Sequence[Document]]) -> List[Continuum]:
    """One continuum per rater over the concatenated tokens of all essays"""
    if not essays:
        raise AgreementError("no essays to compare")
    raters = len(essays[0])
    continua = [Continuum(0) for _ in range(raters)]
    offset = 0
    for versions in essays:
        _check_aligned(versions)
        if len(versions) != raters:
            raise AgreementError(f"{versions[0].essay_id}: {len(versions)} annotations, expected {raters}")
        length = len(versions[0].tokens)
        for continuum, doc in zip(continua, versions):
            for comp in doc.components:
                first, last = doc.token_range(comp.start, comp.end)
                if first < last:
                    continuum.units.append((offset + first, offset + last, comp.ctype.value))
            continuum.length = offset + length
        offset += length
    return continua


def agreement_report(essays: Sequence[Sequence[Document]]) -> List[Tuple[str, str, float]]:
    """`metric,category,value` rows for components, stance and relations"""
    rows: List[Tuple[str, str, float]] = []

    def table_rows(category: str, ratings: List[List[str]]):
        if not ratings:
            return
        table = AgreementTable.from_labels(ratings, ["yes", "no"])
        rows.append(("observed", category, observed_agreement(table)))
        try:
            rows.append(("fleiss_kappa", category, fleiss_kappa(table)))
        except AgreementError as e:
            log.warning("%s: %s", category, e)

    for ctype in ComponentType:
        table_rows(ctype.value, sentence_presence_ratings(essays, ctype))

    continua = token_continua(essays)
    for ctype in ComponentType:
        try:
            rows.append(("alpha_u", ctype.value, krippendorff_alpha_u(continua, ctype.value)))
        except AgreementError as e:
            log.warning("%s: %s", ctype.value, e)
    try:
        rows.append(("alpha_u", "all", krippendorff_alpha_u(continua)))
    except AgreementError as e:
        log.warning("joint alpha: %s", e)

    stance, mixed = sentence_stance_ratings(essays)
    stance_table = AgreementTable.from_labels(stance, ["For", "Against", NO_LABEL])
    rows.append(("observed", "Stance", observed_agreement(stance_table)))
    try:
        rows.append(("fleiss_kappa", "Stance", fleiss_kappa(stance_table)))
    except AgreementError as e:
        log.warning("stance: %s", e)
    rows.append(("mixed_stance_sentences", "Stance", float(mixed)))

    relations = relation_ratings(essays)
    for rtype in RelationType:
        table_rows(rtype.value, binary_ratings(relations, rtype.value))

    categories = [t.value for t in ComponentType] + [NO_LABEL]
    cpm = confusion_probability_matrix(sentence_type_ratings(essays), categories)
    for row_cat in cpm.categories:
        for col_cat, value in cpm.row(row_cat).items():
            rows.append(("cpm_components", f"{row_cat}->{col_cat}", value))
    if relations:
        rel_cats = [RelationType.SUPPORT.value, RelationType.ATTACK.value, NOT_LINKED]
        cpm = confusion_probability_matrix(relations, rel_cats)
        for row_cat in cpm.categories:
            for col_cat, value in cpm.row(row_cat).items():
                rows.append(("cpm_relations", f"{row_cat}->{col_cat}", value))
    return rows
