#!/usr/bin/env python3
"""
test.py - feature tables, extractors, group toggling and parse-tree helpers
"""

import sys
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from harness import case_config, fixture_docs, log_info, run_suite  # noqa: E402

from config import ContractError, FeatureGroup, Task  # noqa: E402
from corpus import parse_brat  # noqa: E402
from features import FeatureExtractor, FeatureTables  # noqa: E402
from syntax import parse_tree  # noqa: E402

TREE = "(ROOT (S (NP (PRP We)) (VP (MD should) (VP (VB act) (ADVP (RB now)))) (. .)))"


def _essay(doc_id):
    return next(d for d in fixture_docs() if d.essay_id == doc_id)


def _component(doc, text_start):
    return next(c for c in doc.components if c.text.startswith(text_start))


def _extractor(config=None):
    config = config or case_config(__file__)
    return FeatureExtractor(config, FeatureTables.fit(fixture_docs(), config))


def test_tables_from_training_essays():
    config = case_config(__file__)
    tables = FeatureTables.fit(fixture_docs(), config)
    assert tables.argb_probability(["my", "opinion", ","]) == 1.0
    assert tables.type_probability(["to", "sum", "up", ","]) == {"MajorClaim": 1.0}
    assert tables.type_probability([]) == {}
    assert tables.in_unigram_vocab("uniforms")
    assert tables.pmi
    again = FeatureTables.from_dict(tables.to_dict())
    assert again.to_dict() == tables.to_dict()
    assert again.in_unigram_vocab("uniforms")


def test_sequence_features_one_vector_per_token():
    doc = _essay("essay01")
    extractor = _extractor()
    vectors = extractor.sequence_features(doc)
    assert len(vectors) == len(doc.tokens)
    assert vectors[0]["struct:in_intro"] == 1.0
    assert vectors[-1]["struct:in_concl"] == 1.0
    assert vectors[-1]["struct:is_fullstop"] == 1.0
    only_struct = extractor.sequence_features(doc, [FeatureGroup.STRUCTURAL])
    assert all(key.startswith("struct:") for v in only_struct for key in v)
    assert extractor.token_features(doc, 5) == vectors[5]


def test_component_feature_groups():
    doc = _essay("essay01")
    extractor = _extractor()
    major = _component(doc, "school uniforms")
    full = extractor.component_features(doc, major)
    assert full["lex:uni=uniforms"] == 1.0
    assert full["ind:thesis"] == 1.0
    assert full["ind:first_person"] == 1.0
    assert full["struct:first_in_para"] == 1.0
    assert full["prob:type=MajorClaim"] > 0.0

    for group in (FeatureGroup.LEXICAL, FeatureGroup.STRUCTURAL, FeatureGroup.INDICATOR):
        only = extractor.component_features(doc, major, [group])
        assert only and all(key.startswith(f"{group.value}:") for key in only), group
        rest = [g for g in extractor.config.groups_for(Task.CLASSIFY) if g is not group]
        without = extractor.component_features(doc, major, rest)
        assert not any(key.startswith(f"{group.value}:") for key in without), group


def test_microtext_preset_drops_preceding_tokens():
    config = case_config(__file__)
    doc = _essay("essay01")
    premise = _component(doc, "poor students")
    essays = _extractor(config).component_features(doc, premise, [FeatureGroup.INDICATOR])
    assert essays.get("ind:backward") == 1.0
    micro = _extractor(replace(config, preset="microtext"))
    assert "ind:backward" not in micro.component_features(doc, premise, [FeatureGroup.INDICATOR])
    assert "struct:in_intro" not in micro.component_features(doc, _component(doc, "school uniforms"),
                                                              [FeatureGroup.STRUCTURAL])


def test_pair_features_contract_and_nouns():
    doc = _essay("essay04")
    extractor = _extractor()
    claim = _component(doc, "Games can improve")
    premise = _component(doc, "many games")
    other = _component(doc, "Games help children")
    try:
        extractor.pair_features(doc, claim, claim)
        raise AssertionError("pair with itself accepted")
    except ContractError:
        pass
    try:
        extractor.pair_features(doc, premise, other)
        raise AssertionError("cross-paragraph pair accepted")
    except ContractError:
        pass
    f = extractor.pair_features(doc, premise, claim, [FeatureGroup.SHARED_NOUNS, FeatureGroup.PMI,
                                                      FeatureGroup.STRUCTURAL])
    assert f["shno:count"] == 1.0 and f["shno:shared"] == 1.0
    assert f["struct:target_before_source"] == 1.0
    assert f["struct:comps_between"] == 0.0
    assert "pmi:src_pos_incoming" in f and "pmi:tgt_neg_outgoing" in f
    assert all(key.split(":")[0] in ("shno", "pmi", "struct") for key in f)


def test_stance_features():
    doc = _essay("essay01")
    extractor = _extractor()
    against = _component(doc, "Some argue")
    f = extractor.stance_features(doc, against, [FeatureGroup.LEXICAL, FeatureGroup.SENTIMENT])
    assert f["lex:uni=argue"] == 1.0
    assert f["senti:positive"] == 0.0


def test_parse_tree_helpers():
    tree = parse_tree(TREE)
    assert tree is not None and len(tree) == 5
    assert tree.depth == 5
    assert tree.lca_label(0, 1) == "S"
    assert tree.lca_label(2, 3) == "VP"
    assert abs(tree.lca_ratio(1, 0) - 0.6) < 1e-12
    assert tree.lexico_syntactic(1) == ["should|S", "S>VP|should", "VP+.|."]
    assert tree.productions() == ["S->NP VP .", "NP->PRP", "VP->MD VP", "VP->VB ADVP", "ADVP->RB"]
    assert tree.count_label("VP") == 2
    assert parse_tree("(S (NP") is None


def test_syntactic_token_features_from_sidecar():
    text = "A title\n\nWe should act now.\n"
    doc = parse_brat(text, "", essay_id="tree", sidecar={"trees": [TREE]})
    assert doc.has_layer("trees")
    vectors = _extractor().sequence_features(doc, [FeatureGroup.SYNTACTIC])
    assert vectors[0]["syn:lcapre"] == -1.0
    assert abs(vectors[0]["syn:lcafol"] - 0.6) < 1e-12
    assert vectors[0]["syn:lcafol_type=S"] == 1.0
    assert vectors[-1]["syn:lcafol"] == -1.0


def main():
    log_info("Starting features test")
    return run_suite("features_test", globals())


if __name__ == '__main__':
    sys.exit(0 if main() else 1)
