#!/usr/bin/env python3
"""
test.py - parsing pipeline: gold oracle, trained models, stage checks and baselines
"""

import sys
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from harness import case_config, fixture_docs, fixture_split, log_info, run_suite  # noqa: E402

from baselines import (MajorityBaseline, heuristic_classify, heuristic_identify, heuristic_relations,  # noqa: E402
                       heuristic_stance)
from config import (ComponentType, ConfigError, ContractError, IobLabel, LINKED, RelationType,  # noqa: E402
                    Stance, Task)
from corpus import validate_document  # noqa: E402
from pipeline import (ArgumentStructureParser, GoldPredictor, ParserModels, components_from_iob,  # noqa: E402
                      run_pipeline, train_models)

_models = {}


def _essay(doc_id):
    return next(d for d in fixture_docs() if d.essay_id == doc_id)


def _trained():
    if "models" not in _models:
        train, _ = fixture_split()
        _models["models"] = train_models(train, case_config(__file__))
    return _models["models"]


def _structure(doc):
    spans = {c.id: c.span for c in doc.components}
    return (
        {(c.span, c.ctype) for c in doc.components},
        {(spans[r.source], spans[r.target], r.rtype) for r in doc.relations},
        {(c.span, c.stance) for c in doc.components if c.ctype is ComponentType.CLAIM},
    )


def _without_timings(parsed):
    data = parsed.to_dict(verbose=True)
    data.pop("timings")
    for para in data["paragraphs"]:
        para.pop("explored", None)
    return data


def test_gold_oracle_reproduces_annotations():
    config = replace(case_config(__file__), use_joint=False, jobs=1)
    docs = fixture_docs()
    parser = ArgumentStructureParser(config, GoldPredictor(docs, config))
    for doc, parsed in zip(docs, parser.parse_all(docs)):
        assert parsed.essay_id == doc.essay_id
        assert _structure(parsed.document) == _structure(doc), doc.essay_id
        assert parsed.violations == []
        assert parsed.provenance["identify"] == "model"
        assert parsed.provenance["joint"] == "base"


def test_gold_oracle_with_joint_model_yields_forests():
    config = replace(case_config(__file__), jobs=1)
    docs = fixture_docs()
    parsed = ArgumentStructureParser(config, GoldPredictor(docs, config)).parse_all(docs)
    for doc, result in zip(docs, parsed):
        assert validate_document(result.document) == []
        majors = {c.span for c in result.document.components if c.ctype is ComponentType.MAJOR_CLAIM}
        assert majors == {c.span for c in doc.components if c.ctype is ComponentType.MAJOR_CLAIM}
        assert all("objective" in d for d in result.paragraphs)


def test_trained_pipeline_outputs_valid_forests():
    config = case_config(__file__)
    models = _trained()
    assert all(models.supports(t) for t in Task)
    _, test = fixture_split()
    parsed = ArgumentStructureParser(config, models).parse_all(test)
    assert [p.essay_id for p in parsed] == [d.essay_id for d in test]
    for result in parsed:
        assert result.violations == []
        assert validate_document(result.document) == []
        assert set(result.provenance.values()) <= {"model", "ilp"}
        for comp in result.document.components:
            assert comp.text == result.document.text[comp.start:comp.end]
            if comp.ctype is ComponentType.CLAIM:
                assert comp.stance in (Stance.FOR, Stance.AGAINST)
        data = result.to_dict()
        assert set(data) == {"essay_id", "components", "relations", "provenance", "timings", "violations"}


def test_parallel_parsing_matches_sequential():
    config = case_config(__file__)
    models = _trained()
    _, test = fixture_split()
    parallel = ArgumentStructureParser(config, models).parse_all(test)
    sequential = [ArgumentStructureParser(replace(config, jobs=1), models).parse(d) for d in test]
    assert [_without_timings(p) for p in parallel] == [_without_timings(p) for p in sequential]


def test_missing_stage_model_is_reported():
    config = case_config(__file__)
    for predictor in (None, ParserModels(config)):
        try:
            ArgumentStructureParser(config, predictor).check()
            raise AssertionError("parser without models accepted")
        except ConfigError:
            pass
    try:
        GoldPredictor([], config).identify(_essay("essay01"))
        raise AssertionError("gold lookup of unknown essay succeeded")
    except ConfigError:
        pass


def test_gold_components_with_classifier_only():
    config = replace(case_config(__file__), use_gold_components=True, stages=[Task.CLASSIFY], jobs=1)
    doc = _essay("essay06")
    models = ParserModels(config, _trained().tables, classify_model=_trained().classify_model)
    parsed = run_pipeline(doc, models, config)
    assert parsed.provenance["identify"] == "gold"
    assert parsed.provenance["relations"] == "gold"
    assert parsed.provenance["stance"] == "gold"
    assert {c.span for c in parsed.document.components} == {c.span for c in doc.components}


def test_components_from_iob_cuts_at_paragraphs():
    doc = _essay("essay01")
    labels = [IobLabel.ARG_B] + [IobLabel.ARG_I] * (len(doc.tokens) - 1)
    comps = components_from_iob(doc, labels)
    assert len(comps) == len(doc.paragraphs)
    assert [c.id for c in comps] == ["T1", "T2", "T3", "T4"]
    for comp, para in zip(comps, doc.paragraphs):
        assert para.char_start <= comp.start and comp.end <= para.char_end
    try:
        components_from_iob(doc, labels[:-1])
        raise AssertionError("label count mismatch accepted")
    except ContractError:
        pass


def test_heuristic_baselines():
    doc = _essay("essay01")
    assert heuristic_classify(doc) == {c.id: c.ctype for c in doc.components}

    links = heuristic_relations(doc)
    assert len(links) == 8
    linked = {pair for pair, label in links.items() if label == LINKED}
    by_text = {c.text.split()[0]: c.id for c in doc.components}
    assert linked == {(by_text["poor"], by_text["Uniforms"]), (by_text["parents"], by_text["Uniforms"]),
                      (by_text["students"], by_text["Some"])}

    stances = heuristic_stance(doc)
    attacking = {cid for cid, label in stances.items() if label is RelationType.ATTACK}
    assert attacking == {by_text["Some"], by_text["students"]}

    labels = heuristic_identify(doc)
    assert labels.count(IobLabel.ARG_B) == len(doc.sentences) - 3
    assert all(labels[s.tokens[-1].index] is IobLabel.O for s in doc.sentences)


def test_majority_baseline_ties_and_fit():
    assert MajorityBaseline({"a": 2, "b": 2}, ["b", "a"]).label == "b"
    assert MajorityBaseline({"a": 2, "b": 2}).label == "a"
    fitted = MajorityBaseline.fit(["x", "y", "y"])
    assert fitted.label == "y"
    assert fitted.predict(3) == ["y", "y", "y"]


def main():
    log_info("Starting pipeline test")
    return run_suite("pipeline_test", globals())


if __name__ == '__main__':
    sys.exit(0 if main() else 1)
