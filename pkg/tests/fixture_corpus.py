#!/usr/bin/env python3
"""
fixture_corpus.py - the bundled fixture corpus

Essays are written in an inline markup, `[key|Type|covered text]`, and turned
into brat .txt/.ann files with offsets computed here. Run it with a directory
argument to materialise the corpus for manual CLI use.
"""

import os
import re
import sys
from pathlib import Path
from typing import Dict, List, Tuple

MARKUP_RE = re.compile(r"\[(\w+)\|(MajorClaim|Claim|Premise)\|([^\]]+)\]")

# (essay id, title, paragraphs, relations (source, target, type), claim stances)
ESSAYS = [
    ("essay01", "Should students wear uniforms?", [
        "Schools differ in many ways. In my opinion, [MC1|MajorClaim|school uniforms should be required].",
        "[C1|Claim|Uniforms reduce social pressure]. For example, [P1|Premise|poor students are not mocked "
        "for their clothes]. Moreover, [P2|Premise|parents save money on fashion].",
        "[C2|Claim|Some argue uniforms limit self-expression]. However, [P3|Premise|students can express "
        "themselves through their work].",
        "To sum up, [MC2|MajorClaim|uniforms benefit every student].",
    ], [("P1", "C1", "supports"), ("P2", "P1", "supports"), ("P3", "C2", "attacks")],
        {"C1": "For", "C2": "Against"}),

    ("essay02", "Is online learning better than classroom teaching?", [
        "Technology has changed education. I believe that [MC1|MajorClaim|online learning is better than "
        "classroom teaching].",
        "[C1|Claim|Online courses offer great flexibility]. Because [P1|Premise|students can study at any "
        "time], they balance work and school. Furthermore, [P2|Premise|recorded lectures can be replayed].",
        "[C2|Claim|Classroom teaching builds social skills]. However, [P3|Premise|online forums also let "
        "students interact]. Admittedly, [P4|Premise|group work is harder online].",
        "In conclusion, [MC2|MajorClaim|online learning serves modern students best].",
    ], [("P1", "C1", "supports"), ("P2", "C1", "supports"), ("P3", "C2", "attacks"), ("P4", "C2", "supports")],
        {"C1": "For", "C2": "Against"}),

    ("essay03", "Should cities ban cars from downtown?", [
        "Traffic is a growing concern. In my view, [MC1|MajorClaim|cities should ban cars from downtown areas].",
        "First of all, [C1|Claim|car bans improve air quality]. Studies show that [P1|Premise|pollution drops "
        "when traffic is reduced].",
        "[C2|Claim|Pedestrians benefit from car free streets]. For instance, [P2|Premise|accidents become far "
        "less common]. As a result, [P3|Premise|families feel safe walking downtown].",
        "[C3|Claim|Shop owners may lose customers]. Nevertheless, [P4|Premise|more pedestrians often means "
        "more sales].",
        "To conclude, [MC2|MajorClaim|banning cars makes downtown areas healthier].",
    ], [("P1", "C1", "supports"), ("P2", "C2", "supports"), ("P3", "C2", "supports"), ("P4", "C3", "attacks")],
        {"C1": "For", "C2": "For", "C3": "Against"}),

    ("essay04", "Do video games harm children?", [
        "Many parents worry about video games. However, I think [MC1|MajorClaim|video games do not harm "
        "children].",
        "[C1|Claim|Games can improve problem solving skills]. Since [P1|Premise|many games require planning], "
        "[P2|Premise|players learn to think ahead].",
        "[C2|Claim|Games help children make friends]. For example, [P3|Premise|online teams need cooperation].",
        "[C3|Claim|Some games contain violent content]. But [P4|Premise|age ratings guide parents in choosing "
        "games].",
        "Overall, [MC2|MajorClaim|video games are a positive part of childhood].",
    ], [("P1", "P2", "supports"), ("P2", "C1", "supports"), ("P3", "C2", "supports"), ("P4", "C3", "attacks")],
        {"C1": "For", "C2": "For", "C3": "Against"}),

    ("essay05", "Should university education be free?", [
        "Tuition costs keep rising. Therefore, [MC1|MajorClaim|university education should be free for "
        "everyone].",
        "[C1|Claim|Free education gives equal opportunities]. In particular, [P1|Premise|talented students "
        "from poor families can attend]. Moreover, [P2|Premise|society gains more skilled workers].",
        "[C2|Claim|Free universities would cost taxpayers a lot]. On the other hand, [P3|Premise|educated "
        "citizens pay more taxes later].",
        "In short, [MC2|MajorClaim|free university education benefits the whole society].",
    ], [("P1", "C1", "supports"), ("P2", "C1", "supports"), ("P3", "C2", "attacks")],
        {"C1": "For", "C2": "Against"}),

    ("essay06", "Is it better to live in the city or the countryside?", [
        "People choose different places to live. I strongly believe that [MC1|MajorClaim|living in the city "
        "is better than living in the countryside].",
        "[C1|Claim|Cities offer more job opportunities]. For example, [P1|Premise|most large companies have "
        "offices in cities].",
        "[C2|Claim|Cities provide better public services]. Specifically, [P2|Premise|hospitals and schools "
        "are closer]. In addition, [P3|Premise|public transport is widely available].",
        "[C3|Claim|The countryside is quieter and cleaner]. Yet [P4|Premise|many city parks offer calm places "
        "too].",
        "To sum up, [MC2|MajorClaim|the city is the better place to live].",
    ], [("P1", "C1", "supports"), ("P2", "C2", "supports"), ("P3", "C2", "supports"), ("P4", "C3", "attacks")],
        {"C1": "For", "C2": "For", "C3": "Against"}),

    ("essay07", "Should homework be abolished?", [
        "Homework is part of every school day. In my opinion, [MC1|MajorClaim|homework should not be "
        "abolished].",
        "[C1|Claim|Homework reinforces what students learn in class]. Because [P1|Premise|practice "
        "strengthens memory], [P2|Premise|students remember lessons longer].",
        "[C2|Claim|Too much homework causes stress]. However, [P3|Premise|teachers can limit the amount of "
        "homework].",
        "In conclusion, [MC2|MajorClaim|homework remains a useful learning tool].",
    ], [("P1", "P2", "supports"), ("P2", "C1", "supports"), ("P3", "C2", "attacks")],
        {"C1": "For", "C2": "Against"}),
]

TEST_ESSAYS = ("essay06", "essay07")

# Hand-counted statistics of essay01
ESSAY01_STATS = {
    "sentences": 8, "tokens": 68, "paragraphs": 4, "components": 7, "major_claims": 2, "claims": 2,
    "premises": 3, "claims_for": 1, "claims_against": 1, "supports": 2, "attacks": 1, "arguments": 2,
    "arguments_with_attack": 1, "serial_arguments": 1, "nonarg_tokens": 28, "nonarg_sentences": 1,
    "multi_component_sentences": 0, "paragraphs_with_unlinked": 0,
}

# Second annotator: edits applied to the first annotator's components
ANNOTATOR_EDITS = {
    "essay01": [("retype", "P2", "Claim")],
    "essay02": [("extend", "P2", "Furthermore, ")],
    "essay03": [],
}


def render(title: str, paragraphs: List[str]) -> Tuple[str, Dict[str, Tuple[str, int, int]]]:
    """Plain essay text and key -> (type, start, end)"""
    text = title + "\n\n"
    spans = {}
    for k, para in enumerate(paragraphs):
        pos = 0
        for m in MARKUP_RE.finditer(para):
            text += para[pos:m.start()]
            key, ctype, covered = m.groups()
            spans[key] = (ctype, len(text), len(text) + len(covered))
            text += covered
            pos = m.end()
        text += para[pos:]
        text += "\n" if k < len(paragraphs) - 1 else ""
    return text + "\n", spans


def brat(text: str, spans: Dict[str, Tuple[str, int, int]], relations, stances) -> str:
    ordered = sorted(spans.items(), key=lambda kv: kv[1][1])
    tid = {key: f"T{i + 1}" for i, (key, _) in enumerate(ordered)}
    lines = [f"{tid[key]}\t{ctype} {start} {end}\t{text[start:end]}" for key, (ctype, start, end) in ordered]
    attr = 1
    for key, _ in ordered:
        if key in stances and spans[key][0] == "Claim":
            lines.append(f"A{attr}\tStance {tid[key]} {stances[key]}")
            attr += 1
    for i, (src, tgt, rtype) in enumerate(relations):
        lines.append(f"R{i + 1}\t{rtype} Arg1:{tid[src]} Arg2:{tid[tgt]}")
    return "\n".join(lines) + "\n"


def essay_files(essay) -> Tuple[str, str]:
    essay_id, title, paragraphs, relations, stances = essay
    text, spans = render(title, paragraphs)
    return text, brat(text, spans, relations, stances)


def second_annotator(essay) -> str:
    essay_id, title, paragraphs, relations, stances = essay
    text, spans = render(title, paragraphs)
    spans = dict(spans)
    relations = list(relations)
    stances = dict(stances)
    for edit, key, value in ANNOTATOR_EDITS.get(essay_id, []):
        ctype, start, end = spans[key]
        if edit == "retype":
            spans[key] = (value, start, end)
            relations = [r for r in relations if r[0] != key]
            if value == "Claim":
                stances[key] = "For"
        elif edit == "extend":
            spans[key] = (ctype, start - len(value), end)
    return brat(text, spans, relations, stances)


def write_corpus(target_dir) -> Path:
    """Essays plus a split CSV; returns the directory"""
    target = Path(target_dir)
    target.mkdir(parents=True, exist_ok=True)
    for essay in ESSAYS:
        text, ann = essay_files(essay)
        (target / f"{essay[0]}.txt").write_text(text, encoding="utf-8")
        (target / f"{essay[0]}.ann").write_text(ann, encoding="utf-8")
    split = ["ID;SET"] + [f"{e[0]};{'TEST' if e[0] in TEST_ESSAYS else 'TRAIN'}" for e in ESSAYS]
    (target / "split.csv").write_text("\n".join(split) + "\n", encoding="utf-8")
    return target


def write_annotation_sets(target_dir) -> Path:
    """Essays annotated by annotators `a1` and `a2` as <id>.<annotator>.ann"""
    target = Path(target_dir)
    target.mkdir(parents=True, exist_ok=True)
    for essay in ESSAYS:
        if essay[0] not in ANNOTATOR_EDITS:
            continue
        text, ann = essay_files(essay)
        (target / f"{essay[0]}.txt").write_text(text, encoding="utf-8")
        (target / f"{essay[0]}.a1.ann").write_text(ann, encoding="utf-8")
        (target / f"{essay[0]}.a2.ann").write_text(second_annotator(essay), encoding="utf-8")
    return target


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: fixture_corpus.py <target-dir>", file=sys.stderr)
        return 2
    target = write_corpus(argv[0])
    write_annotation_sets(os.path.join(argv[0], "agreement"))
    print(f"fixture corpus written to {target}")
    return 0


if __name__ == '__main__':
    sys.exit(main())
