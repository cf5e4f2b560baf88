#!/usr/bin/env python3

import argparse
import csv
import glob
import json
import os
import sys
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Sequence

from agreement import agreement_report
from baselines import heuristic_baseline, majority_baseline
from config import (ArgStructError, ConfigError, PHI_PRESETS, PhiWeights, PipelineConfig, Task,
                    TASK_FEATURE_GROUPS)
from config_parser import PipelineConfigParser, parse_group, parse_stage
from corpus import (corpus_stats, load_annotation_sets, load_corpus, load_essay, load_split, make_split,
                    to_brat, validate_document)
from document import Document
from evaluation import (base_predictions, compare_systems, cross_validate, gold_labels, holdout_evaluate,
                        improvement_simulation, instance_pairs, label_distribution, macro_prf,
                        normalize_prediction, pairwise_average, phi_grid, score_rows, task_labels,
                        ConfusionMatrix)
from model_store import ModelStore, training_checksum
from pipeline import ArgumentStructureParser, train_models
from utils import (ICON_CHECK, ICON_CROSS, ICON_LOAD, ICON_RUN, ICON_SKIP, ICON_STATS, ICON_TRAIN,
                   ICON_WARN, ICON_WRITE, default_jobs, say, setup_logging)

DEFAULT_FRACTIONS = [round(0.1 * k, 1) for k in range(11)]


class UsageError(Exception):
    """Flag combination argparse cannot express; exit code 2"""


# --- shared helpers -------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def write_rows(header: Sequence[str], rows: Iterable[Sequence], out: Optional[str] = None):
    """CSV to --out, or standard output when no path is given"""
    handle = open(out, 'w', encoding='utf-8', newline='') if out else sys.stdout
    try:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    finally:
        if out:
            handle.close()
    if out:
        say(ICON_WRITE, f"wrote {out}")


def _require(args, name: str, flag: str):
    if not getattr(args, name, None):
        raise UsageError(f"{args.command} requires {flag}")
    return getattr(args, name)


def parse_features_flag(value: str, config: PipelineConfig) -> Dict[Task, List]:
    """`lex,struct` keeps those groups for every stage; `classify=lex,ind;relations=struct`
    sets stages one by one"""
    groups = dict(config.feature_groups)
    if "=" not in value:
        wanted = {parse_group(name) for name in value.split(",") if name.strip()}
        for task, allowed in TASK_FEATURE_GROUPS.items():
            groups[task] = [g for g in allowed if g in wanted]
        return groups
    for part in value.split(";"):
        if not part.strip():
            continue
        stage, _, names = part.partition("=")
        groups[parse_stage(stage)] = [parse_group(n) for n in names.split(",") if n.strip()]
    return groups


def build_config(args, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    """Config file (or `base`) first, command-line flags on top"""
    parser = PipelineConfigParser()
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise ConfigError(f"configuration file '{args.config}' not found")
        config = parser.parse_file(args.config)
    else:
        config = base or PipelineConfig()
    config.seed = args.seed
    config.jobs = args.jobs or default_jobs()
    if args.phi_preset:
        if args.phi_preset not in PHI_PRESETS:
            raise ConfigError(f"unknown phi preset '{args.phi_preset}'")
        config.phi = PHI_PRESETS[args.phi_preset]
    if any(v is not None for v in (args.phi_r, args.phi_cr, args.phi_c)):
        config.phi = PhiWeights(
            r=config.phi.r if args.phi_r is None else args.phi_r,
            cr=config.phi.cr if args.phi_cr is None else args.phi_cr,
            c=config.phi.c if args.phi_c is None else args.phi_c,
        )
    if args.features:
        config.feature_groups = parse_features_flag(args.features, config)
    if args.gold_components:
        config.use_gold_components = True
    if getattr(args, "stage", None):
        config.stages = [parse_stage(s) for s in args.stage]
    parser.validate(config)
    return config


def load_docs(args):
    """Corpus and, with --split, its train/test halves"""
    corpus_dir = _require(args, "corpus", "--corpus")
    say(ICON_LOAD, f"loading corpus from {corpus_dir}")
    corpus = load_corpus(corpus_dir)
    if not corpus:
        raise ConfigError(f"no essays found in '{corpus_dir}'")
    if not args.split:
        return corpus, corpus, []
    with open(args.split, 'r', encoding='utf-8') as f:
        train, test = load_split(f.read(), corpus)
    return corpus, train, test


def _tasks(args, config: PipelineConfig) -> List[Task]:
    if getattr(args, "task", None):
        tasks = [parse_stage(t) for t in args.task]
    else:
        tasks = list(config.stages)
    if config.use_gold_components:
        tasks = [t for t in tasks if t is not Task.IDENTIFY]
    if not tasks:
        raise UsageError("no task left to evaluate")
    return tasks


# --- subcommands ----------------------------------------------------------------

def cmd_stats(args):
    corpus, _, _ = load_docs(args)
    stats = corpus_stats(corpus)
    say(ICON_STATS, f"{stats.essays} essays, {stats.total('components')} components, "
                    f"{stats.total('supports') + stats.total('attacks')} relations")
    write_rows(("field", "all", "avg_per_essay", "std"), stats.as_rows(), args.out)
    return 0


def cmd_validate(args):
    corpus, _, _ = load_docs(args)
    problems = []
    for doc in corpus:
        problems.extend(validate_document(doc))
    for problem in problems:
        print(f"{ICON_CROSS} {problem}", file=sys.stderr)
    if problems:
        say(ICON_CROSS, f"{len(problems)} structure violations in {len(corpus)} essays")
        return 1
    say(ICON_CHECK, f"{len(corpus)} essays valid")
    return 0


def cmd_split(args):
    corpus, _, _ = load_docs(args)
    text = make_split(corpus, args.test_share, args.seed)
    if args.out:
        with open(args.out, 'w', encoding='utf-8') as f:
            f.write(text)
        say(ICON_WRITE, f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_train(args):
    model_dir = args.models or args.out
    if not model_dir:
        raise UsageError("train requires --models (or --out) for the model directory")
    config = build_config(args)
    _, train, _ = load_docs(args)

    split_text = ""
    if args.split:
        with open(args.split, 'r', encoding='utf-8') as f:
            split_text = f.read()
    ids = {d.essay_id for d in train}
    files = [p for p in glob.glob(os.path.join(args.corpus, "*"))
             if os.path.basename(p).split(".")[0] in ids and os.path.isfile(p)]
    checksum = training_checksum(files, split_text, config)

    store = ModelStore(model_dir)
    if not args.force_retrain and store.is_current(checksum, config.stages):
        say(ICON_SKIP, "No training input changes detected (checksum match). Skipping training.")
        print(f"   Checksum: {checksum}", file=sys.stderr)
        return 0

    say(ICON_TRAIN, f"training {', '.join(t.value for t in config.stages)} on {len(train)} essays")
    models = train_models(train, config)
    store.save(models, checksum)
    say(ICON_WRITE, f"Training checksum written: {model_dir} -> {checksum}")
    say(ICON_CHECK, f"models saved to {model_dir}")
    return 0


def _essays_to_parse(args, config: PipelineConfig) -> List[Document]:
    if args.essay:
        docs = []
        for path in args.essay:
            ann = os.path.splitext(path)[0] + ".ann"
            docs.append(load_essay(path, ann if config.use_gold_components else None))
        return docs
    _, train, test = load_docs(args)
    return test if args.split else train


def cmd_parse(args):
    store = ModelStore(_require(args, "models", "--models"))
    saved = PipelineConfigParser().from_dict(store.manifest()["config"])
    config = build_config(args, base=saved)
    models = store.load(config)
    config.stages = [t for t in config.stages if models.supports(t)]
    if Task.IDENTIFY not in config.stages and not config.use_gold_components:
        say(ICON_WARN, "no identification model in the model directory; essays are parsed without components")
    docs = _essays_to_parse(args, config)
    if not docs:
        raise UsageError("parse requires --essay or --corpus")

    say(ICON_RUN, f"parsing {len(docs)} essays with stages {', '.join(t.value for t in config.stages)}")
    parsed = ArgumentStructureParser(config, models).parse_all(docs)

    as_json = args.format == "json" or (args.out or "").endswith(".json")
    if as_json:
        payload = [p.to_dict(verbose=args.verbose > 0) for p in parsed]
        text = json.dumps(payload if len(payload) > 1 else payload[0], indent=2, ensure_ascii=False) + "\n"
        _write_text(text, args.out)
    elif len(parsed) == 1 and not (args.out and os.path.isdir(args.out)):
        _write_text(to_brat(parsed[0].document), args.out)
    else:
        out_dir = _require(args, "out", "--out (a directory when several essays are parsed)")
        os.makedirs(out_dir, exist_ok=True)
        for result in parsed:
            _write_text(to_brat(result.document), os.path.join(out_dir, result.essay_id + ".ann"))
    return 0


def _write_text(text: str, out: Optional[str]):
    if not out:
        sys.stdout.write(text)
        return
    with open(out, 'w', encoding='utf-8') as f:
        f.write(text)
    say(ICON_WRITE, f"wrote {out}")


def cmd_eval(args):
    config = build_config(args)
    corpus, train, test = load_docs(args)
    if args.phi_grid:
        return _phi_grid(args, config, train)

    tasks = _tasks(args, config)
    # "both" needs the final parse; the base output is recovered from it
    system = "final" if args.system == "both" else args.system
    if args.split:
        say(ICON_RUN, f"train on {len(train)} essays, test on {len(test)}")
        run = holdout_evaluate(train, test, tasks, config, system=system)
        gold_docs = test
    else:
        say(ICON_RUN, f"{args.folds}-fold cross-validation over {len(corpus)} essays")
        run = cross_validate(corpus, tasks, config, folds=args.folds, seed=args.seed, system=system)
        gold_docs = corpus

    rows = []
    for task in tasks:
        if args.system == "both":
            base, final, test_result = compare_systems(run, gold_docs, task, config)
            rows += score_rows(task, "base", base)
            rows += score_rows(task, "final", final)
            mark = ICON_CHECK if test_result.significant else ICON_WARN
            say(mark, f"{task.value}: McNemar {test_result.statistic:.3f} (b={test_result.b}, c={test_result.c}), "
                      f"{'significant' if test_result.significant else 'not significant'} at p<.05")
        else:
            rows += score_rows(task, args.system, run.scores(task))
    write_rows(("task", "system", "class", "P", "R", "F1"), rows, args.out)
    return 0


def _gold_base_predictions(args, config: PipelineConfig, docs: List[Document]):
    """Out-of-fold base classifier output over gold components"""
    run_config = replace(config, use_gold_components=True, stages=[Task.CLASSIFY, Task.RELATIONS])
    say(ICON_RUN, f"{args.folds}-fold base predictions over {len(docs)} essays")
    cv = cross_validate(docs, [Task.CLASSIFY, Task.RELATIONS], run_config, folds=args.folds,
                        seed=args.seed, system="base")
    return base_predictions(cv, docs), run_config


def _phi_grid(args, config: PipelineConfig, docs: List[Document]):
    items, run_config = _gold_base_predictions(args, config, docs)
    rows = []
    for row in phi_grid(items, run_config):
        rows.append((row.preset, row.components_f1, row.relations_f1, row.stats.claims_to_premises,
                     row.stats.premises_to_claims, 100.0 * row.stats.valid_share))
    write_rows(("preset", "components_f1", "relations_f1", "cl_to_pr", "pr_to_cl", "valid_trees_pct"),
               rows, args.out)
    return 0


def cmd_baseline(args):
    config = build_config(args)
    corpus, train, test = load_docs(args)
    test = test if args.split else corpus
    rows = []
    for task in [parse_stage(t) for t in (args.task or [t.value for t in Task])]:
        classes = task_labels(task, config)
        heuristic = ConfusionMatrix(classes)
        majority = ConfusionMatrix(classes)
        baseline = majority_baseline(task, label_distribution(task, train, config), classes)
        for doc in test:
            prediction = normalize_prediction(task, heuristic_baseline(task, doc))
            heuristic = heuristic.update(instance_pairs(task, doc, prediction, config))
            gold = gold_labels(task, doc, config)
            majority = majority.update((label, baseline.label) for label in
                                       (gold if task is Task.IDENTIFY else gold.values()))
        rows += score_rows(task, "heuristic", macro_prf(heuristic))
        rows += score_rows(task, "majority", macro_prf(majority))
        say(ICON_STATS, f"{task.value}: majority label '{baseline.label}'")
    write_rows(("task", "system", "class", "P", "R", "F1"), rows, args.out)
    return 0


def cmd_agreement(args):
    corpus_dir = _require(args, "corpus", "--corpus")
    config = build_config(args)
    annotators, essays = load_annotation_sets(corpus_dir)
    say(ICON_LOAD, f"{len(essays)} essays annotated by {', '.join(annotators)}")
    rows = agreement_report(essays)
    annotations = {name: [versions[i] for versions in essays] for i, name in enumerate(annotators)}
    for task in Task:
        mean, _ = pairwise_average(annotations, task, config)
        rows.append(("pairwise_f1", task.value, mean))
    write_rows(("metric", "category", "value"), rows, args.out)
    return 0


def cmd_simulate(args):
    config = build_config(args)
    _, train, _ = load_docs(args)
    items, run_config = _gold_base_predictions(args, config, train)
    fractions = [float(f) for f in args.fractions.split(",")] if args.fractions else DEFAULT_FRACTIONS
    rows = []
    for which in args.which:
        say(ICON_RUN, f"simulating improved {which} over {len(fractions)} fractions, {args.repeats} repeats")
        for point in improvement_simulation(items, fractions, which, run_config, seed=args.seed,
                                            repeats=args.repeats):
            rows.append((point.which, point.fraction, point.task.value, point.mean_f1))
    write_rows(("which", "fraction", "task", "mean_f1"), rows, args.out)
    return 0


# --- argument parsing ---------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--corpus', help='Directory of <id>.txt/<id>.ann essays')
    common.add_argument('--split', help='Split CSV (ID;SET)')
    common.add_argument('--models', help='Model directory')
    common.add_argument('--config', help='Pipeline configuration file (YAML/JSON)')
    common.add_argument('--out', help='Output path (standard output when omitted)')
    common.add_argument('--seed', type=int, default=0, help='Random seed (default: 0)')
    common.add_argument('--jobs', type=int, help='Parallel essays (default: $ARGSTRUCT_JOBS or CPU count)')
    common.add_argument('--phi', dest='phi_preset', help=f"φ preset: {', '.join(PHI_PRESETS)}")
    common.add_argument('--phi-r', type=float, help='Weight of the relation scores')
    common.add_argument('--phi-cr', type=float, help='Weight of the claim-relation scores')
    common.add_argument('--phi-c', type=float, help='Weight of the claim scores')
    common.add_argument('--features', help='Feature groups, e.g. "lex,struct" or "classify=lex,ind;relations=struct"')
    common.add_argument('--gold-components', action='store_true', help='Use gold components (skip identification)')
    common.add_argument('-v', '--verbose', action='count', default=0, help='More logging (-vv for debug)')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="argstruct",
        description="Argumentation structure parser for persuasive essays",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s stats --corpus essays/
  %(prog)s baseline --task classify --corpus essays/ --split split.csv
  %(prog)s train --corpus essays/ --split split.csv --models models/
  %(prog)s parse --models models/ --essay essay001.txt --out essay001.ann
        """
    )
    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    p = subparsers.add_parser('stats', parents=[common], help='Corpus statistics')
    p.set_defaults(func=cmd_stats)

    p = subparsers.add_parser('validate', parents=[common], help='Check every essay structure is a forest')
    p.set_defaults(func=cmd_validate)

    p = subparsers.add_parser('split', parents=[common], help='Write a random train/test split')
    p.add_argument('--test-share', type=float, default=0.2, help='Share of test essays (default: 0.2)')
    p.set_defaults(func=cmd_split)

    p = subparsers.add_parser('train', parents=[common], help='Train the stage models')
    p.add_argument('--stage', action='append', help='Stage to train (repeatable, default: all)')
    p.add_argument('--force-retrain', action='store_true', help='Retrain even when the checksum matches')
    p.set_defaults(func=cmd_train)

    p = subparsers.add_parser('parse', parents=[common], help='Parse essays with trained models')
    p.add_argument('--essay', action='append', help='Essay .txt file (repeatable)')
    p.add_argument('--format', choices=('ann', 'json'), default='ann', help='Output format (default: ann)')
    p.set_defaults(func=cmd_parse)

    p = subparsers.add_parser('eval', parents=[common], help='Cross-validate or test the parser')
    p.add_argument('--task', action='append', help='Task to score (repeatable, default: enabled stages)')
    p.add_argument('--system', choices=('final', 'base', 'both'), default='final',
                   help='Score the final parse, the base classifiers, or both with McNemar')
    p.add_argument('--folds', type=int, default=5, help='Cross-validation folds (default: 5)')
    p.add_argument('--phi-grid', action='store_true', help='Evaluate every φ preset over fixed base predictions')
    p.set_defaults(func=cmd_eval)

    p = subparsers.add_parser('baseline', parents=[common], help='Heuristic and majority baselines')
    p.add_argument('--task', action='append', help='Task (repeatable, default: all)')
    p.set_defaults(func=cmd_baseline)

    p = subparsers.add_parser('agreement', parents=[common], help='Inter-annotator agreement')
    p.set_defaults(func=cmd_agreement)

    p = subparsers.add_parser('simulate', parents=[common], help='Improvement simulation of the joint model')
    p.add_argument('--which', action='append', choices=('types', 'relations', 'both'),
                   help='Base predictions to improve (repeatable, default: all three)')
    p.add_argument('--fractions', help='Comma-separated fractions (default: 0,0.1,...,1)')
    p.add_argument('--repeats', type=int, default=10, help='Random repeats per fraction (default: 10)')
    p.add_argument('--folds', type=int, default=5, help='Folds for the base predictions (default: 5)')
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    if not args.command:
        parser.print_help(sys.stderr)
        return 2
    setup_logging(args.verbose)
    if args.command == "simulate" and not args.which:
        args.which = ["types", "relations", "both"]

    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("\nOperation cancelled by user", file=sys.stderr)
        return 1
    except (ArgStructError, OSError) as e:
        print(f"{ICON_CROSS} Error: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
