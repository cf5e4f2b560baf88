import json
import os
from typing import Any, Dict, List

import yaml

from config import (ConfigError, FeatureGroup, PHI_PRESETS, PhiWeights, PipelineConfig, Task,
                    TASK_FEATURE_GROUPS)

PRESETS = ("essays", "microtext")

_SCALARS = {
    "epochs": int,
    "degree": int,
    "margin": float,
    "seed": int,
    "jobs": int,
    "use_gold_components": bool,
    "use_joint": bool,
    "base_heuristic_fallback": bool,
    "dependency_cutoff": int,
    "unigram_cutoff": int,
    "production_cutoff": int,
}


def parse_stage(name: str) -> Task:
    try:
        return Task(str(name).strip().lower())
    except ValueError:
        raise ConfigError(f"unknown stage '{name}' (expected one of {[t.value for t in Task]})")


def parse_group(name: str) -> FeatureGroup:
    key = str(name).strip().lower()
    for group in FeatureGroup:
        if key in (group.value, group.name.lower()):
            return group
    raise ConfigError(f"unknown feature group '{name}' (expected one of {[g.value for g in FeatureGroup]})")


def parse_phi(value: Any) -> PhiWeights:
    """A preset name or a mapping with any of r, cr, c"""
    if isinstance(value, str):
        if value not in PHI_PRESETS:
            raise ConfigError(f"unknown phi preset '{value}' (expected one of {sorted(PHI_PRESETS)})")
        return PHI_PRESETS[value]
    if isinstance(value, dict):
        base = PHI_PRESETS[value.get("preset", "balanced")] if value.get("preset") else PhiWeights()
        try:
            phi = PhiWeights(r=float(value.get("r", base.r)), cr=float(value.get("cr", base.cr)),
                             c=float(value.get("c", base.c)))
        except (TypeError, ValueError):
            raise ConfigError(f"phi weights must be numbers, got {value}")
        phi.validate()
        return phi
    raise ConfigError(f"phi must be a preset name or a mapping, got {type(value).__name__}")


class PipelineConfigParser:
    """Reads a PipelineConfig from a YAML or JSON file"""

    def parse_file(self, file_path: str) -> PipelineConfig:
        if file_path.endswith(".json"):
            return self.parse_json(file_path)
        return self.parse_yaml(file_path)

    def parse_yaml(self, file_path: str) -> PipelineConfig:
        with open(file_path, 'r', encoding='utf-8') as f:
            try:
                data = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError(f"invalid YAML in {file_path}: {e}")
        return self._parse_dict(data or {}, os.path.dirname(os.path.abspath(file_path)))

    def parse_json(self, file_path: str) -> PipelineConfig:
        with open(file_path, 'r', encoding='utf-8') as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"invalid JSON in {file_path}: {e}")
        return self._parse_dict(data, os.path.dirname(os.path.abspath(file_path)))

    def from_dict(self, data: Dict[str, Any]) -> PipelineConfig:
        """A config as written by PipelineConfig.to_dict, e.g. from a model manifest"""
        return self._parse_dict(data)

    def _parse_dict(self, data: Dict[str, Any], base_dir: str = ".") -> PipelineConfig:
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        # test-case configs nest the pipeline settings under `pipeline`
        if isinstance(data.get("pipeline"), dict):
            data = data["pipeline"]

        config = PipelineConfig()
        if "stages" in data:
            config.stages = [parse_stage(s) for s in data["stages"] or []]
        if "preset" in data:
            if data["preset"] not in PRESETS:
                raise ConfigError(f"unknown preset '{data['preset']}' (expected one of {list(PRESETS)})")
            config.preset = data["preset"]
        features = data.get("features", data.get("feature_groups"))
        if features is not None:
            config.feature_groups = self._parse_features(features, config)
        if "phi" in data:
            config.phi = parse_phi(data["phi"])
        for key, kind in _SCALARS.items():
            if key in data:
                try:
                    setattr(config, key, kind(data[key]))
                except (TypeError, ValueError):
                    raise ConfigError(f"'{key}' must be of type {kind.__name__}, got {data[key]!r}")
        for key in ("embeddings_path", "subjectivity_lexicon_path"):
            if data.get(key):
                setattr(config, key, os.path.join(base_dir, data[key]))

        self.validate(config)
        return config

    def _parse_features(self, features: Dict[str, Any], config: PipelineConfig) -> Dict[Task, List[FeatureGroup]]:
        if not isinstance(features, dict):
            raise ConfigError("'features' must map stage names to group lists")
        groups = dict(config.feature_groups)
        for stage, names in features.items():
            task = parse_stage(stage)
            if isinstance(names, str):
                names = [n for n in names.split(",") if n.strip()]
            groups[task] = [parse_group(n) for n in names or []]
        return groups

    def validate(self, config: PipelineConfig) -> bool:
        config.phi.validate()
        if config.epochs <= 0:
            raise ConfigError(f"epochs must be positive, got {config.epochs}")
        if config.degree not in (1, 2):
            raise ConfigError(f"degree must be 1 or 2, got {config.degree}")
        if config.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {config.jobs}")
        for task, groups in config.feature_groups.items():
            allowed = TASK_FEATURE_GROUPS[task]
            stray = [g.value for g in groups if g not in allowed]
            if stray:
                raise ConfigError(f"feature groups {stray} are not available for stage '{task.value}'")
        return True
