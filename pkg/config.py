from dataclasses import dataclass
from typing import Dict, List, Optional
from enum import Enum

# Version tag written into every serialized model and checked on load
MODEL_FORMAT_VERSION = 1

# Default number of passes over the training data for all learners
DEFAULT_EPOCHS = 10

# χ² critical value for one degree of freedom at p = .05
MCNEMAR_CRITICAL_VALUE = 3.841

# Environment variables
LOG_LEVEL_ENV = "ARGSTRUCT_LOG"
LOG_PLAIN_ENV = "ARGSTRUCT_LOG_PLAIN"
JOBS_ENV = "ARGSTRUCT_JOBS"


class ArgStructError(ValueError):
    """Base class of all errors raised by the parser"""


class CorpusError(ArgStructError):
    pass


class BratParseError(CorpusError):
    def __init__(self, message: str, line_no: int = 0):
        super().__init__(f"line {line_no}: {message}" if line_no else message)
        self.line_no = line_no


class DanglingReferenceError(CorpusError):
    pass


class OverlapError(CorpusError):
    pass


class ConfigError(ArgStructError):
    pass


class ModelError(ArgStructError):
    pass


class AgreementError(ArgStructError):
    pass


class ContractError(ArgStructError):
    pass


class ComponentType(Enum):
    MAJOR_CLAIM = "MajorClaim"
    CLAIM = "Claim"
    PREMISE = "Premise"


class Stance(Enum):
    FOR = "For"
    AGAINST = "Against"


class RelationType(Enum):
    SUPPORT = "Support"
    ATTACK = "Attack"

    @property
    def brat_name(self) -> str:
        return "supports" if self is RelationType.SUPPORT else "attacks"

    @classmethod
    def from_brat(cls, name: str) -> "RelationType":
        lowered = name.lower()
        if lowered in ("supports", "support"):
            return cls.SUPPORT
        if lowered in ("attacks", "attack"):
            return cls.ATTACK
        raise ValueError(f"unknown relation type '{name}'")


class IobLabel(Enum):
    # Declaration order is the decoding tie-break order
    ARG_B = "Arg-B"
    ARG_I = "Arg-I"
    O = "O"


IOB_LABELS: List[IobLabel] = [IobLabel.ARG_B, IobLabel.ARG_I, IobLabel.O]

LINKED = "Linked"
NOT_LINKED = "Not-Linked"


class SplitSet(Enum):
    TRAIN = "TRAIN"
    TEST = "TEST"


class Task(Enum):
    IDENTIFY = "identify"
    CLASSIFY = "classify"
    RELATIONS = "relations"
    STANCE = "stance"


STAGE_ORDER: List[Task] = [Task.IDENTIFY, Task.CLASSIFY, Task.RELATIONS, Task.STANCE]


class FeatureGroup(Enum):
    """Feature groups; the value is the name prefix of every feature in the group"""
    STRUCTURAL = "struct"
    SYNTACTIC = "syn"
    LEXSYN = "lexsyn"
    PROBABILITY = "prob"
    LEXICAL = "lex"
    INDICATOR = "ind"
    CONTEXTUAL = "ctx"
    DISCOURSE = "disc"
    EMBEDDING = "emb"
    PMI = "pmi"
    SHARED_NOUNS = "shno"
    SENTIMENT = "senti"


# Feature groups each task can use (all enabled by default except lexical for relations)
TASK_FEATURE_GROUPS: Dict[Task, List[FeatureGroup]] = {
    Task.IDENTIFY: [FeatureGroup.STRUCTURAL, FeatureGroup.SYNTACTIC, FeatureGroup.LEXSYN,
                    FeatureGroup.PROBABILITY],
    Task.CLASSIFY: [FeatureGroup.LEXICAL, FeatureGroup.STRUCTURAL, FeatureGroup.INDICATOR,
                    FeatureGroup.CONTEXTUAL, FeatureGroup.SYNTACTIC, FeatureGroup.PROBABILITY,
                    FeatureGroup.DISCOURSE, FeatureGroup.EMBEDDING],
    Task.RELATIONS: [FeatureGroup.LEXICAL, FeatureGroup.SYNTACTIC, FeatureGroup.STRUCTURAL,
                     FeatureGroup.INDICATOR, FeatureGroup.DISCOURSE, FeatureGroup.PMI,
                     FeatureGroup.SHARED_NOUNS],
    Task.STANCE: [FeatureGroup.LEXICAL, FeatureGroup.SENTIMENT, FeatureGroup.SYNTACTIC,
                  FeatureGroup.STRUCTURAL, FeatureGroup.DISCOURSE, FeatureGroup.EMBEDDING],
}

DEFAULT_DISABLED_GROUPS: Dict[Task, List[FeatureGroup]] = {
    Task.RELATIONS: [FeatureGroup.LEXICAL],
}


@dataclass(frozen=True)
class PhiWeights:
    """Hyperparameters of the weight fusion w = φr·r + φcr·cr + φc·c"""
    r: float = 0.5
    cr: float = 0.25
    c: float = 0.25

    def validate(self):
        for name, value in (("phi_r", self.r), ("phi_cr", self.cr), ("phi_c", self.c)):
            if value < 0:
                raise ConfigError(f"{name} must be non-negative, got {value}")


PHI_PRESETS: Dict[str, PhiWeights] = {
    "naive": PhiWeights(1.0, 0.0, 0.0),
    "relation": PhiWeights(0.5, 0.5, 0.0),
    "claim": PhiWeights(0.0, 0.0, 1.0),
    "equal": PhiWeights(1 / 3, 1 / 3, 1 / 3),
    "same": PhiWeights(0.25, 0.25, 0.5),
    "balanced": PhiWeights(0.5, 0.25, 0.25),
}


@dataclass
class PipelineConfig:
    """All knobs of training and parsing"""
    stages: List[Task] = None
    feature_groups: Dict[Task, List[FeatureGroup]] = None
    phi: PhiWeights = None
    epochs: int = DEFAULT_EPOCHS
    degree: int = 2
    margin: float = 1.0
    seed: int = 0
    jobs: int = 1
    use_gold_components: bool = False
    use_joint: bool = True
    base_heuristic_fallback: bool = True
    preset: str = "essays"

    # Frequency cutoffs, always computed on training data only
    dependency_cutoff: int = 2000
    unigram_cutoff: int = 500
    production_cutoff: int = 500

    # Optional external resources
    embeddings_path: Optional[str] = None
    subjectivity_lexicon_path: Optional[str] = None

    def __post_init__(self):
        if self.stages is None:
            self.stages = list(STAGE_ORDER)
        if self.feature_groups is None:
            self.feature_groups = {}
            for task, groups in TASK_FEATURE_GROUPS.items():
                disabled = DEFAULT_DISABLED_GROUPS.get(task, [])
                self.feature_groups[task] = [g for g in groups if g not in disabled]
        if self.phi is None:
            self.phi = PHI_PRESETS["balanced"]

    @property
    def microtext(self) -> bool:
        return self.preset == "microtext"

    def groups_for(self, task: Task) -> List[FeatureGroup]:
        return list(self.feature_groups.get(task, []))

    def stage_enabled(self, task: Task) -> bool:
        return task in self.stages

    def component_labels(self) -> List[ComponentType]:
        if self.microtext:
            return [ComponentType.CLAIM, ComponentType.PREMISE]
        return [ComponentType.MAJOR_CLAIM, ComponentType.CLAIM, ComponentType.PREMISE]

    def to_dict(self) -> Dict:
        return {
            "stages": [t.value for t in self.stages],
            "feature_groups": {t.value: [g.value for g in gs] for t, gs in sorted(
                self.feature_groups.items(), key=lambda kv: kv[0].value)},
            "phi": {"r": self.phi.r, "cr": self.phi.cr, "c": self.phi.c},
            "epochs": self.epochs,
            "degree": self.degree,
            "margin": self.margin,
            "seed": self.seed,
            "use_gold_components": self.use_gold_components,
            "use_joint": self.use_joint,
            "base_heuristic_fallback": self.base_heuristic_fallback,
            "preset": self.preset,
            "dependency_cutoff": self.dependency_cutoff,
            "unigram_cutoff": self.unigram_cutoff,
            "production_cutoff": self.production_cutoff,
            "embeddings_path": self.embeddings_path,
            "subjectivity_lexicon_path": self.subjectivity_lexicon_path,
        }
