import hashlib
import json
import logging
import os
from datetime import datetime
from typing import Dict, List, Optional, Sequence

from config import MODEL_FORMAT_VERSION, ModelError, PipelineConfig, Task
from features import FeatureTables
from learners import ClassifierModel, SequenceModel
from pipeline import ParserModels

log = logging.getLogger(__name__)

CHECKSUM_FILE = "training.checksum"
MANIFEST_FILE = "manifest.json"


def _digest_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            h.update(chunk)
    return h.hexdigest()


def training_checksum(corpus_files: Sequence[str], split_text: str, config: PipelineConfig) -> str:
    """sha256 over every training input: corpus file digests, split and normalized config"""
    items = [f"{os.path.basename(p)}:{_digest_file(p)}" for p in sorted(corpus_files)]
    items.append("split:" + hashlib.sha256(split_text.encode('utf-8')).hexdigest())
    items.append("config:" + json.dumps(config.to_dict(), sort_keys=True))
    items.append(f"format:{MODEL_FORMAT_VERSION}")
    return hashlib.sha256("\n".join(items).encode('utf-8')).hexdigest()


class ModelStore:
    """Model directory: one JSON file per stage, a manifest and the training checksum"""

    def __init__(self, model_dir: str):
        self.model_dir = model_dir

    def _path(self, name: str) -> str:
        return os.path.join(self.model_dir, name)

    def stage_file(self, task: Task) -> str:
        return self._path(f"{task.value}.json")

    def read_checksum(self) -> Optional[str]:
        path = self._path(CHECKSUM_FILE)
        if not os.path.exists(path):
            return None
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return f.read().strip()
        except OSError as e:
            log.warning("could not read previous checksum: %s", e)
            return None

    def is_current(self, checksum: str, stages: Sequence[Task]) -> bool:
        """True when the stored models were trained from exactly these inputs"""
        return self.read_checksum() == checksum and all(os.path.exists(self.stage_file(t)) for t in stages)

    def save(self, models: ParserModels, checksum: Optional[str] = None) -> List[str]:
        os.makedirs(self.model_dir, exist_ok=True)
        written = []
        tables = models.tables.to_dict()
        for task in Task:
            model = models.model_for(task)
            if model is None:
                continue
            path = self.stage_file(task)
            with open(path, 'w', encoding='utf-8') as f:
                json.dump({"model": model.to_dict(), "tables": tables}, f, sort_keys=True)
            written.append(path)
        manifest = {
            "format": MODEL_FORMAT_VERSION,
            "stages": [t.value for t in Task if models.model_for(t) is not None],
            "config": models.config.to_dict(),
            "created": datetime.now().isoformat(),
        }
        with open(self._path(MANIFEST_FILE), 'w', encoding='utf-8') as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
        if checksum:
            with open(self._path(CHECKSUM_FILE), 'w', encoding='utf-8') as f:
                f.write(checksum + "\n")
        log.info("saved %d stage models to %s", len(written), self.model_dir)
        return written

    def manifest(self) -> Dict:
        path = self._path(MANIFEST_FILE)
        if not os.path.exists(path):
            raise ModelError(f"no model manifest in '{self.model_dir}'")
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)

    def load(self, config: PipelineConfig, stages: Optional[Sequence[Task]] = None) -> ParserModels:
        """Load the stage models present in the directory; `stages` must all be there"""
        if not os.path.isdir(self.model_dir):
            raise ModelError(f"model directory '{self.model_dir}' not found")
        models = ParserModels(config)
        tables = None
        for task in Task:
            path = self.stage_file(task)
            if not os.path.exists(path):
                continue
            try:
                with open(path, 'r', encoding='utf-8') as f:
                    data = json.load(f)
            except (json.JSONDecodeError, OSError) as e:
                raise ModelError(f"cannot read {path}: {e}")
            if tables is None:
                tables = FeatureTables.from_dict(data.get("tables") or {})
            loader = SequenceModel if task is Task.IDENTIFY else ClassifierModel
            models.set_model(task, loader.from_dict(data["model"]))
        for task in stages or []:
            if models.model_for(task) is None:
                raise ModelError(f"no {task.value} model in '{self.model_dir}'")
        models.tables = tables or FeatureTables()
        return models
