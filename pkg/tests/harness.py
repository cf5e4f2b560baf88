"""
harness.py - shared helpers for the test cases under tests/
"""

import sys
import tempfile
import traceback
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import fixture_corpus  # noqa: E402
from config_parser import PipelineConfigParser  # noqa: E402
from corpus import load_corpus, load_split  # noqa: E402


# Colors for output
class Colors:
    RED = '\033[0;31m'
    GREEN = '\033[0;32m'
    YELLOW = '\033[1;33m'
    BLUE = '\033[0;34m'
    NC = '\033[0m'


def log_info(msg):
    print(f"{Colors.BLUE}[TEST-INFO]{Colors.NC} {msg}")


def log_success(msg):
    print(f"{Colors.GREEN}[TEST-SUCCESS]{Colors.NC} {msg}")


def log_warning(msg):
    print(f"{Colors.YELLOW}[TEST-WARNING]{Colors.NC} {msg}")


def log_error(msg):
    print(f"{Colors.RED}[TEST-ERROR]{Colors.NC} {msg}")


_corpus_cache = {}


def fixture_dir() -> Path:
    """Fixture corpus written once per process"""
    if "dir" not in _corpus_cache:
        target = Path(tempfile.mkdtemp(prefix="argstruct-fixture-"))
        fixture_corpus.write_corpus(target)
        _corpus_cache["dir"] = target
    return _corpus_cache["dir"]


def fixture_docs():
    if "docs" not in _corpus_cache:
        _corpus_cache["docs"] = load_corpus(str(fixture_dir()))
    return _corpus_cache["docs"]


def fixture_split():
    """(train, test) essays of the fixture split"""
    text = (fixture_dir() / "split.csv").read_text(encoding="utf-8")
    return load_split(text, fixture_docs())


def case_config(test_file: str):
    """PipelineConfig from the config.yaml next to a test.py"""
    return PipelineConfigParser().parse_yaml(str(Path(test_file).parent / "config.yaml"))


def run_suite(name: str, namespace: dict) -> bool:
    """Run every test_* function of a module namespace; True when all pass"""
    tests = [(key, fn) for key, fn in namespace.items() if key.startswith("test_") and callable(fn)]
    log_info(f"Running {len(tests)} checks in {name}")
    failed = []
    for key, fn in tests:
        try:
            fn()
            log_success(f"✅ {key}")
        except Exception as e:
            failed.append(key)
            log_error(f"❌ {key}: {e}")
            traceback.print_exc()
    if failed:
        log_error(f"{len(failed)}/{len(tests)} checks failed: {', '.join(failed)}")
        return False
    return True
