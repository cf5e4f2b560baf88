import concurrent.futures
import logging
import os
import sys
from typing import Callable, Iterable, List, Optional, TypeVar

from config import JOBS_ENV, LOG_LEVEL_ENV, LOG_PLAIN_ENV

T = TypeVar("T")
R = TypeVar("R")

# Plain icons avoid wide Unicode in terminals and CI logs
PLAIN_LOG = os.getenv(LOG_PLAIN_ENV, '0').lower() in ('1', 'true', 'yes')
ICON_RUN = '🚀' if not PLAIN_LOG else '[RUN]'
ICON_LOAD = '📦' if not PLAIN_LOG else '[LOAD]'
ICON_TRAIN = '🔨' if not PLAIN_LOG else '[TRAIN]'
ICON_SKIP = '♻️ ' if not PLAIN_LOG else '[SKIP]'
ICON_STATS = '📊' if not PLAIN_LOG else '[STATS]'
ICON_WRITE = '📝' if not PLAIN_LOG else '[WRITE]'
ICON_WARN = '⚠️ ' if not PLAIN_LOG else '[WARN]'
ICON_CHECK = '✅' if not PLAIN_LOG else '[OK]'
ICON_CROSS = '❌' if not PLAIN_LOG else '[FAIL]'

_configured = False


def setup_logging(verbosity: int = 0):
    """Configure the root logger once; ARGSTRUCT_LOG sets the level, -v raises it"""
    global _configured
    level_name = os.getenv(LOG_LEVEL_ENV, 'WARNING').upper()
    level = getattr(logging, level_name, logging.WARNING)
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = min(level, logging.INFO)
    if _configured:
        logging.getLogger().setLevel(level)
        return
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    _configured = True


def say(icon: str, message: str):
    """Progress line for humans; data never goes through here"""
    print(f"{icon} {message}", file=sys.stderr)


def default_jobs() -> int:
    value = os.getenv(JOBS_ENV)
    if value and value.isdigit() and int(value) > 0:
        return int(value)
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: Optional[int] = 1) -> List[R]:
    """Order-preserving map over a thread pool; jobs <= 1 runs inline"""
    items = list(items)
    jobs = jobs or 1
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(fn, items))
