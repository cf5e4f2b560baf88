#!/usr/bin/env python3
"""
run_tests.py - test runner for argstruct

Every directory under tests/ holding a config.yaml and a test.py is a test
case; its test.py exposes main() returning True on success.
"""

import argparse
import importlib.util
import os
import sys
import time
from pathlib import Path


# Colors for output
class Colors:
    RED = '\033[0;31m'
    GREEN = '\033[0;32m'
    YELLOW = '\033[1;33m'
    BLUE = '\033[0;34m'
    NC = '\033[0m'


def log_info(msg):
    print(f"{Colors.BLUE}[INFO]{Colors.NC} {msg}")


def log_success(msg):
    print(f"{Colors.GREEN}[SUCCESS]{Colors.NC} {msg}")


def log_warning(msg):
    print(f"{Colors.YELLOW}[WARNING]{Colors.NC} {msg}")


def log_error(msg):
    print(f"{Colors.RED}[ERROR]{Colors.NC} {msg}")


def run_test_case(test_dir: Path) -> bool:
    """Load a case's test.py and call its main()"""
    test_name = test_dir.name

    log_info("=" * 40)
    log_info(f"Running test case: {test_name}")
    log_info("=" * 40)

    if not (test_dir / "config.yaml").exists():
        log_error(f"Missing config.yaml in {test_dir}")
        return False
    test_script = test_dir / "test.py"
    if not test_script.exists():
        log_error(f"Missing test.py in {test_dir}")
        return False

    spec = importlib.util.spec_from_file_location(f"{test_name}_module", test_script)
    test_module = importlib.util.module_from_spec(spec)
    original_path = sys.path.copy()
    sys.path.insert(0, str(test_dir))
    started = time.monotonic()
    try:
        spec.loader.exec_module(test_module)
        if not hasattr(test_module, 'main'):
            log_error(f"Test module {test_name} has no main() function")
            return False
        if test_module.main():
            log_success(f"Test case {test_name} PASSED ({time.monotonic() - started:.1f}s)")
            return True
        log_error(f"Test case {test_name} FAILED")
        return False
    except Exception as e:
        log_error(f"Failed to run test case {test_name}: {e}")
        return False
    finally:
        sys.path = original_path


def main(argv=None) -> bool:
    parser = argparse.ArgumentParser(description="Run the argstruct test cases")
    parser.add_argument('cases', nargs='*', help='Test case names (default: all under tests/)')
    args = parser.parse_args(argv)

    project_root = Path(__file__).resolve().parent
    tests_dir = project_root / "tests"
    os.chdir(project_root)
    # plain icons keep captured CLI output free of wide characters
    os.environ.setdefault("ARGSTRUCT_LOG_PLAIN", "1")

    if not tests_dir.exists():
        log_error(f"Tests directory not found: {tests_dir}")
        return False
    test_dirs = sorted(d for d in tests_dir.iterdir() if d.is_dir() and (d / "test.py").exists())
    if args.cases:
        unknown = set(args.cases) - {d.name for d in test_dirs}
        if unknown:
            log_error(f"Unknown test cases: {', '.join(sorted(unknown))}")
            return False
        test_dirs = [d for d in test_dirs if d.name in args.cases]
    if not test_dirs:
        log_warning("No test directories found")
        return True

    log_info(f"Starting test suite for argstruct ({len(test_dirs)} cases)")
    failed = []
    for test_dir in test_dirs:
        if not run_test_case(test_dir):
            failed.append(test_dir.name)
        print()

    log_info("=" * 40)
    log_info("Test Summary")
    log_info("=" * 40)
    log_info(f"Total tests: {len(test_dirs)}")
    log_info(f"Passed: {len(test_dirs) - len(failed)}")
    if failed:
        log_error(f"Failed: {len(failed)} ({', '.join(failed)})")
        return False
    log_success("All tests passed!")
    return True


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
