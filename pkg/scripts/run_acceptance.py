"""Run the acceptance suite and print only the per-criterion verdict lines."""

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def main():
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "tests/test_acceptance.py", "-q", "-s", "-p", "no:cacheprovider"],
        cwd=ROOT, capture_output=True, text=True,
    )
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith(("[PASS]", "[FAIL]"))]
    seen = set()
    for ln in lines:
        if ln not in seen:
            print(ln)
            seen.add(ln)
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
