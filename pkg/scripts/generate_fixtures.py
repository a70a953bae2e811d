#!/usr/bin/env python3
"""Regenerate the golden session fixtures under tests/data/ and the frontend
copy.  Run after intentional protocol or wire-format changes, then review the
diff before committing."""

import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

import golden_support  # noqa: E402


def main() -> int:
    artifacts = golden_support.generate(write=True)
    print(f"golden session: {artifacts['meta']['end_ms']} ms")
    print(f"  scores script entries: {len(artifacts['scores'])}")
    print(f"  distance readings:     {len(artifacts['distances'])}")
    print(f"  feedback lines:        {len(artifacts['feedback_text'].splitlines())}")
    print(f"  outbound lines:        {len(artifacts['outbound_text'].splitlines())}")

    frontend_fixtures = REPO / "frontend" / "tests" / "fixtures"
    if frontend_fixtures.parent.parent.exists():
        frontend_fixtures.mkdir(parents=True, exist_ok=True)
        shutil.copy(
            golden_support.GOLDEN_OUTBOUND, frontend_fixtures / "golden_outbound.jsonl"
        )
        print(f"  copied outbound log to {frontend_fixtures}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
