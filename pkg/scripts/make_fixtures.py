#!/usr/bin/env python3
"""Write the bundled synthetic workload fixtures to a directory.

Usage: python scripts/make_fixtures.py [out_dir]   (default: ./fixtures)
"""

import sys
from pathlib import Path

from cfaudit.fixtures import write_fixture_files


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("fixtures")
    written = write_fixture_files(out_dir)
    for name, path in sorted(written.items()):
        print(f"{name:18s} -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
