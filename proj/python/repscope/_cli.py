"""Console entry point that runs the bundled repscope binary."""

import os
import pathlib
import sys


def main():
    binary = pathlib.Path(__file__).with_name("bin") / "repscope"
    if not binary.exists():
        sys.exit(f"repscope binary not found at {binary}")
    os.execv(binary, [str(binary), *sys.argv[1:]])
