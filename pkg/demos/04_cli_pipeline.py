"""The same pipeline through the command line, one stage per file.

Every stage reads the previous stage's CSV output, so each step can be
inspected or swapped for real data. Outputs land in a temporary directory.
"""

import json
import sys
import tempfile
from pathlib import Path

from infopos.cli import main


def run(*argv):
    print("$ infopos", " ".join(argv))
    code = main(list(argv))
    if code:
        sys.exit(code)


work = Path(tempfile.mkdtemp(prefix="infopos-demo-"))
(work / "spec.json").write_text(json.dumps({"seed": 7, "repetitions": [1]}))

run("synth", "--spec", str(work / "spec.json"), "--out", str(work / "corpus"))
run("segment", "--catalog", str(work / "corpus" / "catalog.json"), "--phase", "neural-op",
    "--cut", "Mid", "--out", str(work))
run("passport", "--segments", str(work / "segments_current.csv"), "--degree", "2", "--out", str(work))
run("dataset", "--segments", str(work / "segments_current.csv"), "--passports",
    str(work / "passports.csv"), "--degree", "2", "--out", str(work))
run("eval", "--dataset", str(work / "dataset_current_mid_d2.csv"), "--algorithm", "BDT",
    "--seed", "1")
print(f"\nartifacts in {work}")
