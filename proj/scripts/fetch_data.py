#!/usr/bin/env python3
"""Fetch the Adult and ProPublica COMPAS CSV files into data/.

The files are taken from the `responsibly` wheel on PyPI, which ships the
unmodified public CSVs. This works wherever pip can reach a package index.
"""

import argparse
import hashlib
import pathlib
import subprocess
import sys
import tempfile
import zipfile

WHEEL = "responsibly==0.1.2"
MEMBERS = {
    "responsibly/dataset/adult/adult.data": "adult.data",
    "responsibly/dataset/compas/compas-scores-two-years.csv": "compas-scores-two-years.csv",
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "--only-binary=:all:", "-d", tmp, WHEEL],
            check=True,
        )
        wheels = list(pathlib.Path(tmp).glob("*.whl"))
        if len(wheels) != 1:
            print(f"expected one wheel, found {len(wheels)}", file=sys.stderr)
            return 1
        with zipfile.ZipFile(wheels[0]) as archive:
            for member, name in MEMBERS.items():
                data = archive.read(member)
                (out / name).write_bytes(data)
                print(f"{name}: {len(data)} bytes sha256={hashlib.sha256(data).hexdigest()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
