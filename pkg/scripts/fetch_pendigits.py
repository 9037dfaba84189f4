"""Extract the Pendigits dataset (10992 x 16, 10 classes) into data/pendigits.csv.

The UCI pen-based digit recognition data ships inside the ``keel-ds`` wheel
under the KEEL name "penbased". The wheel is fetched with pip, so this works
behind a PyPI mirror with no other network access.

    python scripts/fetch_pendigits.py [--out data/pendigits.csv]
"""
import argparse
import csv
import glob
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

MEMBER = "keel_ds/data/balanced/raw/penbased.dat"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "pendigits.csv"))
    parser.add_argument("--wheel", help="use an already downloaded keel_ds wheel")
    args = parser.parse_args(argv)

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel
        if wheel is None:
            subprocess.run(
                [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "keel-ds==0.2.5", "-d", tmp],
                check=True,
            )
            wheel = glob.glob(f"{tmp}/keel_ds-*.whl")[0]
        text = zipfile.ZipFile(wheel).read(MEMBER).decode()

    rows = [[v.strip() for v in line.split(",")] for line in text.splitlines() if line and not line.startswith("@")]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(1, 17)] + ["digit"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
