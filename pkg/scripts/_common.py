import argparse
import csv
from pathlib import Path


def parser(doc, out):
    p = argparse.ArgumentParser(description=doc)
    p.add_argument("--out", type=Path, default=Path("results") / out)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--rounds", type=int, default=20)
    return p


def write(path: Path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {path}")
