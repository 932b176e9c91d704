"""Prepare the Chorley-Ribble cancer data and run the single-pattern test.

The data (58 larynx and 978 lung cancer cases, coordinates in km) ship with
the R package ``spatstat.data`` as the marked pattern ``chorley``. Two routes:

1. With R and spatstat.data installed (``install.packages("spatstat.data")``):

       python scripts/fetch_chorley.py

   exports the pattern through ``Rscript``.

2. From a marked CSV with columns ``x,y,marks`` exported elsewhere, e.g. in R
   ``write.csv(as.data.frame(chorley), "chorley.csv", row.names=FALSE)``:

       python scripts/fetch_chorley.py --from-csv chorley.csv

Either route writes ``data/chorley/larynx.csv`` and ``data/chorley/lung.csv``
with a declared window equal to the bounding rectangle of the study region,
then runs ``akme test-single larynx.csv lung.csv --normalize``. The acceptance
suite picks the files up from that directory or from ``AKME_CHORLEY_DIR``.
"""

import argparse
import csv
import shutil
import subprocess
import sys
from pathlib import Path

# bounding rectangle of the chorley observation window (km)
CHORLEY_WINDOW = (343.45, 410.41, 366.45, 431.79)
MARKS = ("larynx", "lung")

R_EXPORT = r"""
suppressMessages(library(spatstat.data))
data(chorley)
w <- chorley$window
df <- data.frame(x=chorley$x, y=chorley$y, marks=as.character(chorley$marks))
cat(sprintf("# window=%.17g,%.17g,%.17g,%.17g\n", w$xrange[1], w$yrange[1], w$xrange[2], w$yrange[2]))
write.csv(df, stdout(), row.names=FALSE)
"""


def export_with_r():
    if shutil.which("Rscript") is None:
        sys.exit("Rscript not found; install R and spatstat.data or use --from-csv")
    out = subprocess.run(["Rscript", "-e", R_EXPORT], check=True, capture_output=True, text=True).stdout
    lines = out.splitlines()
    window = CHORLEY_WINDOW
    if lines and lines[0].startswith("# window="):
        window = tuple(float(v) for v in lines[0].split("=", 1)[1].split(","))
        lines = lines[1:]
    return list(csv.DictReader(lines)), window


def read_marked_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"x", "y", "marks"} <= set(rows[0]):
        sys.exit(f"{path}: expected columns x,y,marks")
    return rows, CHORLEY_WINDOW


def write_split(rows, window, outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for mark in MARKS:
        sel = [r for r in rows if r["marks"].strip().lower() == mark]
        if not sel:
            sys.exit(f"no rows with mark {mark!r}")
        path = outdir / f"{mark}.csv"
        with open(path, "w", newline="") as fh:
            fh.write("# window=" + ",".join(repr(float(v)) for v in window) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y"])
            for r in sel:
                w.writerow([r["x"], r["y"]])
        print(f"wrote {path} ({len(sel)} points)", flush=True)
        paths.append(path)
    return paths


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--from-csv", type=Path, help="marked CSV with columns x,y,marks")
    ap.add_argument("--outdir", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "chorley")
    ap.add_argument("--no-test", action="store_true", help="only write the files")
    args = ap.parse_args()
    rows, window = read_marked_csv(args.from_csv) if args.from_csv else export_with_r()
    larynx, lung = write_split(rows, window, args.outdir)
    if not args.no_test:
        subprocess.run([sys.executable, "-m", "akme.cli", "test-single", str(larynx), str(lung),
                        "--normalize"], check=True)


if __name__ == "__main__":
    main()
